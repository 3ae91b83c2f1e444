"""Exact density-matrix simulation of 1-2 qubit circuits.

The native gate vocabulary is the phased X rotation
``PRX(theta, phi) = Rz(phi) Rx(theta) Rz(-phi)`` plus the CZ gate.
States are dense complex density matrices; everything here is a pure
function of its inputs (plus an explicit seed for sampling).

Bit-ordering convention, used everywhere in this package: qubit 0 is the
leftmost label in ket notation and the most significant bit of a
bitstring, so for two qubits the basis index of ``|q0 q1>`` is
``2*q0 + q1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

MEASUREMENT_BASES = ("Z", "X", "Y")

# PRx angles that rotate a basis' +1 eigenstate onto |0>:
#   X -> Ry(-pi/2), Y -> Rx(pi/2), Z -> nothing.
BASIS_ROTATION_ANGLES: dict[str, tuple[float, float] | None] = {
    "Z": None,
    "X": (-math.pi / 2, math.pi / 2),
    "Y": (math.pi / 2, 0.0),
}

# Probabilities this far below zero indicate a broken channel, not roundoff.
NEG_PROB_TOL = 1e-10


@dataclass(frozen=True)
class GateOp:
    """One native operation: ``prx`` (theta, phi), ``cz``, or the no-op
    ``prepared_identity`` placeholder (no gate, no noise)."""

    kind: str
    qubits: tuple[int, ...]
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.kind not in ("prx", "cz", "prepared_identity"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "prx" and len(self.qubits) != 1:
            raise ValueError("prx acts on exactly one qubit")
        if self.kind == "cz" and (
            len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]
        ):
            raise ValueError("cz acts on two distinct qubits")
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("gate angles must be finite")


def prx(qubit: int, theta: float, phi: float) -> GateOp:
    return GateOp("prx", (qubit,), theta, phi)


def cz(q0: int, q1: int) -> GateOp:
    return GateOp("cz", (q0, q1))


@dataclass
class Circuit:
    """Ordered gate list plus a per-qubit measurement basis.

    ``label`` is free-form metadata used to key circuits in exported
    batches and replayed hardware counts.
    """

    n_qubits: int
    ops: list[GateOp] = field(default_factory=list)
    meas_basis: tuple[str, ...] = ()
    label: str | None = None

    def __post_init__(self):
        if self.n_qubits not in (1, 2):
            raise ValueError("only 1- and 2-qubit circuits are supported")
        if not self.meas_basis:
            self.meas_basis = ("Z",) * self.n_qubits
        if len(self.meas_basis) != self.n_qubits:
            raise ValueError("meas_basis length must equal n_qubits")
        for b in self.meas_basis:
            if b not in MEASUREMENT_BASES:
                raise ValueError(f"invalid measurement basis {b!r}")
        for op in self.ops:
            if any(q >= self.n_qubits or q < 0 for q in op.qubits):
                raise ValueError("gate qubit index out of range")


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``"XY"`` on two qubits.

    ``coefficient`` is carried for Hamiltonian terms; :func:`expectation`
    reports the bare Pauli expectation and leaves scaling to the caller.
    """

    factors: str
    coefficient: float = 1.0

    def __post_init__(self):
        if not self.factors or any(f not in "IXYZ" for f in self.factors):
            raise ValueError(f"invalid Pauli string {self.factors!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.factors)

    def matrix(self) -> np.ndarray:
        out = PAULI[self.factors[0]]
        for f in self.factors[1:]:
            out = np.kron(out, PAULI[f])
        return out


def ground_state(n_qubits: int) -> np.ndarray:
    """|0...0><0...0| as a dense density matrix."""
    dim = 2**n_qubits
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def prx_unitary(theta: float, phi: float) -> np.ndarray:
    """PRX(theta, phi) = Rz(phi) Rx(theta) Rz(-phi).

    Multiplying out the three factors gives
    ``[[cos(t/2), -i e^{-i phi} sin(t/2)], [-i e^{i phi} sin(t/2), cos(t/2)]]``.
    """
    if not (math.isfinite(theta) and math.isfinite(phi)):
        raise ValueError("prx angles must be finite")
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return np.array(
        [
            [c, -1j * np.exp(-1j * phi) * s],
            [-1j * np.exp(1j * phi) * s, c],
        ]
    )


CZ_MATRIX = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def embed_unitary(U: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Lift ``U`` acting on ``qubits`` (in listed order) to the full register."""
    k = len(qubits)
    if U.shape != (2**k, 2**k):
        raise ValueError(f"unitary shape {U.shape} does not match {k} qubit(s)")
    if any(q < 0 or q >= n_qubits for q in qubits):
        raise ValueError("qubit index out of range")
    if len(set(qubits)) != k:
        raise ValueError("duplicate qubit index")
    if n_qubits == 1:
        return U
    if k == 2:
        return U if tuple(qubits) == (0, 1) else _SWAP @ U @ _SWAP
    eye = np.eye(2, dtype=complex)
    return np.kron(U, eye) if qubits[0] == 0 else np.kron(eye, U)


def apply_unitary(
    rho: np.ndarray, U: np.ndarray, qubits: Sequence[int]
) -> np.ndarray:
    """rho -> (U on qubits) rho (.)^dagger."""
    n = _n_from_dim(rho.shape[0])
    full = embed_unitary(U, qubits, n)
    return full @ rho @ full.conj().T


def apply_gate(rho: np.ndarray, op: GateOp) -> np.ndarray:
    if op.kind == "prepared_identity":
        return rho
    if op.kind == "prx":
        return apply_unitary(rho, prx_unitary(op.theta, op.phi), op.qubits)
    return apply_unitary(rho, CZ_MATRIX, op.qubits)


def expectation(rho: np.ndarray, pauli: PauliString) -> float:
    """Tr(P rho) for the bare Pauli word (coefficient not applied)."""
    dim = 2**pauli.n_qubits
    if rho.shape != (dim, dim):
        raise ValueError(
            f"density matrix shape {rho.shape} does not match {pauli.factors!r}"
        )
    value = np.trace(pauli.matrix() @ rho)
    return float(value.real)


def measurement_probabilities(
    rho: np.ndarray, meas_basis: Sequence[str]
) -> np.ndarray:
    """Exact outcome probabilities after noiseless basis-change rotations.

    The rotations here are ideal measurement-frame changes; circuits whose
    basis changes are physical (and therefore noisy) append explicit PRx
    gates instead and measure in the Z basis.
    """
    n = _n_from_dim(rho.shape[0])
    if len(meas_basis) != n:
        raise ValueError("meas_basis length must equal qubit count")
    rotated = rho
    for q, b in enumerate(meas_basis):
        angles = BASIS_ROTATION_ANGLES[b]
        if angles is not None:
            rotated = apply_unitary(rotated, prx_unitary(*angles), (q,))
    probs = np.diag(rotated).real.copy()
    if probs.min() < -NEG_PROB_TOL:
        raise RuntimeError(
            f"negative outcome probability {probs.min():.3e}: broken channel?"
        )
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_counts(
    rho: np.ndarray,
    meas_basis: Sequence[str],
    shots: int,
    seed: int,
) -> dict[str, int]:
    """One multinomial draw over the outcome distribution.

    Identical seeds give identical histograms. Only observed outcomes
    appear as keys; bitstrings put qubit 0 leftmost.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = _n_from_dim(rho.shape[0])
    probs = measurement_probabilities(rho, meas_basis)
    draws = np.random.default_rng(seed).multinomial(shots, probs)
    return {
        format(idx, f"0{n}b"): int(c) for idx, c in enumerate(draws) if c > 0
    }


def pauli_expectation_from_counts(
    counts: Mapping[str, int],
    pauli: PauliString,
    meas_basis: Sequence[str] | None = None,
) -> float:
    """Parity estimator: sum_b (-1)^{parity of b on non-I positions} p(b).

    Identity factors are marginalized (their bit is ignored). When
    ``meas_basis`` is given, every non-identity factor must match the
    basis the counts were taken in.
    """
    if not counts:
        raise ValueError("empty counts histogram")
    if meas_basis is not None:
        for pos, factor in enumerate(pauli.factors):
            if factor != "I" and factor != meas_basis[pos]:
                raise ValueError(
                    f"Pauli {pauli.factors!r} does not align with "
                    f"measured bases {tuple(meas_basis)!r}"
                )
    active = [i for i, f in enumerate(pauli.factors) if f != "I"]
    shots = sum(counts.values())
    total = 0
    for bitstring, count in counts.items():
        if len(bitstring) != pauli.n_qubits:
            raise ValueError(
                f"bitstring {bitstring!r} does not match {pauli.factors!r}"
            )
        parity = sum(bitstring[i] == "1" for i in active) % 2
        total += -count if parity else count
    return total / shots


def assert_valid_density_matrix(rho: np.ndarray, atol: float = 1e-10) -> None:
    """Test-time check: Hermitian, trace 1, PSD (never enforced by projection)."""
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise AssertionError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > atol:
        raise AssertionError(f"trace {np.trace(rho)} != 1")
    eigvals = np.linalg.eigvalsh(rho)
    if eigvals.min() < -1e-10:
        raise AssertionError(f"negative eigenvalue {eigvals.min():.3e}")


def _n_from_dim(dim: int) -> int:
    if dim == 2:
        return 1
    if dim == 4:
        return 2
    raise ValueError(f"unsupported density-matrix dimension {dim}")


def circuit_to_dict(circuit: Circuit) -> dict:
    """JSON-ready form of a circuit (see also :func:`circuit_from_dict`)."""
    ops = []
    for op in circuit.ops:
        entry: dict = {"kind": op.kind, "qubits": list(op.qubits)}
        if op.kind == "prx":
            entry["theta"] = op.theta
            entry["phi"] = op.phi
        ops.append(entry)
    out = {
        "n_qubits": circuit.n_qubits,
        "ops": ops,
        "meas_basis": list(circuit.meas_basis),
    }
    if circuit.label is not None:
        out["label"] = circuit.label
    return out


def circuit_from_dict(data: Mapping) -> Circuit:
    ops = [
        GateOp(
            entry["kind"],
            tuple(entry["qubits"]),
            float(entry.get("theta", 0.0)),
            float(entry.get("phi", 0.0)),
        )
        for entry in data["ops"]
    ]
    return Circuit(
        n_qubits=int(data["n_qubits"]),
        ops=ops,
        meas_basis=tuple(data["meas_basis"]),
        label=data.get("label"),
    )
