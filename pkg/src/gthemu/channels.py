"""Kraus noise channels and the composite one- and two-qubit noise models.

The single-qubit model M applies, in order, depolarizing, amplitude
damping, dephasing, and readout (bit-flip) noise to its target qubit.
The two-qubit model N applies M to each qubit and then a two-qubit
depolarizing channel. Parameter range checks are hard errors, never
clamps: silently clamped values would corrupt training labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .qcore import (
    PAULI,
    Circuit,
    apply_gate,
    ground_state,
)


def _check_prob(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0) or not math.isfinite(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class LambdaParams:
    """Single-qubit noise parameters (d, a, f, r) = (depolarizing,
    amplitude damping, dephasing, readout), each a probability."""

    d: float
    a: float
    f: float
    r: float

    def __post_init__(self):
        for name in ("d", "a", "f", "r"):
            _check_prob(getattr(self, name), f"lambda_{name}")

    def as_array(self) -> np.ndarray:
        return np.array([self.d, self.a, self.f, self.r])

    @classmethod
    def zeros(cls) -> "LambdaParams":
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ZetaParams:
    """Two-qubit depolarizing strength."""

    zeta: float

    def __post_init__(self):
        _check_prob(self.zeta, "zeta")


@dataclass(frozen=True)
class GthNoiseModel:
    """Composite noise model for a coupled qubit pair.

    ``qubit_ids`` are hardware labels; in simulation, local qubit 0
    carries ``lambda_qi`` and local qubit 1 carries ``lambda_qj``.
    """

    lambda_qi: LambdaParams
    lambda_qj: LambdaParams
    zeta: ZetaParams
    qubit_ids: tuple[int, int] = (0, 1)

    def to_json_dict(self) -> dict:
        def lam(p: LambdaParams) -> dict:
            return {"d": p.d, "a": p.a, "f": p.f, "r": p.r}

        return {
            "qubits": list(self.qubit_ids),
            "lambda_i": lam(self.lambda_qi),
            "lambda_j": lam(self.lambda_qj),
            "zeta": self.zeta.zeta,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "GthNoiseModel":
        def lam(entry: Mapping) -> LambdaParams:
            return LambdaParams(
                float(entry["d"]), float(entry["a"]),
                float(entry["f"]), float(entry["r"]),
            )

        return cls(
            lambda_qi=lam(data["lambda_i"]),
            lambda_qj=lam(data["lambda_j"]),
            zeta=ZetaParams(float(data["zeta"])),
            qubit_ids=(int(data["qubits"][0]), int(data["qubits"][1])),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GthNoiseModel":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass
class KrausChannel:
    """Explicit Kraus representation; completeness sum K^dag K = I."""

    n_qubits: int
    kraus_ops: list[np.ndarray]

    def completeness_defect(self) -> float:
        dim = 2**self.n_qubits
        acc = sum(K.conj().T @ K for K in self.kraus_ops)
        return float(np.abs(acc - np.eye(dim)).max())

    def apply(self, rho: np.ndarray, qubits: Sequence[int] = (0,)) -> np.ndarray:
        from .qcore import embed_unitary  # embedding works for any matrix

        n = 1 if rho.shape[0] == 2 else 2
        out = np.zeros_like(rho)
        for K in self.kraus_ops:
            full = embed_unitary(K, qubits, n)
            out += full @ rho @ full.conj().T
        return out


def depolarizing_channel(lam: float, n_qubits: int = 1) -> KrausChannel:
    """Pauli-twirl Kraus form of (1-lam) rho + lam I/2^n."""
    lam = _check_prob(lam, "lambda_d")
    dim = 4**n_qubits
    labels = ["".join(p) for p in product("IXYZ", repeat=n_qubits)]
    ops = []
    for label in labels:
        mat = PAULI[label[0]]
        for f in label[1:]:
            mat = np.kron(mat, PAULI[f])
        weight = 1.0 - (dim - 1) * lam / dim if label == "I" * n_qubits else lam / dim
        ops.append(math.sqrt(weight) * mat)
    return KrausChannel(n_qubits, ops)


def amplitude_damping_channel(lam: float) -> KrausChannel:
    lam = _check_prob(lam, "lambda_a")
    k1 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - lam)]], dtype=complex)
    k2 = np.array([[0.0, math.sqrt(lam)], [0.0, 0.0]], dtype=complex)
    return KrausChannel(1, [k1, k2])


def dephasing_channel(lam: float) -> KrausChannel:
    lam = _check_prob(lam, "lambda_f")
    k1 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - lam)]], dtype=complex)
    k2 = np.array([[0.0, 0.0], [0.0, math.sqrt(lam)]], dtype=complex)
    return KrausChannel(1, [k1, k2])


def readout_channel(lam: float) -> KrausChannel:
    """Bit-flip form of the measurement-misassignment channel."""
    lam = _check_prob(lam, "lambda_r")
    k1 = math.sqrt(1.0 - lam) * np.eye(2, dtype=complex)
    k2 = math.sqrt(lam) * PAULI["X"]
    return KrausChannel(1, [k1, k2])


# Embedded operator caches: grid sweeps revisit the same parameter values
# thousands of times, so keyed reconstruction dominates without this.
@lru_cache(maxsize=4096)
def _embedded_pair(kind: str, lam: float, qubit: int, n: int):
    if kind == "ad":
        ops = amplitude_damping_channel(lam).kraus_ops
    else:
        ops = dephasing_channel(lam).kraus_ops
    from .qcore import embed_unitary

    return tuple(embed_unitary(K, (qubit,), n) for K in ops)


@lru_cache(maxsize=64)
def _embedded_pauli(factor: str, qubit: int, n: int):
    from .qcore import embed_unitary

    return embed_unitary(PAULI[factor], (qubit,), n)


def _n_qubits_of(rho: np.ndarray) -> int:
    if rho.shape[0] == 2:
        return 1
    if rho.shape[0] == 4:
        return 2
    raise ValueError(f"unsupported density-matrix dimension {rho.shape}")


def depolarizing_apply(rho: np.ndarray, lam: float, n_qubits: int) -> np.ndarray:
    """(1 - lam) rho + lam I/2^n over the whole register."""
    lam = _check_prob(lam, "lambda_d")
    if _n_qubits_of(rho) != n_qubits:
        raise ValueError("n_qubits does not match density matrix")
    dim = 2**n_qubits
    return (1.0 - lam) * rho + (lam / dim) * np.eye(dim, dtype=complex)


def _local_depolarizing(rho: np.ndarray, lam: float, qubit: int) -> np.ndarray:
    """Single-qubit depolarizing on one qubit of a larger register
    (Pauli-twirl form, identical to the affine form when n = 1)."""
    n = _n_qubits_of(rho)
    if n == 1:
        return depolarizing_apply(rho, lam, 1)
    lam = _check_prob(lam, "lambda_d")
    acc = np.zeros_like(rho)
    for factor in "XYZ":
        P = _embedded_pauli(factor, qubit, n)
        acc += P @ rho @ P
    return (1.0 - 0.75 * lam) * rho + 0.25 * lam * acc


def amplitude_damping_apply(rho: np.ndarray, lam: float, qubit: int = 0) -> np.ndarray:
    lam = _check_prob(lam, "lambda_a")
    k1, k2 = _embedded_pair("ad", lam, qubit, _n_qubits_of(rho))
    return k1 @ rho @ k1.conj().T + k2 @ rho @ k2.conj().T


def dephasing_apply(rho: np.ndarray, lam: float, qubit: int = 0) -> np.ndarray:
    lam = _check_prob(lam, "lambda_f")
    k1, k2 = _embedded_pair("deph", lam, qubit, _n_qubits_of(rho))
    return k1 @ rho @ k1.conj().T + k2 @ rho @ k2.conj().T


def readout_apply(rho: np.ndarray, lam: float, qubit: int = 0) -> np.ndarray:
    lam = _check_prob(lam, "lambda_r")
    X = _embedded_pauli("X", qubit, _n_qubits_of(rho))
    return (1.0 - lam) * rho + lam * (X @ rho @ X)


def confusion_apply(
    counts: Mapping[str, float], lam_r: float | Sequence[float]
) -> dict[str, float]:
    """Expected-value readout confusion on a counts/probability histogram.

    Multiplies the histogram by the per-qubit row-stochastic transition
    matrix with p(flip) = lam_r. Analysis utility; the channel form
    (:func:`readout_apply`) is what the composite models use.
    """
    if not counts:
        raise ValueError("empty counts histogram")
    n = len(next(iter(counts)))
    lams = [lam_r] * n if np.isscalar(lam_r) else list(lam_r)
    if len(lams) != n:
        raise ValueError("need one lambda_r per qubit")
    lams = [_check_prob(l, "lambda_r") for l in lams]
    out: dict[str, float] = {}
    for bitstring, weight in counts.items():
        if len(bitstring) != n:
            raise ValueError("inconsistent bitstring lengths")
        for flips in product((0, 1), repeat=n):
            prob = 1.0
            target = []
            for bit, flip, lam in zip(bitstring, flips, lams):
                prob *= lam if flip else 1.0 - lam
                target.append("1" if (bit == "1") != bool(flip) else "0")
            if prob == 0.0:
                continue
            key = "".join(target)
            out[key] = out.get(key, 0.0) + weight * prob
    return out


def apply_M(
    rho: np.ndarray,
    lam: LambdaParams,
    qubit: int = 0,
    include_readout: bool = True,
) -> np.ndarray:
    """Composite single-qubit model: depolarizing, then amplitude damping,
    then dephasing, then readout, all on ``qubit``.

    ``include_readout=False`` supports the terminal readout placement,
    where the bit-flip part acts once before measurement instead.
    """
    rho = _local_depolarizing(rho, lam.d, qubit)
    rho = amplitude_damping_apply(rho, lam.a, qubit)
    rho = dephasing_apply(rho, lam.f, qubit)
    if include_readout:
        rho = readout_apply(rho, lam.r, qubit)
    return rho


def apply_N(
    rho: np.ndarray,
    lam_qi: LambdaParams,
    lam_qj: LambdaParams,
    zeta: float | ZetaParams,
    include_readout: bool = True,
) -> np.ndarray:
    """Two-qubit composite model: M on qubit 0, M on qubit 1, then
    two-qubit depolarizing."""
    if _n_qubits_of(rho) != 2:
        raise ValueError("apply_N requires a 2-qubit density matrix")
    z = zeta.zeta if isinstance(zeta, ZetaParams) else zeta
    rho = apply_M(rho, lam_qi, 0, include_readout)
    rho = apply_M(rho, lam_qj, 1, include_readout)
    return depolarizing_apply(rho, z, 2)


NoiseModel = LambdaParams | GthNoiseModel | None

READOUT_PLACEMENTS = ("per-gate", "terminal")


def noisy_execute(
    circuit: Circuit,
    model: NoiseModel = None,
    initial_rho: np.ndarray | None = None,
    readout_placement: str = "per-gate",
) -> np.ndarray:
    """Run a circuit, applying the matching noise model after each gate.

    PRx gates draw the single-qubit model of their target; CZ draws the
    two-qubit composite; prepared-identity placeholders draw nothing.
    With ``readout_placement="terminal"`` the readout component is
    deferred to a single application per qubit after the last gate.
    """
    if readout_placement not in READOUT_PLACEMENTS:
        raise ValueError(f"readout_placement must be one of {READOUT_PLACEMENTS}")
    if isinstance(model, LambdaParams) and circuit.n_qubits != 1:
        raise ValueError("LambdaParams models a single qubit")
    if isinstance(model, GthNoiseModel) and circuit.n_qubits != 2:
        raise ValueError("GthNoiseModel models a qubit pair")

    per_gate = readout_placement == "per-gate"
    rho = ground_state(circuit.n_qubits) if initial_rho is None else initial_rho

    def lam_for(qubit: int) -> LambdaParams:
        if isinstance(model, LambdaParams):
            return model
        assert isinstance(model, GthNoiseModel)
        return model.lambda_qi if qubit == 0 else model.lambda_qj

    for op in circuit.ops:
        rho = apply_gate(rho, op)
        if model is None or op.kind == "prepared_identity":
            continue
        if op.kind == "prx":
            rho = apply_M(rho, lam_for(op.qubits[0]), op.qubits[0], per_gate)
        else:
            assert isinstance(model, GthNoiseModel)
            rho = apply_N(
                rho, model.lambda_qi, model.lambda_qj, model.zeta, per_gate
            )

    if model is not None and not per_gate:
        for q in range(circuit.n_qubits):
            rho = readout_apply(rho, lam_for(q).r, q)
    return rho
