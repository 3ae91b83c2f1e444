"""Gate set tomography with PRx-only state preparation and measurement.

A GST run prepares each product of {|0>, |1>, |+>, |y+>}, optionally
inserts one gate from the gate set, rotates each qubit into a
measurement basis, and estimates all Pauli expectations from the
resulting counts. The no-gate slot yields the calibration matrix g;
each gate yields one matrix U with entries Tr(M_j U rho_k).

Preparation and basis-rotation fragments are physical PRx gates and are
therefore subject to the same noise model as everything else; only the
|0> preparation and the Z basis (no rotation) escape noise. This is
what makes g a footprint of state-preparation-and-measurement error.
"""

from __future__ import annotations

import datetime
import json
import math
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .channels import NoiseModel, noisy_execute
from .qcore import (
    BASIS_ROTATION_ANGLES,
    MEASUREMENT_BASES,
    Circuit,
    GateOp,
    PauliString,
    cz,
    measurement_probabilities,
    pauli_expectation_from_counts,
    prx,
)
from .seeding import derive_seed

PI = math.pi

# The 15 single-qubit (theta, phi) pairs of the production gate set,
# in feature order. Indices 0 and 9 coincide; the list is kept verbatim.
TABLE_I_ANGLES: tuple[tuple[float, float], ...] = (
    (PI, 0.0),
    (PI / 2, -PI / 2),
    (PI / 2, PI / 2),
    (PI / 3, PI / 3),
    (PI / 3, PI / 4),
    (PI / 3, PI / 7),
    (PI / 4, PI / 3),
    (PI / 4, PI / 4),
    (0.0, 0.0),
    (PI, 0.0),
    (-PI / 2, 0.0),
    (PI / 4, PI / 7),
    (PI / 7, PI / 3),
    (PI / 7, PI / 4),
    (PI / 7, PI / 7),
)

PREP_LABELS = ("0", "1", "+", "y+")


class Executor(Protocol):
    """Anything that turns a circuit into a counts histogram."""

    def run(self, circuit: Circuit, shots: int, seed: int) -> dict[str, int]:
        ...


@dataclass(frozen=True)
class GstGateSet:
    """Ordered gates probed by GST (plus the implicit no-gate slot)."""

    n_qubits: int
    gates: tuple[GateOp, ...]

    def __post_init__(self):
        if not self.gates:
            # An empty set still defines a valid g-only run.
            return
        for gate in self.gates:
            if any(q >= self.n_qubits for q in gate.qubits):
                raise ValueError("gate acts outside the declared qubit count")


def single_qubit_gate_set() -> GstGateSet:
    """The 15-gate PRx set used for all single-qubit characterization."""
    return GstGateSet(1, tuple(prx(0, t, p) for t, p in TABLE_I_ANGLES))


def two_qubit_gate_set() -> GstGateSet:
    """CZ is the only native two-qubit gate."""
    return GstGateSet(2, (cz(0, 1),))


def prep_fragment(k: int, qubit: int = 0) -> list[GateOp]:
    """PRx sequence preparing the k-th fiducial state on one qubit.

    k = 0: |0> (nothing), 1: |1>, 2: |+>, 3: |y+>.
    """
    if k == 0:
        return []
    if k == 1:
        return [prx(qubit, PI, 0.0)]
    if k == 2:
        return [prx(qubit, PI / 2, PI / 2)]
    if k == 3:
        return [prx(qubit, -PI / 2, 0.0)]
    raise ValueError(f"preparation index {k} out of range 0..3")


def basis_rotation(basis: str, qubit: int = 0) -> list[GateOp]:
    """PRx sequence mapping the basis' +1 eigenstate onto |0>."""
    angles = BASIS_ROTATION_ANGLES[basis]
    if angles is None:
        return []
    return [prx(qubit, *angles)]


@dataclass(frozen=True)
class GstCircuit:
    """One GST circuit with its (prep, gate slot, basis) label."""

    prep: tuple[int, ...]
    gate_index: int | None
    basis: tuple[str, ...]
    circuit: Circuit

    @property
    def label(self) -> str:
        gate = -1 if self.gate_index is None else self.gate_index
        return (
            f"prep={''.join(map(str, self.prep))};"
            f"gate={gate};basis={''.join(self.basis)}"
        )


def build_gst_circuits(gate_set: GstGateSet, n_qubits: int) -> list[GstCircuit]:
    """All 4^n x (1 + |gates|) x 3^n circuits, qubit 0 slowest."""
    if n_qubits not in (1, 2):
        raise ValueError("GST supports 1 or 2 qubits")
    if gate_set.n_qubits != n_qubits:
        raise ValueError("gate set qubit count mismatch")
    out = []
    slots: list[int | None] = [None] + list(range(len(gate_set.gates)))
    for prep in product(range(4), repeat=n_qubits):
        for gate_index in slots:
            for basis in product(MEASUREMENT_BASES, repeat=n_qubits):
                ops: list[GateOp] = []
                for q, k in enumerate(prep):
                    ops.extend(prep_fragment(k, q))
                if gate_index is not None:
                    ops.append(gate_set.gates[gate_index])
                for q, b in enumerate(basis):
                    ops.extend(basis_rotation(b, q))
                spec = GstCircuit(
                    prep=prep,
                    gate_index=gate_index,
                    basis=basis,
                    circuit=Circuit(n_qubits, ops),
                )
                # Stamp the canonical label onto the executable circuit so
                # replayed hardware counts can be matched to it.
                spec.circuit.label = spec.label
                out.append(spec)
    return out


def pauli_rows(n_qubits: int) -> list[str]:
    """Row labels {I,X,Y,Z}^n, qubit 0 slowest."""
    return ["".join(p) for p in product("IXYZ", repeat=n_qubits)]


def _row_basis(factors: str) -> tuple[str, ...]:
    """The measurement-basis combination a Pauli row is estimated from.

    Identity factors are marginalized out of the Z setting on that qubit,
    so no extra circuits beyond the 3^n combinations are ever needed.
    """
    return tuple("Z" if f == "I" else f for f in factors)


@dataclass
class GstOutcome:
    """Calibration matrix g plus one matrix per gate, with run metadata."""

    n_qubits: int
    g: np.ndarray
    u_list: list[np.ndarray]
    shots: int | None
    metadata: dict = field(default_factory=dict)

    def features(self) -> np.ndarray:
        """Flattened [g, U_1, ..., U_m], each row-major."""
        parts = [self.g.ravel()] + [u.ravel() for u in self.u_list]
        return np.concatenate(parts)

    def to_json_dict(self) -> dict:
        return {
            "schema": "gth-gst-v1",
            "n_qubits": self.n_qubits,
            "shots": self.shots,
            "g": self.g.tolist(),
            "u_list": [u.tolist() for u in self.u_list],
            "metadata": self.metadata,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "GstOutcome":
        if data.get("schema") != "gth-gst-v1":
            raise ValueError(f"unexpected GST schema {data.get('schema')!r}")
        return cls(
            n_qubits=int(data["n_qubits"]),
            g=np.array(data["g"], dtype=float),
            u_list=[np.array(u, dtype=float) for u in data["u_list"]],
            shots=data["shots"],
            metadata=dict(data.get("metadata", {})),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GstOutcome":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def feature_length(n_qubits: int, n_gates: int) -> int:
    return (1 + n_gates) * 16**n_qubits


def _matrices_from_values(
    values: Mapping[tuple[tuple[int, ...], int | None, tuple[str, ...]], Mapping[str, int] | np.ndarray],
    gate_set: GstGateSet,
    n_qubits: int,
    sampled: bool,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Assemble g and the U matrices from per-circuit counts or exact
    probability vectors."""
    dim = 4**n_qubits
    rows = pauli_rows(n_qubits)
    preps = list(product(range(4), repeat=n_qubits))
    slots: list[int | None] = [None] + list(range(len(gate_set.gates)))
    matrices = []
    for gate_index in slots:
        mat = np.empty((dim, dim), dtype=float)
        for j, factors in enumerate(rows):
            basis = _row_basis(factors)
            for k, prep in enumerate(preps):
                if j == 0:
                    # <I...I> is the probability sum: identically 1.
                    mat[j, k] = 1.0
                    continue
                data = values[(prep, gate_index, basis)]
                pauli = PauliString(factors)
                if sampled:
                    mat[j, k] = pauli_expectation_from_counts(data, pauli, basis)
                else:
                    mat[j, k] = _exact_parity(data, factors)
        matrices.append(mat)
    return matrices[0], matrices[1:]


def _exact_parity(probs: np.ndarray, factors: str) -> float:
    n = len(factors)
    signs = np.ones(2**n)
    for idx in range(2**n):
        parity = 0
        for q, f in enumerate(factors):
            if f != "I" and (idx >> (n - 1 - q)) & 1:
                parity ^= 1
        if parity:
            signs[idx] = -1.0
    return float(np.dot(signs, probs))


def estimate_gst(
    executor: Executor,
    gate_set: GstGateSet,
    n_qubits: int,
    shots: int,
    seed: int,
    metadata: dict | None = None,
) -> GstOutcome:
    """Run the full GST batch through an executor and assemble matrices.

    Each circuit draws its own seed from (seed, circuit label), so the
    outcome is independent of execution order.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    circuits = build_gst_circuits(gate_set, n_qubits)
    values: dict = {}
    for spec in circuits:
        counts = executor.run(
            spec.circuit, shots, derive_seed(seed, "gst", spec.label)
        )
        total = sum(counts.values())
        if total != shots:
            raise ValueError(
                f"counts for {spec.label} sum to {total}, expected {shots}"
            )
        values[(spec.prep, spec.gate_index, spec.basis)] = counts
    g, u_list = _matrices_from_values(values, gate_set, n_qubits, sampled=True)
    meta = {
        "seed": seed,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    meta.update(metadata or {})
    return GstOutcome(n_qubits, g, u_list, shots, meta)


def exact_gst(
    model: NoiseModel,
    gate_set: GstGateSet,
    n_qubits: int,
    readout_placement: str = "per-gate",
    metadata: dict | None = None,
) -> GstOutcome:
    """Infinite-shot GST: exact outcome distributions, no sampling.

    Serves as the oracle for the sampled estimator and as the data
    source for noise-effect heatmaps.
    """
    circuits = build_gst_circuits(gate_set, n_qubits)
    values: dict = {}
    for spec in circuits:
        rho = noisy_execute(spec.circuit, model, readout_placement=readout_placement)
        probs = measurement_probabilities(rho, spec.circuit.meas_basis)
        values[(spec.prep, spec.gate_index, spec.basis)] = probs
    g, u_list = _matrices_from_values(values, gate_set, n_qubits, sampled=False)
    return GstOutcome(n_qubits, g, u_list, None, dict(metadata or {}))


# ---------------------------------------------------------------------------
# Hardware adapter file formats


def gst_batch_records(gate_set: GstGateSet, n_qubits: int) -> list[dict]:
    """Circuit batch in the export schema: one record per circuit,
    ``{"prep": [...], "gate": index|-1, "basis": [...]}``."""
    return [
        {
            "prep": list(spec.prep),
            "gate": -1 if spec.gate_index is None else spec.gate_index,
            "basis": list(spec.basis),
        }
        for spec in build_gst_circuits(gate_set, n_qubits)
    ]


def write_gst_batch(path: str | Path, gate_set: GstGateSet, n_qubits: int) -> None:
    doc = {
        "schema": "gth-gst-batch-v1",
        "n_qubits": n_qubits,
        "gates": [
            {"kind": g.kind, "qubits": list(g.qubits), "theta": g.theta, "phi": g.phi}
            for g in gate_set.gates
        ],
        "records": gst_batch_records(gate_set, n_qubits),
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def read_counts_file(path: str | Path) -> dict:
    """Load and validate the hardware counts-import document."""
    data = json.loads(Path(path).read_text())
    if data.get("schema") != "gth-gst-counts-v1":
        raise ValueError(f"unexpected counts schema {data.get('schema')!r}")
    for key in ("shots", "qubits", "records"):
        if key not in data:
            raise ValueError(f"counts file missing {key!r}")
    return data


def record_label(record: Mapping) -> str:
    prep = "".join(str(k) for k in record["prep"])
    basis = "".join(record["basis"])
    return f"prep={prep};gate={record['gate']};basis={basis}"
