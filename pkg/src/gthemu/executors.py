"""Executors: the boundary between circuit batches and counts.

Three variants cover every way this toolkit runs circuits: a simulator
with an explicit noise model, a synthetic-hardware wrapper whose planted
truth stands in for a real device in closed-loop tests, and a file
replayer for counts ingested from actual hardware.
"""

from __future__ import annotations

from typing import Mapping

from .channels import GthNoiseModel, LambdaParams, NoiseModel, noisy_execute
from .gst import record_label
from .qcore import Circuit, sample_counts


class SimulatorExecutor:
    """Exact density-matrix simulation followed by one multinomial draw."""

    def __init__(
        self, model: NoiseModel = None, readout_placement: str = "per-gate"
    ):
        self.model = model
        self.readout_placement = readout_placement

    def run(self, circuit: Circuit, shots: int, seed: int) -> dict[str, int]:
        rho = noisy_execute(
            circuit, self.model, readout_placement=self.readout_placement
        )
        return sample_counts(rho, circuit.meas_basis, shots, seed)


class FileReplayExecutor:
    """Replays ingested hardware counts keyed by circuit label.

    Every requested label must be present and is served exactly once;
    anything else indicates a mismatched batch and fails loudly.
    """

    def __init__(self, counts_by_label: Mapping[str, Mapping[str, int]]):
        self._counts = {k: dict(v) for k, v in counts_by_label.items()}
        self._served: set[str] = set()

    @classmethod
    def from_counts_document(cls, document: Mapping) -> "FileReplayExecutor":
        counts = {}
        for record in document["records"]:
            label = record_label(record)
            if label in counts:
                raise ValueError(f"duplicate counts record for {label}")
            counts[label] = {
                str(bits): int(c) for bits, c in record["counts"].items()
            }
        return cls(counts)

    def run(self, circuit: Circuit, shots: int, seed: int) -> dict[str, int]:
        label = circuit.label
        if label is None:
            raise ValueError("replay executor requires labeled circuits")
        if label in self._served:
            raise ValueError(f"circuit {label} requested twice")
        if label not in self._counts:
            raise KeyError(f"no ingested counts for circuit {label}")
        self._served.add(label)
        return dict(self._counts[label])

    def assert_fully_consumed(self) -> None:
        leftover = set(self._counts) - self._served
        if leftover:
            raise ValueError(
                f"{len(leftover)} ingested circuits were never requested, "
                f"e.g. {sorted(leftover)[0]}"
            )


class SyntheticHardware:
    """A simulated device with a planted, nominally hidden noise model.

    The pipeline only ever sees the executors this hands out; tests
    compare its recovered parameters against ``truth`` afterwards.
    """

    def __init__(self, truth: GthNoiseModel, readout_placement: str = "per-gate"):
        self._truth = truth
        self._readout_placement = readout_placement
        self.qubit_ids = truth.qubit_ids

    def executor_for(self, qubits: tuple[int, ...]) -> SimulatorExecutor:
        i, j = self.qubit_ids
        model: NoiseModel
        if qubits == (i,):
            model = self._truth.lambda_qi
        elif qubits == (j,):
            model = self._truth.lambda_qj
        elif qubits == (i, j):
            model = self._truth
        else:
            raise ValueError(
                f"synthetic hardware exposes qubits {self.qubit_ids}, "
                f"not {qubits}"
            )
        return SimulatorExecutor(model, self._readout_placement)

    def gst_shots(self, qubits: tuple[int, ...]) -> int | None:
        return None

    def planted_truth(self) -> GthNoiseModel:
        return self._truth


class ReplayHardware:
    """Hardware adapter over ingested counts documents for a qubit pair."""

    def __init__(self, doc_qi: Mapping, doc_qj: Mapping, doc_pair: Mapping):
        self.qubit_ids = (int(doc_qi["qubits"][0]), int(doc_qj["qubits"][0]))
        pair = tuple(int(q) for q in doc_pair["qubits"])
        if pair != self.qubit_ids:
            raise ValueError(
                f"two-qubit counts cover {pair}, expected {self.qubit_ids}"
            )
        self._docs = {
            (self.qubit_ids[0],): doc_qi,
            (self.qubit_ids[1],): doc_qj,
            self.qubit_ids: doc_pair,
        }

    def executor_for(self, qubits: tuple[int, ...]) -> FileReplayExecutor:
        if qubits not in self._docs:
            raise ValueError(f"no ingested counts for qubits {qubits}")
        return FileReplayExecutor.from_counts_document(self._docs[qubits])

    def gst_shots(self, qubits: tuple[int, ...]) -> int | None:
        return int(self._docs[qubits]["shots"])


def lambda_model_for_qubit(model: GthNoiseModel, qubit_id: int) -> LambdaParams:
    i, j = model.qubit_ids
    if qubit_id == i:
        return model.lambda_qi
    if qubit_id == j:
        return model.lambda_qj
    raise ValueError(f"qubit {qubit_id} not covered by model {model.qubit_ids}")
