"""Labeled GST training datasets swept over noise-parameter grids.

Single-qubit data sweeps the four-component lambda grid through the
single-qubit model; two-qubit data sweeps the zeta grid through the
composite model at fixed (already predicted) per-qubit lambdas. Repeats
at each grid point are kept as separate examples so the regressors see
shot noise during training.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Iterator

import numpy as np

from .channels import GthNoiseModel, LambdaParams, ZetaParams
from .errors import SchemaError
from .gst import (
    GstGateSet,
    estimate_gst,
    feature_length,
    single_qubit_gate_set,
    two_qubit_gate_set,
)
from .seeding import derive_seed

DATASET_SCHEMA = "gth-dataset-v1"


def _grid_values(start: float, stop: float, step: float) -> np.ndarray:
    """Uniform values in [start, stop), rounded to kill fp drift."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = int(math.ceil((stop - start) / step - 1e-9))
    return np.round(start + step * np.arange(n), 12)


@dataclass(frozen=True)
class GridSpec:
    """Noise-parameter grid plus the sampling effort per grid point."""

    lambda_start: float = 0.0
    lambda_stop: float = 0.1  # exclusive
    lambda_step: float = 0.01
    zeta_start: float = 0.0
    zeta_stop: float = 0.2  # exclusive
    zeta_step: float = 0.002
    repeats_per_point: int = 5
    shots: int = 10_000

    def __post_init__(self):
        if self.repeats_per_point < 1:
            raise ValueError("repeats_per_point must be >= 1")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        for lo, hi in (
            (self.lambda_start, self.lambda_stop),
            (self.zeta_start, self.zeta_stop),
        ):
            if not (0.0 <= lo < hi <= 1.0):
                raise ValueError("grid ranges must satisfy 0 <= start < stop <= 1")
        # Trigger step validation early.
        self.lambda_values()
        self.zeta_values()

    def lambda_values(self) -> np.ndarray:
        return _grid_values(self.lambda_start, self.lambda_stop, self.lambda_step)

    def zeta_values(self) -> np.ndarray:
        return _grid_values(self.zeta_start, self.zeta_stop, self.zeta_step)

    def lambda_grid(self) -> Iterator[tuple[float, float, float, float]]:
        """All (d, a, f, r) combinations, d varying slowest."""
        return product(self.lambda_values(), repeat=4)

    def to_json_dict(self) -> dict:
        return {
            "lambda_start": self.lambda_start,
            "lambda_stop": self.lambda_stop,
            "lambda_step": self.lambda_step,
            "zeta_start": self.zeta_start,
            "zeta_stop": self.zeta_stop,
            "zeta_step": self.zeta_step,
            "repeats_per_point": self.repeats_per_point,
            "shots": self.shots,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "GridSpec":
        return cls(**data)


def paper_scale_grid() -> GridSpec:
    """Production grid: 10^4 lambda points, 100 zeta points, 10k shots."""
    return GridSpec()


def desk_scale_grid() -> GridSpec:
    """CI-sized grid: 4^4 lambda points, 20 zeta points, 2k shots, 3 repeats.

    Shares every code path with the paper-scale grid; only the effort
    differs.
    """
    return GridSpec(
        lambda_step=0.03, zeta_step=0.01, repeats_per_point=3, shots=2_000
    )


@dataclass(frozen=True)
class TrainingExample:
    features: np.ndarray
    label: np.ndarray


@dataclass
class Dataset:
    """Feature matrix (one flattened GST outcome per row) plus labels."""

    features: np.ndarray
    labels: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.features.shape[0]

    def __getitem__(self, idx: int) -> TrainingExample:
        return TrainingExample(self.features[idx], self.labels[idx])

    def __iter__(self) -> Iterator[TrainingExample]:
        for i in range(len(self)):
            yield self[i]


def _run_1q_point(args) -> np.ndarray:
    grid_dict, lam, point_seed, readout_placement = args
    grid = GridSpec(**grid_dict)
    from .executors import SimulatorExecutor

    executor = SimulatorExecutor(LambdaParams(*lam), readout_placement)
    outcome = estimate_gst(
        executor, single_qubit_gate_set(), 1, grid.shots, point_seed
    )
    return outcome.features()


def _run_2q_point(args) -> np.ndarray:
    grid_dict, lam_i, lam_j, zeta, point_seed, readout_placement = args
    grid = GridSpec(**grid_dict)
    from .executors import SimulatorExecutor

    model = GthNoiseModel(
        LambdaParams(*lam_i), LambdaParams(*lam_j), ZetaParams(zeta)
    )
    executor = SimulatorExecutor(model, readout_placement)
    outcome = estimate_gst(
        executor, two_qubit_gate_set(), 2, grid.shots, point_seed
    )
    return outcome.features()


def _parallel_map(fn, jobs: list, n_jobs: int) -> list:
    if n_jobs <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        # map preserves submission order, so output ordering stays
        # (grid index, repeat index) regardless of scheduling.
        return list(pool.map(fn, jobs, chunksize=16))


def generate_1q_dataset(
    grid: GridSpec,
    seed: int,
    readout_placement: str = "per-gate",
    n_jobs: int = 1,
) -> Dataset:
    """One labeled example per (lambda grid point, repeat)."""
    points = list(grid.lambda_grid())
    jobs = []
    labels = []
    for gi, lam in enumerate(points):
        for rep in range(grid.repeats_per_point):
            jobs.append(
                (
                    grid.to_json_dict(),
                    lam,
                    derive_seed(seed, "datagen-1q", gi, rep),
                    readout_placement,
                )
            )
            labels.append(lam)
    features = _parallel_map(_run_1q_point, jobs, n_jobs)
    meta = {
        "kind": "1q",
        "grid": grid.to_json_dict(),
        "seed": seed,
        "readout_placement": readout_placement,
    }
    return Dataset(np.array(features), np.array(labels, dtype=float), meta)


def generate_2q_dataset(
    grid: GridSpec,
    lam_qi: LambdaParams,
    lam_qj: LambdaParams,
    seed: int,
    readout_placement: str = "per-gate",
    n_jobs: int = 1,
) -> Dataset:
    """One labeled example per (zeta grid point, repeat), conditioned on
    the per-qubit lambdas the single-qubit stage predicted."""
    lam_i = tuple(lam_qi.as_array())
    lam_j = tuple(lam_qj.as_array())
    jobs = []
    labels = []
    for zi, zeta in enumerate(grid.zeta_values()):
        for rep in range(grid.repeats_per_point):
            jobs.append(
                (
                    grid.to_json_dict(),
                    lam_i,
                    lam_j,
                    float(zeta),
                    derive_seed(seed, "datagen-2q", zi, rep),
                    readout_placement,
                )
            )
            labels.append([zeta])
    features = _parallel_map(_run_2q_point, jobs, n_jobs)
    meta = {
        "kind": "2q",
        "grid": grid.to_json_dict(),
        "seed": seed,
        "readout_placement": readout_placement,
        "lambda_qi": list(lam_i),
        "lambda_qj": list(lam_j),
    }
    return Dataset(np.array(features), np.array(labels, dtype=float), meta)


def write_dataset(path: str | Path, dataset: Dataset) -> None:
    """JSON-lines: one header line with metadata, then one example per line."""
    header = {
        "schema": DATASET_SCHEMA,
        "count": len(dataset),
        "feature_length": int(dataset.features.shape[1]),
        "label_length": int(dataset.labels.shape[1]),
    }
    header.update(dataset.meta)
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for example in dataset:
            fh.write(
                json.dumps(
                    {
                        "label": example.label.tolist(),
                        "features": example.features.tolist(),
                    }
                )
                + "\n"
            )


def read_dataset(path: str | Path) -> Dataset:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != DATASET_SCHEMA:
            raise SchemaError(
                f"expected dataset schema {DATASET_SCHEMA!r}, "
                f"got {header.get('schema')!r}"
            )
        features = []
        labels = []
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            if len(record["features"]) != header["feature_length"]:
                raise SchemaError(
                    f"feature length {len(record['features'])} != "
                    f"declared {header['feature_length']}"
                )
            features.append(record["features"])
            labels.append(record["label"])
    if len(features) != header["count"]:
        raise SchemaError(
            f"dataset holds {len(features)} examples, header says {header['count']}"
        )
    meta = {
        k: v
        for k, v in header.items()
        if k not in ("schema", "count", "feature_length", "label_length")
    }
    return Dataset(np.array(features), np.array(labels, dtype=float), meta)


def expected_feature_length(kind: str) -> int:
    if kind == "1q":
        return feature_length(1, len(single_qubit_gate_set().gates))
    if kind == "2q":
        return feature_length(2, len(two_qubit_gate_set().gates))
    raise ValueError(f"unknown dataset kind {kind!r}")
