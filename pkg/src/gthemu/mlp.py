"""From-scratch feed-forward regressors for noise-parameter prediction.

Two ReLU hidden layers feed a saturating output layer whose ceiling
matches the training-label range, so predictions are bounded
probabilities by construction. Training is mini-batch Adam on mean
squared error with an L2 weight penalty, fully deterministic under a
seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .datagen import Dataset
from .errors import SchemaError
from .seeding import derive_seed

MODEL_SCHEMA = "gth-mlp-v1"


def custom_sigmoid(
    x: np.ndarray | float, alpha: float = 8.0, ceiling: float = 1.0
) -> np.ndarray | float:
    """ceiling / (1 + exp(-alpha x)): strictly increasing, range (0, ceiling)."""
    z = np.asarray(x, dtype=float) * alpha
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    out *= ceiling
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden_width: int = 128
    n_hidden: int = 2
    output_dim: int = 4
    output_ceiling: float = 0.1
    sigmoid_alpha: float = 8.0
    learning_rate: float = 1e-4
    l2: float = 5e-5
    dropout: float = 5e-5
    batch_size: int = 64
    validation_split: float = 0.2
    epochs: int = 100
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if self.n_hidden < 0 or (self.n_hidden > 0 and self.hidden_width < 1):
            raise ValueError("invalid hidden layer shape")
        if not (0.0 < self.validation_split < 1.0):
            raise ValueError("validation_split must lie in (0, 1)")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must lie in [0, 1)")

    def layer_dims(self) -> list[tuple[int, int]]:
        widths = [self.input_dim] + [self.hidden_width] * self.n_hidden
        widths.append(self.output_dim)
        return list(zip(widths[:-1], widths[1:]))


def nn1q_config(**overrides) -> MlpConfig:
    """Single-qubit regressor: 2x128 hidden, 4 outputs capped at 0.1."""
    base = dict(
        input_dim=256,
        hidden_width=128,
        output_dim=4,
        output_ceiling=0.1,
        l2=5e-5,
        dropout=5e-5,
        batch_size=64,
        epochs=100,
    )
    base.update(overrides)
    return MlpConfig(**base)


def nn2q_config(**overrides) -> MlpConfig:
    """Two-qubit regressor: 2x64 hidden, 1 output capped at 0.2."""
    base = dict(
        input_dim=512,
        hidden_width=64,
        output_dim=1,
        output_ceiling=0.2,
        l2=5e-6,
        dropout=5e-6,
        batch_size=32,
        epochs=1000,
    )
    base.update(overrides)
    return MlpConfig(**base)


@dataclass
class ScalerStats:
    """Per-feature standardization; zero-variance features pass through."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "ScalerStats":
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        return cls(mean, std)

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.std


@dataclass
class MlpModel:
    config: MlpConfig
    scaler: ScalerStats
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def n_layers(self) -> int:
        return len(self.weights)


def init_model(config: MlpConfig, scaler: ScalerStats, seed: int) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in config.layer_dims():
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(config, scaler, weights, biases)


def _forward_cached(
    model: MlpModel,
    X: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
):
    """Forward pass keeping intermediates for backprop.

    Dropout (inverted) acts on hidden activations in training mode only.
    """
    cfg = model.config
    scaled = model.scaler.transform(X)
    acts = [scaled]  # inputs to each layer
    pre = []
    masks = []
    h = scaled
    last = model.n_layers() - 1
    for li in range(model.n_layers()):
        z = h @ model.weights[li] + model.biases[li]
        pre.append(z)
        if li < last:
            h = np.maximum(z, 0.0)
            if training and cfg.dropout > 0.0:
                keep = (rng.uniform(size=h.shape) >= cfg.dropout).astype(float)
                keep /= 1.0 - cfg.dropout
                h = h * keep
                masks.append(keep)
            else:
                masks.append(None)
            acts.append(h)
        else:
            h = custom_sigmoid(z, cfg.sigmoid_alpha, cfg.output_ceiling)
    return h, acts, pre, masks


def forward(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Inference-mode predictions (dropout off); accepts one vector or a batch."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[1] != model.config.input_dim:
        raise ValueError(
            f"feature length {X.shape[1]} != input_dim {model.config.input_dim}"
        )
    out, _, _, _ = _forward_cached(model, X, training=False)
    return out[0] if np.asarray(features).ndim == 1 else out


def loss_and_gradients(
    model: MlpModel,
    X: np.ndarray,
    y: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
):
    """Total loss (MSE + L2 penalty) and gradients for every parameter."""
    cfg = model.config
    out, acts, pre, masks = _forward_cached(model, X, training, rng)
    n_terms = out.size
    mse = float(np.mean((out - y) ** 2))
    penalty = cfg.l2 * sum(float(np.sum(w**2)) for w in model.weights)
    # d mse / d out, then through y = U*sigmoid(alpha z):
    # dy/dz = alpha * y * (1 - y/U).
    delta = (2.0 / n_terms) * (out - y)
    delta = delta * (cfg.sigmoid_alpha * out * (1.0 - out / cfg.output_ceiling))
    grads_w = [None] * model.n_layers()
    grads_b = [None] * model.n_layers()
    for li in range(model.n_layers() - 1, -1, -1):
        grads_w[li] = acts[li].T @ delta + 2.0 * cfg.l2 * model.weights[li]
        grads_b[li] = delta.sum(axis=0)
        if li > 0:
            delta = delta @ model.weights[li].T
            if masks[li - 1] is not None:
                delta = delta * masks[li - 1]
            delta = delta * (pre[li - 1] > 0.0)
    return mse + penalty, grads_w, grads_b


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    train_indices: np.ndarray | None = None
    val_indices: np.ndarray | None = None


def train(
    model: MlpModel,
    dataset: Dataset,
    seed: int,
    epochs: int | None = None,
) -> TrainHistory:
    """Mini-batch Adam training, in place; returns per-epoch loss history.

    The validation split is drawn once, seeded, before any updates; the
    same seed therefore reproduces the identical loss history.
    """
    cfg = model.config
    if len(dataset) == 0:
        raise ValueError("empty training dataset")
    y = dataset.labels
    if y.min() <= 0.0 - 1e-15 or y.max() >= cfg.output_ceiling:
        raise ValueError(
            f"labels must lie in (0, {cfg.output_ceiling}); "
            f"saw range [{y.min()}, {y.max()}]"
        )
    X = dataset.features
    n_epochs = cfg.epochs if epochs is None else epochs

    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(dataset))
    n_val = int(round(len(dataset) * cfg.validation_split))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if len(train_idx) == 0:
        raise ValueError("validation split leaves no training examples")
    X_train, y_train = X[train_idx], y[train_idx]
    X_val, y_val = X[val_idx], y[val_idx]

    m_w = [np.zeros_like(w) for w in model.weights]
    v_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_b = [np.zeros_like(b) for b in model.biases]
    step = 0
    history = TrainHistory(train_indices=train_idx, val_indices=val_idx)

    for epoch in range(n_epochs):
        order = rng.permutation(len(X_train))
        batch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, gw, gb = loss_and_gradients(
                model, X_train[batch], y_train[batch], training=True, rng=rng
            )
            if not np.isfinite(loss):
                raise RuntimeError(f"non-finite training loss at epoch {epoch}")
            batch_losses.append(loss)
            step += 1
            bc1 = 1.0 - cfg.adam_beta1**step
            bc2 = 1.0 - cfg.adam_beta2**step
            for params, grads, ms, vs in (
                (model.weights, gw, m_w, v_w),
                (model.biases, gb, m_b, v_b),
            ):
                for p, g, m, v in zip(params, grads, ms, vs):
                    m *= cfg.adam_beta1
                    m += (1.0 - cfg.adam_beta1) * g
                    v *= cfg.adam_beta2
                    v += (1.0 - cfg.adam_beta2) * g**2
                    p -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
        history.train_loss.append(float(np.mean(batch_losses)))
        if len(val_idx):
            val_pred = forward(model, X_val)
            history.val_loss.append(float(np.mean((val_pred - y_val) ** 2)))
    return history


@dataclass
class EvalResult:
    mse_per_output: np.ndarray
    predictions: np.ndarray
    truths: np.ndarray

    @property
    def mse(self) -> float:
        return float(self.mse_per_output.mean())

    def write_pairs_csv(self, path: str | Path, names: Sequence[str] | None = None):
        """Predicted-vs-true pairs for plotting, one row per example."""
        n_out = self.predictions.shape[1]
        names = list(names) if names else [f"y{k}" for k in range(n_out)]
        with open(path, "w") as fh:
            header = [f"true_{n},pred_{n}" for n in names]
            fh.write(",".join(header) + "\n")
            for t_row, p_row in zip(self.truths, self.predictions):
                cells = []
                for t, p in zip(t_row, p_row):
                    cells.append(f"{t!r},{p!r}")
                fh.write(",".join(cells) + "\n")


def evaluate(model: MlpModel, dataset: Dataset) -> EvalResult:
    """Per-output MSE plus the raw predicted/true pairs."""
    if len(dataset) == 0:
        raise ValueError("empty evaluation dataset")
    preds = forward(model, dataset.features)
    mse = ((preds - dataset.labels) ** 2).mean(axis=0)
    return EvalResult(mse, preds, dataset.labels)


def save_model(path: str | Path, model: MlpModel) -> None:
    doc = {
        "schema": MODEL_SCHEMA,
        "config": {
            k: getattr(model.config, k) for k in MlpConfig.__dataclass_fields__
        },
        "scaler": {
            "mean": model.scaler.mean.tolist(),
            "std": model.scaler.std.tolist(),
        },
        "layers": [
            {"w": w.tolist(), "b": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_model(path: str | Path) -> MlpModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != MODEL_SCHEMA:
        raise SchemaError(
            f"expected model schema {MODEL_SCHEMA!r}, got {doc.get('schema')!r}"
        )
    config = MlpConfig(**doc["config"])
    scaler = ScalerStats(
        np.array(doc["scaler"]["mean"], dtype=float),
        np.array(doc["scaler"]["std"], dtype=float),
    )
    weights = [np.array(layer["w"], dtype=float) for layer in doc["layers"]]
    biases = [np.array(layer["b"], dtype=float) for layer in doc["layers"]]
    model = MlpModel(config, scaler, weights, biases)
    expected = config.layer_dims()
    actual = [w.shape for w in weights]
    if actual != [tuple(s) for s in expected]:
        raise SchemaError(
            f"layer shapes {actual} do not chain for config {expected}"
        )
    if scaler.mean.shape != (config.input_dim,):
        raise SchemaError("scaler length does not match input_dim")
    return model


def fit_and_train(
    config: MlpConfig, dataset: Dataset, seed: int, epochs: int | None = None
) -> tuple[MlpModel, TrainHistory]:
    """Fit the scaler on the dataset, initialize, and train."""
    if dataset.features.shape[1] != config.input_dim:
        raise ValueError(
            f"dataset feature length {dataset.features.shape[1]} != "
            f"config input_dim {config.input_dim}"
        )
    scaler = ScalerStats.fit(dataset.features)
    model = init_model(config, scaler, derive_seed(seed, "mlp", "init"))
    history = train(model, dataset, derive_seed(seed, "mlp", "train"), epochs)
    return model, history
