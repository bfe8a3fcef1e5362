"""Aggregation of the five sub-scores into one scalar in (0,1).

A small MLP (default 5 -> 32 -> 16 -> 1, ReLU hidden, sigmoid output)
applied to the sigmoid-transformed sub-score vector, trained with plain
mini-batch gradient descent on MSE against human scores in [0,1]. Early
stopping tracks Kendall tau_b on a held-out split and the best-epoch
snapshot is returned, since rank agreement is what the score is used for.

Everything is deterministic given the seed: Xavier-uniform init, the
validation split, and every shuffle come from one seeded generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError, SchemaError, TrainingError
from .stats import kendall_tau_b
from .types import SubScores

DEFAULT_LAYER_DIMS = (5, 32, 16, 1)

MODEL_FILE_VERSION = 1


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # two-branch form avoids overflow warnings for large negative inputs
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class AggregatorModel:
    """MLP weights; weights[i] has shape (layer_dims[i+1], layer_dims[i])."""

    layer_dims: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    rng_seed: int

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise ValueError(f"bad layer dims: {dims}")
        if dims[0] != 5:
            raise ValueError(f"input width must be 5 (one per sub-score), got {dims[0]}")
        if dims[-1] != 1:
            raise ValueError(f"output width must be 1, got {dims[-1]}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("layer count mismatch between dims and parameters")
        frozen_w = []
        frozen_b = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.ascontiguousarray(np.asarray(w, dtype=np.float64))
            b = np.ascontiguousarray(np.asarray(b, dtype=np.float64))
            if w.shape != (dims[i + 1], dims[i]):
                raise ValueError(
                    f"layer {i} weight shape {w.shape}, expected {(dims[i + 1], dims[i])}"
                )
            if b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i} bias shape {b.shape}, expected ({dims[i + 1]},)")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i} has non-finite parameters")
            w.flags.writeable = False
            b.flags.writeable = False
            frozen_w.append(w)
            frozen_b.append(b)
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "weights", tuple(frozen_w))
        object.__setattr__(self, "biases", tuple(frozen_b))


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 3e-5
    max_epochs: int = 500
    patience: int = 20
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("counts must be positive")
        if not self.learning_rate > 0.0:
            raise ValueError(f"learning rate must be positive: {self.learning_rate}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError(
                f"validation fraction must be in (0,1): {self.validation_fraction}"
            )


@dataclass(frozen=True)
class TrainRecord:
    epoch: int
    train_mse: float
    validation_tau_b: float
    best_epoch: int

    def __post_init__(self):
        if self.best_epoch > self.epoch:
            raise ValueError("best_epoch cannot exceed current epoch")


def init_model(seed: int, layer_dims: tuple[int, ...] = DEFAULT_LAYER_DIMS) -> AggregatorModel:
    """Xavier-uniform weights, zero biases, from a dedicated generator."""
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return AggregatorModel(
        layer_dims=tuple(layer_dims),
        weights=tuple(weights),
        biases=tuple(biases),
        rng_seed=int(seed),
    )


def sigmoid_transform(s: SubScores) -> np.ndarray:
    """Elementwise logistic squash of the raw sub-score vector into (0,1)."""
    return _sigmoid(s.as_vector())


def _forward_batch(
    weights, biases, x: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Returns (pre-activations per layer, activations per layer incl. input)."""
    zs = []
    acts = [x]
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w.T + b
        zs.append(z)
        h = _sigmoid(z) if i == last else np.maximum(z, 0.0)
        acts.append(h)
    return zs, acts


def forward(m: AggregatorModel, s: SubScores) -> float:
    """The aggregated score for one sub-score vector, in (0,1)."""
    x = sigmoid_transform(s)[np.newaxis, :]
    _, acts = _forward_batch(m.weights, m.biases, x)
    return float(acts[-1][0, 0])


def _backprop(weights, biases, x: np.ndarray, y: np.ndarray):
    """MSE loss and its gradients over a batch; x is already sigmoid-transformed."""
    zs, acts = _forward_batch(weights, biases, x)
    pred = acts[-1][:, 0]
    resid = pred - y
    loss = float(np.mean(resid**2))

    batch = x.shape[0]
    # d loss / d pred, then through the output sigmoid
    delta = (2.0 * resid / batch)[:, np.newaxis] * (acts[-1] * (1.0 - acts[-1]))
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        grads_w[i] = delta.T @ acts[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i]) * (zs[i - 1] > 0.0)
    return loss, grads_w, grads_b


def mse_gradients(m: AggregatorModel, s: SubScores, target: float):
    """Analytic gradients of (forward(m,s) - target)^2 w.r.t. all parameters."""
    x = sigmoid_transform(s)[np.newaxis, :]
    y = np.array([float(target)])
    _, gw, gb = _backprop(m.weights, m.biases, x, y)
    return gw, gb


def gradient_check(m: AggregatorModel, s: SubScores, target: float) -> float:
    """Max relative error between analytic and central-difference gradients.

    h = 1e-5; the relative error floor 1e-6 keeps finite-difference noise
    on dead-ReLU parameters (both gradients ~ 0) from dominating.
    """
    h = 1e-5
    x = sigmoid_transform(s)[np.newaxis, :]
    y = np.array([float(target)])
    gw, gb = mse_gradients(m, s, target)

    weights = [w.copy() for w in m.weights]
    biases = [b.copy() for b in m.biases]

    def loss_now():
        zs, acts = _forward_batch(weights, biases, x)
        return float((acts[-1][0, 0] - y[0]) ** 2)

    worst = 0.0
    for analytic, params in ((gw, weights), (gb, biases)):
        for grad, arr in zip(analytic, params):
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + h
                up = loss_now()
                flat[k] = orig - h
                down = loss_now()
                flat[k] = orig
                numeric = (up - down) / (2.0 * h)
                scale = max(abs(gflat[k]), abs(numeric), 1e-6)
                worst = max(worst, abs(gflat[k] - numeric) / scale)
    return worst


def train(
    data,
    cfg: TrainConfig = TrainConfig(),
    seed: int = 0,
    layer_dims: tuple[int, ...] = DEFAULT_LAYER_DIMS,
) -> tuple[AggregatorModel, list[TrainRecord]]:
    """Fit the MLP to (SubScores, human score) rows.

    Mini-batch gradient descent on MSE with a deterministic shuffle per
    epoch; early stopping on validation tau_b with the configured
    patience. Returns the snapshot from the best-tau_b epoch together
    with the full per-epoch record.
    """
    rows = list(data)
    if len(rows) < 10:
        raise TrainingError(f"insufficient data: need at least 10 rows, got {len(rows)}")
    x_raw = np.stack([s.as_vector() for s, _ in rows])
    y = np.array([float(t) for _, t in rows])
    if np.any(y < 0.0) or np.any(y > 1.0):
        raise TrainingError("targets must be pre-normalized to [0,1]")
    x = _sigmoid(x_raw)

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(rows))
    val_n = max(2, int(round(cfg.validation_fraction * len(rows))))
    val_idx = order[:val_n]
    train_idx = order[val_n:]
    if train_idx.size < 1:
        raise TrainingError("validation split leaves no training rows")
    if np.all(y[val_idx] == y[val_idx][0]):
        raise DegenerateDataError("degenerate targets: validation split has one value")

    model0 = init_model(seed, layer_dims)
    weights = [w.copy() for w in model0.weights]
    biases = [b.copy() for b in model0.biases]

    best_tau = -np.inf
    best_epoch = 0
    best_params = None
    stall = 0
    records: list[TrainRecord] = []

    for epoch in range(1, cfg.max_epochs + 1):
        perm = rng.permutation(train_idx.size)
        shuffled = train_idx[perm]
        for start in range(0, shuffled.size, cfg.batch_size):
            chunk = shuffled[start : start + cfg.batch_size]
            loss, gw, gb = _backprop(weights, biases, x[chunk], y[chunk])
            if not np.isfinite(loss):
                raise TrainingError(f"diverged: non-finite loss at epoch {epoch}")
            for i in range(len(weights)):
                weights[i] -= cfg.learning_rate * gw[i]
                biases[i] -= cfg.learning_rate * gb[i]

        _, acts = _forward_batch(weights, biases, x[train_idx])
        train_mse = float(np.mean((acts[-1][:, 0] - y[train_idx]) ** 2))
        _, val_acts = _forward_batch(weights, biases, x[val_idx])
        val_pred = val_acts[-1][:, 0]
        try:
            tau = kendall_tau_b(np.column_stack([val_pred, y[val_idx]]))
        except DegenerateDataError:
            tau = float("nan")  # constant predictions this epoch; cannot be best

        if tau > best_tau:
            best_tau = tau
            best_epoch = epoch
            best_params = ([w.copy() for w in weights], [b.copy() for b in biases])
            stall = 0
        else:
            stall += 1
        records.append(
            TrainRecord(
                epoch=epoch, train_mse=train_mse, validation_tau_b=tau, best_epoch=best_epoch
            )
        )
        if stall >= cfg.patience:
            break

    if best_params is None:
        raise TrainingError("validation predictions were constant in every epoch")
    model = AggregatorModel(
        layer_dims=tuple(layer_dims),
        weights=tuple(best_params[0]),
        biases=tuple(best_params[1]),
        rng_seed=int(seed),
    )
    return model, records


def save_model(m: AggregatorModel, path) -> None:
    doc = {
        "version": MODEL_FILE_VERSION,
        "layer_dims": list(m.layer_dims),
        "weights": [w.tolist() for w in m.weights],
        "biases": [b.tolist() for b in m.biases],
        "seed": m.rng_seed,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_model(path) -> AggregatorModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"unreadable model file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != MODEL_FILE_VERSION:
        raise SchemaError(f"unsupported model file version in {path}")
    for key in ("layer_dims", "weights", "biases", "seed"):
        if key not in doc:
            raise SchemaError(f"model file {path} missing key: {key}")
    try:
        return AggregatorModel(
            layer_dims=tuple(int(d) for d in doc["layer_dims"]),
            weights=tuple(np.asarray(w, dtype=np.float64) for w in doc["weights"]),
            biases=tuple(np.asarray(b, dtype=np.float64) for b in doc["biases"]),
            rng_seed=int(doc["seed"]),
        )
    except ValueError as exc:
        raise SchemaError(f"invalid model parameters in {path}: {exc}") from exc
