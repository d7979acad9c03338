"""Supervised training for the detector and the forecaster.

A single train() drives both tasks: binary cross-entropy with a 0.5
decision threshold for detection datasets, mean squared error over the
horizon for forecast datasets.  Optimization is Adam with standard
defaults; the split, the per-epoch shuffles and the weight draw all
derive from one config seed, so a (dataset, spec, config) triple
determines the trained model bit-for-bit.

Seeding scheme (part of the reproducibility contract): the config seed
feeds numpy.random.SeedSequence; its first three children seed, in
order, the weight initialization, the train/validation split, and the
epoch shuffles.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datagen import DatasetKind
from .nn import init_weights

# forward chunk size when computing metrics; bounds cache memory
_EVAL_CHUNK = 512


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 32
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive")
        for name in ("adam_beta1", "adam_beta2"):
            b = getattr(self, name)
            if not 0.0 < b < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not self.adam_epsilon > 0.0:
            raise ValueError("adam_epsilon must be positive")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in [0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class Metrics:
    """Evaluation summary; classification fields are None for forecasts."""

    loss: float
    accuracy: float | None = None
    recall: float | None = None
    precision: float | None = None


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    val_loss: float | None
    accuracy: float | None = None
    recall: float | None = None
    precision: float | None = None


@dataclass
class TrainResult:
    network: object
    history: list
    train_indices: np.ndarray
    val_indices: np.ndarray


def bce_loss(p, label):
    """Binary cross-entropy and its gradient with respect to p.

    Works elementwise on arrays.  p must lie strictly inside (0, 1);
    the sigmoid head's clipped pre-activation guarantees that, which
    also keeps the direct log evaluation exact.
    """
    p = np.asarray(p, dtype=float)
    y = np.asarray(label, dtype=float)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    grad = (p - y) / (p * (1.0 - p))
    if loss.ndim == 0:
        return float(loss), float(grad)
    return loss, grad


def mse_loss(pred, target):
    """Mean squared error over the horizon and its gradient.

    1-D inputs give a scalar loss; 2-D (batch, H) inputs give one loss
    per row.  The gradient is 2 (pred - target) / H either way.
    """
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    err = pred - target
    H = pred.shape[-1]
    grad = 2.0 * err / H
    loss = np.mean(err * err, axis=-1)
    if loss.ndim == 0:
        return float(loss), grad
    return loss, grad


class Adam:
    """In-place Adam over a fixed, ordered parameter dict."""

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999,
                 epsilon=1e-8):
        self._params = dict(params)
        self._m = {name: np.zeros_like(arr) for name, arr in params.items()}
        self._v = {name: np.zeros_like(arr) for name, arr in params.items()}
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0

    def step(self, grads):
        if set(grads) != set(self._params):
            raise ValueError("gradient keys do not match parameters")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for name, arr in self._params.items():
            g = grads[name]
            m = self._m[name]
            v = self._v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            arr -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.epsilon)


def stratified_split(labels, fraction, rng):
    """Per-class validation split; both classes appear on both sides."""
    labels = np.asarray(labels)
    train, val = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = rng.permutation(idx)
        n_val = int(round(len(idx) * fraction))
        val.append(idx[:n_val])
        train.append(idx[n_val:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(val))


def _plain_split(n, fraction, rng):
    idx = rng.permutation(n)
    n_val = int(round(n * fraction))
    return np.sort(idx[n_val:]), np.sort(idx[:n_val])


def _detection_metrics(network, X, y):
    n = X.shape[0]
    p = np.empty(n)
    for lo in range(0, n, _EVAL_CHUNK):
        p[lo:lo + _EVAL_CHUNK] = network.forward(X[lo:lo + _EVAL_CHUNK])[0]
    losses, _ = bce_loss(p, y)
    pred = p > 0.5
    actual = y > 0.5
    tp = int(np.sum(pred & actual))
    tn = int(np.sum(~pred & ~actual))
    fp = int(np.sum(pred & ~actual))
    fn = int(np.sum(~pred & actual))
    recall = tp / (tp + fn) if tp + fn else 1.0
    precision = tp / (tp + fp) if tp + fp else 1.0
    return Metrics(loss=float(np.mean(losses)), accuracy=(tp + tn) / n,
                   recall=recall, precision=precision)


def _forecast_metrics(network, X, targets):
    n = X.shape[0]
    losses = np.empty(n)
    for lo in range(0, n, _EVAL_CHUNK):
        out = network.forward(X[lo:lo + _EVAL_CHUNK])[0]
        losses[lo:lo + _EVAL_CHUNK], _ = mse_loss(out, targets[lo:lo + _EVAL_CHUNK])
    return Metrics(loss=float(np.mean(losses)))


def evaluate(network, dataset):
    """Metrics for a model over a whole dataset, threshold 0.5."""
    if dataset.kind is DatasetKind.DETECTION:
        return _detection_metrics(network, dataset.angles, dataset.labels.astype(float))
    return _forecast_metrics(network, dataset.angles, dataset.targets)


def train(dataset, spec, config):
    """Fit a fresh network to a dataset; fully determined by the seed.

    Returns a TrainResult holding the trained network, one EpochStats
    per epoch (loss/metrics computed on the training split with the
    post-epoch weights, val_loss on the held-out split) and the split
    indices themselves.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    detection = dataset.kind is DatasetKind.DETECTION
    X = dataset.angles
    y = dataset.labels.astype(float) if detection else dataset.targets

    seeds = np.random.SeedSequence(config.seed).spawn(3)
    network = init_weights(spec, seeds[0])
    split_rng = np.random.default_rng(seeds[1])
    shuffle_rng = np.random.default_rng(seeds[2])

    if detection:
        train_idx, val_idx = stratified_split(dataset.labels, config.validation_fraction,
                                              split_rng)
        if len(np.unique(dataset.labels[train_idx])) < 2:
            raise ValueError("detection training split lacks one of the classes")
    else:
        train_idx, val_idx = _plain_split(len(dataset), config.validation_fraction,
                                          split_rng)
    if len(train_idx) == 0:
        raise ValueError("training split is empty")

    opt = Adam(network.parameters(), learning_rate=config.learning_rate,
               beta1=config.adam_beta1, beta2=config.adam_beta2,
               epsilon=config.adam_epsilon)

    history = []
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(train_idx)
        for lo in range(0, len(order), config.batch_size):
            batch = order[lo:lo + config.batch_size]
            Xb = X[batch]
            out, cache = network.forward(Xb)
            if detection:
                _, grad = bce_loss(out, y[batch])
            else:
                _, grad = mse_loss(out, y[batch])
            opt.step(network.backward(cache, grad / len(batch)))

        if detection:
            stats = _detection_metrics(network, X[train_idx], y[train_idx])
            val_loss = (_detection_metrics(network, X[val_idx], y[val_idx]).loss
                        if len(val_idx) else None)
        else:
            stats = _forecast_metrics(network, X[train_idx], y[train_idx])
            val_loss = (_forecast_metrics(network, X[val_idx], y[val_idx]).loss
                        if len(val_idx) else None)
        history.append(EpochStats(epoch=epoch, loss=stats.loss, val_loss=val_loss,
                                  accuracy=stats.accuracy, recall=stats.recall,
                                  precision=stats.precision))
    return TrainResult(network=network, history=history,
                       train_indices=train_idx, val_indices=val_idx)


def write_history_csv(history, path):
    """Per-epoch curve as CSV; classification columns stay empty for
    forecast runs."""
    def cell(v):
        return "" if v is None else repr(float(v))

    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "val_loss", "accuracy", "recall", "precision"])
        for row in history:
            writer.writerow([row.epoch, cell(row.loss), cell(row.val_loss),
                             cell(row.accuracy), cell(row.recall), cell(row.precision)])
