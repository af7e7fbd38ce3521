"""Minibatch SGD with momentum over Model or FusionModel instances.

The loop is deterministic: the epoch shuffle comes from its own generator
seeded by TrainConfig.seed, dropout masks come from the model's generator,
and (seed, data, config) fully determine the trained parameters for a
fixed environment. The trailing partial batch is kept. A non-finite loss
aborts immediately, naming the epoch and batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DivergenceError, DomainError
from .model import EVAL, TRAIN


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 128
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.learning_rate < 0:
            raise ConfigError(f"learning rate must be >= 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")


@dataclass
class History:
    """Per-epoch mean training loss and training accuracy."""

    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)


def _dataset_size(x) -> int:
    if isinstance(x, (tuple, list)):
        sizes = {len(part) for part in x}
        if len(sizes) != 1:
            raise DomainError(f"input parts have different lengths: {sorted(sizes)}")
        return sizes.pop()
    return len(x)


def _take(x, idx):
    if isinstance(x, (tuple, list)):
        return tuple(part[idx] for part in x)
    return x[idx]


def train(model, x, y, cfg: TrainConfig | None = None) -> History:
    """Fit the model in place and return the per-epoch history.

    x is an array for a sequential model or an (x_image, x_raw) pair for a
    fusion model; y holds integer class indices.
    """
    cfg = cfg or TrainConfig()
    n = _dataset_size(x)
    if n == 0:
        raise DomainError("training set is empty")
    y = np.asarray(y)
    if y.shape != (n,):
        raise DomainError(f"labels shape {y.shape} does not match {n} samples")
    y = y.astype(np.int64)
    n_classes = int(model.output_shape[-1])
    if y.min() < 0 or y.max() >= n_classes:
        raise DomainError(
            f"labels must lie in [0, {n_classes - 1}], got [{y.min()}, {y.max()}]"
        )
    params = model.trainable_parameters()
    velocity = {name: np.zeros_like(p) for name, p in params.items()}
    shuffle_rng = np.random.default_rng(cfg.seed)
    history = History()
    model._set_mode(TRAIN) if hasattr(model, "_set_mode") else setattr(model, "mode", TRAIN)
    try:
        for epoch in range(cfg.epochs):
            order = shuffle_rng.permutation(n)
            epoch_loss = 0.0
            epoch_correct = 0
            for batch_index, start in enumerate(range(0, n, cfg.batch_size)):
                idx = order[start : start + cfg.batch_size]
                xb = _take(x, idx)
                yb = y[idx]
                loss, grads, logits, _ = model.train_step(xb, yb)
                if not np.isfinite(loss):
                    raise DivergenceError(epoch, batch_index)
                for name, g in grads.items():
                    v = velocity[name]
                    v *= cfg.momentum
                    v -= cfg.learning_rate * g
                    params[name] += v
                epoch_loss += loss * len(idx)
                epoch_correct += int(np.sum(np.argmax(logits, axis=1) == yb))
            history.loss.append(epoch_loss / n)
            history.accuracy.append(epoch_correct / n)
    finally:
        model._set_mode(EVAL) if hasattr(model, "_set_mode") else setattr(model, "mode", EVAL)
    return history
