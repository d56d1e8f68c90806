"""Mini-batch gradient descent with momentum over encoded frames."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import (
    ConfigError,
    CorruptModelError,
    DivergenceError,
    EmptyInputError,
    StateError,
)
from . import ops
from .model import NetworkSpec, backward_layers, forward_layers

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 4
    iterations: int = 1000
    # the learning rate is multiplied by lr_decay once, halfway through
    lr_decay: float = 0.1
    rng_seed: int = 0
    log_every: int = 50

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must lie in [0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")


class _BatchSampler:
    """Seeded shuffled cycling over dataset indices, full batches always."""

    def __init__(self, count: int, batch_size: int, rng: np.random.Generator):
        self._count = count
        self._batch = batch_size
        self._rng = rng
        self._queue: list[int] = []

    def next_batch(self) -> list[int]:
        while len(self._queue) < self._batch:
            self._queue.extend(self._rng.permutation(self._count).tolist())
        out, self._queue = self._queue[:self._batch], self._queue[self._batch:]
        return out


def train(net: NetworkSpec, dataset, cfg: TrainConfig,
          init: NetworkSpec | None = None) -> tuple[NetworkSpec, list[float]]:
    """Train a network on (DenseFrame, LabelGrid, mask) triples.

    Returns the trained network and the per-iteration mean batch loss.
    Starting weights come from ``init`` when given (its topology must match
    ``net``), otherwise from ``net`` itself; neither argument is mutated.
    """
    if len(dataset) == 0:
        raise EmptyInputError("training needs at least one frame")
    for frame, grid, mask in dataset:
        if not frame.normalized:
            raise StateError("normalize frames before training")
        if grid.shape != frame.shape or mask.shape != frame.shape:
            raise ConfigError("frame, label grid, and mask shapes must agree")
    if init is not None:
        if init.name != net.name or init.layers != net.layers:
            raise CorruptModelError(
                f"initial weights are for topology {init.name}, training {net.name}")
        out = init.copy()
    else:
        out = net.copy()

    inputs = np.stack([frame.values for frame, _, _ in dataset])
    targets = np.stack([grid.ground for _, grid, _ in dataset])
    masks = np.stack([mask for _, _, mask in dataset])

    rng = np.random.default_rng(cfg.rng_seed)
    sampler = _BatchSampler(len(dataset), min(cfg.batch_size, len(dataset)), rng)
    velocity = [None if w is None else (np.zeros_like(w[0]), np.zeros_like(w[1]))
                for w in out.weights]
    ws = ops.Workspace()
    lr = cfg.learning_rate
    history: list[float] = []
    half = cfg.iterations // 2
    for it in range(cfg.iterations):
        if cfg.iterations >= 2 and it == half:
            lr *= cfg.lr_decay
        idx = sampler.next_batch()
        x = inputs[idx]
        logits, cache = forward_layers(out, x, keep_inputs=True, ws=ws)
        loss, grad, _ = ops.softmax_xent(logits, targets[idx], masks[idx])
        if not math.isfinite(loss):
            raise DivergenceError(it)
        grads = backward_layers(out, cache, grad, ws=ws)
        for w, v, g in zip(out.weights, velocity, grads):
            if w is None:
                continue
            v[0][:] = cfg.momentum * v[0] - lr * g[0]
            v[1][:] = cfg.momentum * v[1] - lr * g[1]
            w[0][:] = w[0] + v[0]
            w[1][:] = w[1] + v[1]
        history.append(loss)
        if cfg.log_every and (it + 1) % cfg.log_every == 0:
            log.info("iteration %d/%d  loss %.6f", it + 1, cfg.iterations, loss)
    return out, history
