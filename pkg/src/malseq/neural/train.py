from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..sequences import PAD
from .adam import AdamState, adam_step
from .models import SequenceModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    lr: float = 1e-3

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


def train_neural(model: SequenceModel, codes, labels, cfg: TrainConfig = TrainConfig()):
    """Mini-batch Adam on mean binary cross-entropy.

    Returns ``(model, history)`` where ``history[e]`` is the size-weighted mean
    batch loss seen during epoch ``e``. Rows are reshuffled every epoch from a
    generator seeded with ``cfg.seed``.
    """
    codes = np.asarray(codes, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.float64)
    if len(codes) == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(cfg.seed)
    state = AdamState(lr=cfg.lr)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(codes))
        total = 0.0
        for s in range(0, len(order), cfg.batch_size):
            rows = order[s:s + cfg.batch_size]
            loss, grads = model.loss_and_grad(codes[rows], labels[rows])
            adam_step(model.params, grads, state)
            total += loss * len(rows)
        history.append(total / len(codes))
        if np.any(model.params["E"][PAD] != 0.0):
            raise RuntimeError("padding embedding row drifted from zero")
        log.debug("%s epoch %d loss %.6f", model.kind, epoch + 1, history[-1])
    return model, history


def numeric_gradient(model: SequenceModel, codes, labels, name: str, h: float = 1e-5) -> np.ndarray:
    p = model.params[name]
    out = np.zeros_like(p)
    for idx in np.ndindex(p.shape):
        if name == "E" and idx[0] == PAD:
            continue
        orig = p[idx]
        p[idx] = orig + h
        up = model.loss(codes, labels)
        p[idx] = orig - h
        down = model.loss(codes, labels)
        p[idx] = orig
        out[idx] = (up - down) / (2 * h)
    return out


def gradient_check(model: SequenceModel, codes, labels, h: float = 1e-5, grad_scale: dict | None = None) -> float:
    """Largest relative gap between backprop and central-difference gradients.

    The gap for one entry is ``|a - n| / max(|a| + |n|, 1e-8)``. The frozen
    padding row is excluded. ``grad_scale`` multiplies named analytic
    gradients before comparison, which lets a test plant a known bug.
    """
    _, grads = model.loss_and_grad(codes, labels)
    worst = 0.0
    for name in model.params:
        a = grads[name] * (grad_scale or {}).get(name, 1.0)
        n = numeric_gradient(model, codes, labels, name, h)
        if name == "E":
            a, n = a[PAD + 1:], n[PAD + 1:]
        if a.size == 0:
            continue
        rel = np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), 1e-8)
        worst = max(worst, float(rel.max()))
    return worst
