"""First-order optimizers operating on lists of numpy parameter arrays."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _check(params, grads):
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} parameter arrays but {len(grads)} gradients")
    for k, (p, g) in enumerate(zip(params, grads)):
        if np.shape(p) != np.shape(g):
            raise ValueError(f"param {k}: shape {np.shape(p)} but gradient {np.shape(g)}")


@dataclass
class SGD:
    lr: float = 1e-2

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        _check(params, grads)
        return [p - self.lr * g for p, g in zip(params, grads)]


@dataclass
class Adam:
    """Adam with bias-corrected first and second moments."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] | None = field(default=None, repr=False)
    v: list[np.ndarray] | None = field(default=None, repr=False)

    def step(self, params, grads):
        _check(params, grads)
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        out = []
        for k, (p, g) in enumerate(zip(params, grads)):
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            out.append(p - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps))
        return out


@dataclass
class RMSProp:
    lr: float = 1e-4
    decay: float = 0.9
    eps: float = 1e-8
    ms: list[np.ndarray] | None = field(default=None, repr=False)

    def step(self, params, grads):
        _check(params, grads)
        if self.ms is None:
            self.ms = [np.zeros_like(p) for p in params]
        out = []
        for k, (p, g) in enumerate(zip(params, grads)):
            self.ms[k] = self.decay * self.ms[k] + (1.0 - self.decay) * g * g
            out.append(p - self.lr * g / np.sqrt(self.ms[k] + self.eps))
        return out


def make_optimizer(name: str, lr: float | None = None, **kw):
    classes = {"sgd": SGD, "adam": Adam, "rmsprop": RMSProp}
    if name not in classes:
        raise ValueError(f"unknown optimizer {name!r}; expected one of {sorted(classes)}")
    if lr is not None:
        kw["lr"] = lr
    return classes[name](**kw)
