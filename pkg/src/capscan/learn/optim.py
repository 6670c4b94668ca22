"""Adaptive-moment optimizer and the linear learning-rate schedule."""

from __future__ import annotations

import numpy as np

LR_FLOOR = 1e-10


def linear_lr(step: int, max_steps: int, lr0: float) -> float:
    """Linearly decayed rate, floored so late updates never stall at zero."""
    if max_steps <= 0:
        return max(lr0, LR_FLOOR)
    frac = min(max(step, 0), max_steps) / max_steps
    return max(lr0 * (1.0 - frac), LR_FLOOR)


class Adam:
    """Adam over a list of parameter arrays, updated in place."""

    def __init__(self, params, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.params = list(params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads, lr: float) -> None:
        if len(grads) != len(self.params):
            raise ValueError("gradient list length mismatch")
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def clip_grad_norm(grads, max_norm: float) -> float:
    """Scale gradients in place to a global L2 norm bound; returns the norm."""
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for g in grads:
            g *= scale
    return total
