"""Generalized advantage estimation over one trajectory segment."""

from __future__ import annotations

import numpy as np


def gae(rewards, values, bootstrap_value: float, gamma: float, lam: float):
    """Exponentially weighted advantages from TD residuals.

    delta_t = r_t + gamma*V_{t+1} - V_t, A_t = delta_t + gamma*lam*A_{t+1};
    V beyond the segment end is the bootstrap (0 for terminal states).
    Returns (advantages, returns) with returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if rewards.shape != values.shape:
        raise ValueError("rewards and values must have equal length")
    n = rewards.shape[0]
    advantages = np.zeros(n)
    next_value = bootstrap_value
    acc = 0.0
    for t in range(n - 1, -1, -1):
        delta = rewards[t] + gamma * next_value - values[t]
        acc = delta + gamma * lam * acc
        advantages[t] = acc
        next_value = values[t]
    return advantages, advantages + values
