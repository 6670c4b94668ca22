"""Stochastic Gaussian policy shared by both trainers.

The network emits the action mean; the log standard deviation is a
single learned state-independent vector (init log 0.5, clamped to
[-5, 2]). PPO consumes raw Gaussian samples (entropy and ratios on the
pre-squash distribution); SAC squashes samples through tanh and corrects
the density with the usual log(1 - tanh^2 + 1e-6) term.
"""

from __future__ import annotations

import numpy as np

from .mlp import Mlp

LOG_STD_INIT = np.log(0.5)
LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6
LOG_2PI = np.log(2.0 * np.pi)


def gaussian_logprob(mean, log_std, x) -> np.ndarray:
    """Log density of x under a diagonal Gaussian, summed over action dims."""
    mean = np.atleast_2d(mean)
    x = np.atleast_2d(x)
    std = np.exp(log_std)
    z = (x - mean) / std
    return (-0.5 * z * z - log_std - 0.5 * LOG_2PI).sum(axis=1)


def squashed_logprob(mean, log_std, u) -> np.ndarray:
    """Log density of a = tanh(u) for a pre-squash Gaussian sample u."""
    u = np.atleast_2d(u)
    correction = np.log(1.0 - np.tanh(u) ** 2 + SQUASH_EPS).sum(axis=1)
    return gaussian_logprob(mean, log_std, u) - correction


class GaussianPolicy:
    """Mean network plus the free log-std parameter vector."""

    def __init__(self, obs_dim: int, act_dim: int, hidden_units: int,
                 num_layers: int, rng):
        sizes = [obs_dim] + [hidden_units] * num_layers + [act_dim]
        self.net = Mlp(sizes, rng, final_gain=0.01)
        self.log_std_raw = np.full(act_dim, LOG_STD_INIT)
        self.act_dim = act_dim
        self.obs_dim = obs_dim

    @property
    def params(self) -> list:
        return self.net.params + [self.log_std_raw]

    def set_params(self, arrays) -> None:
        self.net.set_params(arrays[:-1])
        self.log_std_raw = np.asarray(arrays[-1], dtype=np.float64)

    def log_std(self) -> np.ndarray:
        return np.clip(self.log_std_raw, LOG_STD_MIN, LOG_STD_MAX)

    def log_std_grad_mask(self) -> np.ndarray:
        # clamp is flat outside the window, so gradients vanish there
        inside = (self.log_std_raw > LOG_STD_MIN) & (self.log_std_raw < LOG_STD_MAX)
        return inside.astype(np.float64)

    def mean(self, obs: np.ndarray, cache: bool = False):
        return self.net.forward(obs, cache=cache)

    def sample_raw(self, obs: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
        """Pre-squash Gaussian sample and its log-prob (PPO action path)."""
        mean = self.net.forward(obs)
        noise = rng.standard_normal(mean.shape)
        u = mean + np.exp(self.log_std()) * noise
        return u, gaussian_logprob(mean, self.log_std(), u)

    def entropy(self) -> float:
        """Entropy of the pre-squash Gaussian (state-independent)."""
        return float(np.sum(self.log_std() + 0.5 * (LOG_2PI + 1.0)))
