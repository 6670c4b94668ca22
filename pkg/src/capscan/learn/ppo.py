"""Proximal policy optimization: clipped surrogate, GAE, linear LR decay.

The loss per minibatch is
    -min(ratio*A, clip(ratio, 1-eps, 1+eps)*A) + 0.5*value MSE - beta*entropy
with advantages normalized over the whole buffer and ratios computed on
the pre-squash Gaussian. Gradients are assembled analytically and pushed
through the nets' backward passes; one optimizer step per minibatch.
"""

from __future__ import annotations

import warnings

from dataclasses import dataclass, field

import numpy as np

from .gae import gae
from .mlp import Mlp
from .optim import Adam, clip_grad_norm, linear_lr
from .policy import GaussianPolicy, gaussian_logprob

ADV_NORM_EPS = 1e-8


@dataclass
class PpoConfig:
    batch_size: int = 512
    buffer_size: int = 4096
    learning_rate: float = 1e-3
    lr_schedule: str = "linear"
    max_steps: int = 3_000_000
    gamma: float = 0.99
    lam: float = 0.95
    clip_epsilon: float = 0.2
    entropy_beta: float = 0.005
    num_epoch: int = 5
    time_horizon: int = 1024
    hidden_units: int = 128
    num_layers: int = 2
    value_loss_coef: float = 0.5
    max_grad_norm: float = 0.5
    summary_freq: int = 10_000
    checkpoint_interval: int = 500_000
    seed: int = 0
    # recurrent-trainer knobs: accepted for config compatibility, unused
    memory_size: int | None = None
    sequence_length: int | None = None

    def __post_init__(self):
        if self.batch_size > self.buffer_size:
            raise ValueError("batch_size must not exceed buffer_size")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must be in [0, 1]")
        if self.clip_epsilon <= 0.0:
            raise ValueError("clip_epsilon must be positive")
        if self.memory_size is not None or self.sequence_length is not None:
            warnings.warn("memory_size/sequence_length configure recurrent "
                          "trainers; the feed-forward policy ignores them",
                          stacklevel=2)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "PpoConfig":
        return cls(**d)


def ppo_loss_and_grads(policy: GaussianPolicy, value_net: Mlp, batch: dict,
                       clip_epsilon: float, entropy_beta: float,
                       value_loss_coef: float):
    """Scalar loss pieces and exact gradients for one minibatch.

    batch: obs (N,D), actions (N,A) pre-squash, old_logp (N,),
    advantages (N,), returns (N,).
    Returns (stats dict, policy grads list, value grads list).
    """
    obs = batch["obs"]
    actions = batch["actions"]
    old_logp = batch["old_logp"]
    adv = batch["advantages"]
    rets = batch["returns"]
    n = obs.shape[0]

    mean, acts_pi = policy.mean(obs, cache=True)
    log_std = policy.log_std()
    std = np.exp(log_std)
    logp = gaussian_logprob(mean, log_std, actions)
    ratio = np.exp(logp - old_logp)

    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    surr1 = ratio * adv
    surr2 = clipped * adv
    policy_loss = -np.minimum(surr1, surr2).mean()
    # gradient flows only where the unclipped branch is selected
    use1 = surr1 <= surr2
    dlogp = np.where(use1, -ratio * adv / n, 0.0)

    z = (actions - mean) / std
    dmean = dlogp[:, None] * (z / std)                # dlogp/dmean = z/std
    dlog_std_per = dlogp[:, None] * (z * z - 1.0)     # dlogp/dlog_std
    entropy = policy.entropy()
    dlog_std = dlog_std_per.sum(axis=0) - entropy_beta * 1.0
    dlog_std *= policy.log_std_grad_mask()

    pol_grads, _ = policy.net.backward(acts_pi, dmean)
    pol_grads = pol_grads + [dlog_std]

    values, acts_v = value_net.forward(obs, cache=True)
    values = values[:, 0]
    err = values - rets
    value_loss = value_loss_coef * np.mean(err * err)
    dvalue = (2.0 * value_loss_coef * err / n)[:, None]
    val_grads, _ = value_net.backward(acts_v, dvalue)

    loss = policy_loss + value_loss - entropy_beta * entropy
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite PPO loss: policy={policy_loss!r} "
                                 f"value={value_loss!r} entropy={entropy!r}")
    stats = {"loss": float(loss), "policy_loss": float(policy_loss),
             "value_loss": float(value_loss), "entropy": float(entropy),
             "ratio_mean": float(ratio.mean())}
    return stats, pol_grads, val_grads


@dataclass
class RolloutBuffer:
    """Fixed-size on-policy buffer, filled once per update cycle."""

    capacity: int
    obs_dim: int
    act_dim: int
    obs: np.ndarray = field(init=False)
    actions: np.ndarray = field(init=False)
    rewards: np.ndarray = field(init=False)
    values: np.ndarray = field(init=False)
    logp: np.ndarray = field(init=False)
    terminated: np.ndarray = field(init=False)
    cut: np.ndarray = field(init=False)  # segment boundary after this index
    bootstrap: np.ndarray = field(init=False)
    size: int = 0

    def __post_init__(self):
        c = self.capacity
        self.obs = np.zeros((c, self.obs_dim))
        self.actions = np.zeros((c, self.act_dim))
        self.rewards = np.zeros(c)
        self.values = np.zeros(c)
        self.logp = np.zeros(c)
        self.terminated = np.zeros(c, dtype=bool)
        self.cut = np.zeros(c, dtype=bool)
        self.bootstrap = np.zeros(c)

    def add(self, obs, action, reward, value, logp) -> int:
        i = self.size
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.values[i] = value
        self.logp[i] = logp
        self.size += 1
        return i

    def mark_cut(self, index: int, terminated: bool, bootstrap_value: float):
        self.cut[index] = True
        self.terminated[index] = terminated
        self.bootstrap[index] = 0.0 if terminated else bootstrap_value

    def full(self) -> bool:
        return self.size >= self.capacity

    def compute_advantages(self, gamma: float, lam: float):
        """Segment-wise GAE over the filled buffer; returns (adv, returns)."""
        adv = np.zeros(self.size)
        rets = np.zeros(self.size)
        start = 0
        for i in range(self.size):
            if self.cut[i]:
                seg = slice(start, i + 1)
                adv[seg], rets[seg] = gae(self.rewards[seg], self.values[seg],
                                          self.bootstrap[i], gamma, lam)
                start = i + 1
        if start != self.size:
            raise RuntimeError("rollout buffer must end on a segment cut")
        return adv, rets

    def reset(self):
        self.size = 0
        self.cut[:] = False
        self.terminated[:] = False


class PpoTrainer:
    """On-policy rollout/update loop against one environment instance."""

    def __init__(self, env, config: PpoConfig):
        self.env = env
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self._episode_seed = config.seed
        self._obs = self._reset_env()
        obs_dim = self._obs.shape[0]
        act_dim = env.action_dim
        init_rng = np.random.default_rng(config.seed)
        self.policy = GaussianPolicy(obs_dim, act_dim, config.hidden_units,
                                     config.num_layers, init_rng)
        self.value_net = Mlp([obs_dim] + [config.hidden_units] * config.num_layers
                             + [1], init_rng)
        self.optimizer = Adam(self.policy.params + self.value_net.params)
        self.buffer = RolloutBuffer(config.buffer_size, obs_dim, act_dim)
        self.env_steps = 0
        self.episode_reward = 0.0
        self.episode_length = 0
        self.completed_episodes: list[tuple[float, int]] = []
        self.last_update_stats: dict = {}
        self._horizon_count = 0

    def _reset_env(self):
        obs = self.env.reset(self._episode_seed)
        self._episode_seed += 1
        return self.env.normalize_observation(obs)

    def current_lr(self) -> float:
        if self.config.lr_schedule == "linear":
            return linear_lr(self.env_steps, self.config.max_steps,
                             self.config.learning_rate)
        return self.config.learning_rate

    def act_deterministic(self, obs_normalized: np.ndarray) -> np.ndarray:
        return np.clip(self.policy.mean(obs_normalized)[0], -1.0, 1.0)

    def collect_steps(self, n: int) -> None:
        """Advance the env n steps, filling the rollout buffer."""
        for _ in range(n):
            u, logp = self.policy.sample_raw(self._obs, self.rng)
            value = float(self.value_net.forward(self._obs)[0, 0])
            result = self.env.step(u[0])
            next_obs = self.env.normalize_observation(result.observation)
            idx = self.buffer.add(self._obs, u[0], result.reward, value, logp[0])
            self.env_steps += 1
            self.episode_reward += result.reward
            self.episode_length += 1
            self._horizon_count += 1

            done = result.terminated or result.truncated
            cut = (done or self._horizon_count >= self.config.time_horizon
                   or self.buffer.full())
            if cut:
                bootstrap = 0.0
                if not result.terminated:
                    bootstrap = float(self.value_net.forward(next_obs)[0, 0])
                self.buffer.mark_cut(idx, result.terminated, bootstrap)
                self._horizon_count = 0
            if done:
                self.completed_episodes.append(
                    (self.episode_reward, self.episode_length))
                self.episode_reward = 0.0
                self.episode_length = 0
                self._obs = self._reset_env()
            else:
                self._obs = next_obs
            if self.buffer.full():
                self.update()

    def update(self) -> dict:
        cfg = self.config
        adv, rets = self.buffer.compute_advantages(cfg.gamma, cfg.lam)
        adv = (adv - adv.mean()) / (adv.std() + ADV_NORM_EPS)
        n = self.buffer.size
        lr = self.current_lr()
        stats_acc: list[dict] = []
        for _ in range(cfg.num_epoch):
            order = self.rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                sel = order[start:start + cfg.batch_size]
                batch = {
                    "obs": self.buffer.obs[sel],
                    "actions": self.buffer.actions[sel],
                    "old_logp": self.buffer.logp[sel],
                    "advantages": adv[sel],
                    "returns": rets[sel],
                }
                stats, pol_grads, val_grads = ppo_loss_and_grads(
                    self.policy, self.value_net, batch,
                    cfg.clip_epsilon, cfg.entropy_beta, cfg.value_loss_coef)
                grads = pol_grads + val_grads
                clip_grad_norm(grads, cfg.max_grad_norm)
                self.optimizer.step(grads, lr)
                stats_acc.append(stats)
        self.buffer.reset()
        self.last_update_stats = {
            "policy_loss": float(np.mean([s["policy_loss"] for s in stats_acc])),
            "value_loss": float(np.mean([s["value_loss"] for s in stats_acc])),
            "entropy": float(np.mean([s["entropy"] for s in stats_acc])),
            "learning_rate": lr,
        }
        return self.last_update_stats

    def drain_episode_stats(self) -> list[tuple[float, int]]:
        out = self.completed_episodes
        self.completed_episodes = []
        return out

    def parameter_arrays(self) -> dict:
        out = {}
        for i, arr in enumerate(self.policy.params):
            out[f"policy/{i}"] = arr
        for i, arr in enumerate(self.value_net.params):
            out[f"value/{i}"] = arr
        return out
