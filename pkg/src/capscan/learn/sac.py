"""Soft actor-critic: twin Q, tanh-squashed policy, tuned temperature.

Targets follow the clipped double-Q rule
    y = r + gamma*(1-terminated)*(min(Q1', Q2')(s', a') - alpha*log pi(a'|s'))
with truncated episode ends bootstrapping (only true boundary violations
are terminal). The policy is updated through reparameterized samples and
the temperature alpha is driven toward a fixed entropy target. Target
networks track the online ones by Polyak averaging.
"""

from __future__ import annotations

import warnings

from dataclasses import dataclass

import numpy as np

from .mlp import Mlp
from .optim import Adam, linear_lr
from .policy import SQUASH_EPS, GaussianPolicy, squashed_logprob


@dataclass
class SacConfig:
    batch_size: int = 512
    replay_capacity: int = 512_000
    learning_rate: float = 5e-4
    lr_schedule: str = "linear"
    max_steps: int = 3_000_000
    gamma: float = 0.99
    tau: float = 0.005
    initial_temperature: float = 1.0
    target_entropy: float | None = None   # default: -action_dim
    warmup_steps: int = 1000
    update_interval: int = 1               # env steps per gradient update
    hidden_units: int = 128
    num_layers: int = 2
    summary_freq: int = 10_000
    checkpoint_interval: int = 500_000
    seed: int = 0
    memory_size: int | None = None
    sequence_length: int | None = None

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        if self.replay_capacity < self.batch_size:
            raise ValueError("replay_capacity must hold at least one batch")
        if self.update_interval < 1:
            raise ValueError("update_interval must be >= 1")
        if self.memory_size is not None or self.sequence_length is not None:
            warnings.warn("memory_size/sequence_length configure recurrent "
                          "trainers; the feed-forward policy ignores them",
                          stacklevel=2)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "SacConfig":
        return cls(**d)


class ReplayBuffer:
    """Preallocated ring buffer; oldest transitions evicted first."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, act_dim))
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.terminated = np.zeros(capacity, dtype=bool)
        self.size = 0
        self.head = 0

    def add(self, obs, action, reward, next_obs, terminated: bool) -> None:
        i = self.head
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.terminated[i] = terminated
        self.head = (self.head + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng) -> dict:
        idx = rng.integers(0, self.size, size=batch_size)
        return {
            "obs": self.obs[idx],
            "actions": self.actions[idx],
            "rewards": self.rewards[idx],
            "next_obs": self.next_obs[idx],
            "terminated": self.terminated[idx],
        }


def q_forward(q_net: Mlp, obs: np.ndarray, actions: np.ndarray,
              cache: bool = False):
    x = np.concatenate([obs, actions], axis=1)
    return q_net.forward(x, cache=cache)


def sac_q_loss_and_grads(q_net: Mlp, obs, actions, targets):
    """MSE of Q(s,a) against fixed targets; returns (loss, grads)."""
    n = obs.shape[0]
    q, acts = q_forward(q_net, obs, actions, cache=True)
    q = q[:, 0]
    err = q - targets
    loss = float(np.mean(err * err))
    grads, _ = q_net.backward(acts, (2.0 * err / n)[:, None])
    return loss, grads


def sac_policy_loss_and_grads(policy: GaussianPolicy, q1: Mlp, q2: Mlp,
                              obs: np.ndarray, noise: np.ndarray, alpha: float):
    """L = mean(alpha*log pi(a|s) - min(Q1,Q2)(s, a)) with a = tanh(mu+sigma*xi).

    The Gaussian part of log pi reduces to constants in mu (reparameterized),
    so only the tanh correction and the Q path feed the mean gradient.
    Returns (loss, policy grads, mean log pi).
    """
    n, act_dim = noise.shape
    mean, acts_pi = policy.mean(obs, cache=True)
    log_std = policy.log_std()
    std = np.exp(log_std)
    u = mean + std * noise
    a = np.tanh(u)
    logp = squashed_logprob(mean, log_std, u)

    q1_val, acts_q1 = q_forward(q1, obs, a, cache=True)
    q2_val, acts_q2 = q_forward(q2, obs, a, cache=True)
    q1_val = q1_val[:, 0]
    q2_val = q2_val[:, 0]
    qmin = np.minimum(q1_val, q2_val)
    loss = float(np.mean(alpha * logp - qmin))

    # dL/da through the min-selected Q network (input gradients, frozen params)
    pick1 = (q1_val <= q2_val)[:, None]
    dq_out = np.full((n, 1), -1.0 / n)
    _, din1 = q1.backward(acts_q1, dq_out)
    _, din2 = q2.backward(acts_q2, dq_out)
    da_q = np.where(pick1, din1[:, -act_dim:], din2[:, -act_dim:])

    # dL/du from the tanh log-density correction: alpha/n * 2a(1-a^2)/(1-a^2+eps)
    one_m_a2 = 1.0 - a * a
    dcorr_du = 2.0 * a * one_m_a2 / (one_m_a2 + SQUASH_EPS)
    du = (alpha / n) * dcorr_du + da_q * one_m_a2
    dmean = du
    # u tracks mean, so the Gaussian density term only feeds log_std: -1 per dim
    dlog_std = (du * noise * std).sum(axis=0) - alpha * np.ones(act_dim)
    dlog_std *= policy.log_std_grad_mask()

    grads, _ = policy.net.backward(acts_pi, dmean)
    grads = grads + [dlog_std]
    return loss, grads, float(np.mean(logp))


class SacTrainer:
    """Off-policy loop: replay collection with periodic twin-Q/policy updates."""

    def __init__(self, env, config: SacConfig):
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
        q_sizes = [obs_dim + act_dim] + [config.hidden_units] * config.num_layers + [1]
        self.q1 = Mlp(q_sizes, init_rng)
        self.q2 = Mlp(q_sizes, init_rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = np.array([np.log(config.initial_temperature)])
        self.target_entropy = (config.target_entropy
                               if config.target_entropy is not None
                               else -float(act_dim))
        self.policy_opt = Adam(self.policy.params)
        self.q1_opt = Adam(self.q1.params)
        self.q2_opt = Adam(self.q2.params)
        self.alpha_opt = Adam([self.log_alpha])
        self.replay = ReplayBuffer(config.replay_capacity, obs_dim, act_dim)
        self.env_steps = 0
        self.updates = 0
        self.episode_reward = 0.0
        self.episode_length = 0
        self.completed_episodes: list[tuple[float, int]] = []
        self.last_update_stats: dict = {}

    def _reset_env(self):
        obs = self.env.reset(self._episode_seed)
        self._episode_seed += 1
        return self.env.normalize_observation(obs)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def current_lr(self) -> float:
        if self.config.lr_schedule == "linear":
            return linear_lr(self.env_steps, self.config.max_steps,
                             self.config.learning_rate)
        return self.config.learning_rate

    def act_deterministic(self, obs_normalized: np.ndarray) -> np.ndarray:
        return np.tanh(self.policy.mean(obs_normalized)[0])

    def _select_action(self, obs: np.ndarray) -> np.ndarray:
        if self.env_steps < self.config.warmup_steps:
            return self.rng.uniform(-1.0, 1.0, self.env.action_dim)
        mean = self.policy.mean(obs)[0]
        std = np.exp(self.policy.log_std())
        u = mean + std * self.rng.standard_normal(mean.shape)
        return np.tanh(u)

    def collect_steps(self, n: int) -> None:
        for _ in range(n):
            action = self._select_action(self._obs)
            result = self.env.step(action)
            next_obs = self.env.normalize_observation(result.observation)
            # truncated episodes bootstrap; only violations are terminal
            self.replay.add(self._obs, action, result.reward, next_obs,
                            result.terminated)
            self.env_steps += 1
            self.episode_reward += result.reward
            self.episode_length += 1
            if result.terminated or result.truncated:
                self.completed_episodes.append(
                    (self.episode_reward, self.episode_length))
                self.episode_reward = 0.0
                self.episode_length = 0
                self._obs = self._reset_env()
            else:
                self._obs = next_obs
            ready = (self.env_steps >= self.config.warmup_steps
                     and self.replay.size >= self.config.batch_size)
            if ready and self.env_steps % self.config.update_interval == 0:
                self.update()

    def update(self) -> dict:
        cfg = self.config
        batch = self.replay.sample(cfg.batch_size, self.rng)
        lr = self.current_lr()
        alpha = self.alpha

        # twin-Q targets from the target networks and a fresh next action
        next_mean = self.policy.mean(batch["next_obs"])
        std = np.exp(self.policy.log_std())
        next_noise = self.rng.standard_normal(next_mean.shape)
        next_u = next_mean + std * next_noise
        next_a = np.tanh(next_u)
        next_logp = squashed_logprob(next_mean, self.policy.log_std(), next_u)
        q1_t = q_forward(self.q1_target, batch["next_obs"], next_a)[:, 0]
        q2_t = q_forward(self.q2_target, batch["next_obs"], next_a)[:, 0]
        not_done = 1.0 - batch["terminated"].astype(np.float64)
        y = batch["rewards"] + cfg.gamma * not_done * (
            np.minimum(q1_t, q2_t) - alpha * next_logp)

        q1_loss, q1_grads = sac_q_loss_and_grads(self.q1, batch["obs"],
                                                 batch["actions"], y)
        q2_loss, q2_grads = sac_q_loss_and_grads(self.q2, batch["obs"],
                                                 batch["actions"], y)
        self.q1_opt.step(q1_grads, lr)
        self.q2_opt.step(q2_grads, lr)

        noise = self.rng.standard_normal((cfg.batch_size, self.env.action_dim))
        pol_loss, pol_grads, mean_logp = sac_policy_loss_and_grads(
            self.policy, self.q1, self.q2, batch["obs"], noise, alpha)
        self.policy_opt.step(pol_grads, lr)

        # d/dlog_alpha of -exp(log_alpha)*(mean log pi + target entropy)
        alpha_grad = np.array([-alpha * (mean_logp + self.target_entropy)])
        self.alpha_opt.step([alpha_grad], lr)

        self._polyak(self.q1_target, self.q1, cfg.tau)
        self._polyak(self.q2_target, self.q2, cfg.tau)

        self.updates += 1
        value_loss = 0.5 * (q1_loss + q2_loss)
        if not np.isfinite(pol_loss) or not np.isfinite(value_loss):
            raise FloatingPointError(
                f"non-finite SAC loss at update {self.updates}: "
                f"policy={pol_loss!r} q={value_loss!r}")
        self.last_update_stats = {
            "policy_loss": pol_loss,
            "value_loss": value_loss,
            "entropy": -mean_logp,
            "learning_rate": lr,
            "alpha": self.alpha,
        }
        return self.last_update_stats

    @staticmethod
    def _polyak(target: Mlp, online: Mlp, tau: float) -> None:
        for t_arr, o_arr in zip(target.params, online.params):
            t_arr *= 1.0 - tau
            t_arr += tau * o_arr

    def drain_episode_stats(self) -> list[tuple[float, int]]:
        out = self.completed_episodes
        self.completed_episodes = []
        return out

    def parameter_arrays(self) -> dict:
        out = {}
        for i, arr in enumerate(self.policy.params):
            out[f"policy/{i}"] = arr
        for i, arr in enumerate(self.q1.params):
            out[f"q1/{i}"] = arr
        for i, arr in enumerate(self.q2.params):
            out[f"q2/{i}"] = arr
        out["log_alpha"] = self.log_alpha
        return out
