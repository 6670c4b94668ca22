"""Top-level training loop: rollouts, summaries, and checkpoints.

Emits one TrainStats row per summary window (every summary_freq env
steps) into a fixed-header CSV, and writes periodic plus final versioned
checkpoints. Fully seeded: the same seed and config reproduce the stats
stream byte for byte in this single-instance mode.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .ppo import PpoConfig, PpoTrainer
from .sac import SacConfig, SacTrainer

STATS_HEADER = ["step", "mean_cumulative_reward", "mean_episode_length",
                "policy_loss", "value_loss", "entropy", "learning_rate"]


@dataclass
class TrainStats:
    step: int
    mean_cumulative_reward: float
    mean_episode_length: float
    policy_loss: float
    value_loss: float
    entropy: float
    learning_rate: float

    def row(self) -> list[str]:
        return [repr(v) if isinstance(v, float) else str(v)
                for v in (self.step, self.mean_cumulative_reward,
                          self.mean_episode_length, self.policy_loss,
                          self.value_loss, self.entropy, self.learning_rate)]


def make_trainer(env, algorithm: str, config):
    if algorithm == "ppo":
        return PpoTrainer(env, config)
    if algorithm == "sac":
        return SacTrainer(env, config)
    raise ValueError(f"unknown algorithm {algorithm!r} (want ppo or sac)")


def default_config(algorithm: str):
    return PpoConfig() if algorithm == "ppo" else SacConfig()


def train(env, algorithm: str, config, out_dir, *, max_steps: int | None = None,
          stop_fn=None, log=None, extra_meta: dict | None = None):
    """Run the rollout/update loop to max_steps; returns the trainer.

    stop_fn(trainer) is polled at every summary boundary; returning True
    ends training early (used for target-reached cutoffs). `log` is an
    optional callable fed one formatted line per summary. extra_meta is
    merged into every checkpoint header (the CLI stores the env config
    there so checkpoints are self-describing).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trainer = make_trainer(env, algorithm, config)
    total = config.max_steps if max_steps is None else max_steps
    freq = config.summary_freq
    ckpt_every = config.checkpoint_interval
    base_meta = dict(extra_meta or {})

    def ckpt_meta(steps: int) -> dict:
        meta = dict(base_meta)
        meta["env_steps"] = steps
        meta["config"] = config.to_dict()
        return meta

    stats_path = out_dir / "stats.csv"
    stats_rows: list[TrainStats] = []
    with open(stats_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATS_HEADER)
        save_checkpoint(out_dir / "ckpt_initial.bin", algorithm,
                        trainer.parameter_arrays(), meta=ckpt_meta(0))
        next_ckpt = ckpt_every
        while trainer.env_steps < total:
            chunk = min(freq, total - trainer.env_steps)
            trainer.collect_steps(chunk)
            episodes = trainer.drain_episode_stats()
            if episodes:
                mean_rew = float(np.mean([e[0] for e in episodes]))
                mean_len = float(np.mean([e[1] for e in episodes]))
            else:
                mean_rew = float("nan")
                mean_len = float("nan")
            upd = trainer.last_update_stats
            stats = TrainStats(
                step=trainer.env_steps,
                mean_cumulative_reward=mean_rew,
                mean_episode_length=mean_len,
                policy_loss=float(upd.get("policy_loss", float("nan"))),
                value_loss=float(upd.get("value_loss", float("nan"))),
                entropy=float(upd.get("entropy", float("nan"))),
                learning_rate=float(upd.get("learning_rate",
                                            trainer.current_lr())),
            )
            stats_rows.append(stats)
            writer.writerow(stats.row())
            fh.flush()
            if log is not None:
                log(f"step {stats.step}: reward {stats.mean_cumulative_reward:.3f} "
                    f"len {stats.mean_episode_length:.1f} "
                    f"policy_loss {stats.policy_loss:.4f} "
                    f"value_loss {stats.value_loss:.4f}")
            if trainer.env_steps >= next_ckpt and trainer.env_steps < total:
                save_checkpoint(out_dir / f"ckpt_{trainer.env_steps:09d}.bin",
                                algorithm, trainer.parameter_arrays(),
                                meta=ckpt_meta(trainer.env_steps))
                next_ckpt += ckpt_every
            if stop_fn is not None and stop_fn(trainer):
                break
    if trainer.env_steps > 0:  # zero-step runs keep just the initial checkpoint
        save_checkpoint(out_dir / "ckpt_final.bin", algorithm,
                        trainer.parameter_arrays(),
                        meta=ckpt_meta(trainer.env_steps))
    trainer.stats_rows = stats_rows
    return trainer
