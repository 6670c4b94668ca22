"""Episode records: JSONL serialization, summaries, and replay verification.

A record is one header line naming the format and embedding the full
resolved environment config, followed by one line per step. Replay
rebuilds the environment from the header, re-runs the recorded actions,
and demands bit-equal rewards and coverage at every step.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_NAME = "capscan-episode"
FORMAT_VERSION = 1


def config_hash(config_dict: dict) -> str:
    """Stable content hash of a config snapshot."""
    blob = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class StepRow:
    step: int
    sim_time: float
    action: list
    reward: float
    coverage: float
    violation: str | None

    def to_dict(self) -> dict:
        return {"step": self.step, "sim_time": self.sim_time, "action": self.action,
                "reward": self.reward, "coverage": self.coverage,
                "violation": self.violation}

    @classmethod
    def from_dict(cls, d: dict) -> "StepRow":
        return cls(d["step"], d["sim_time"], d["action"], d["reward"],
                   d["coverage"], d["violation"])


@dataclass
class EpisodeRecord:
    seed: int
    env_config: dict
    steps: list = field(default_factory=list)
    termination: str = "truncated"
    final_coverage: float = 0.0
    coverage_at: dict = field(default_factory=dict)
    sim_time: float = 0.0
    wall_time: float = 0.0

    def summary(self) -> dict:
        return {
            "format": f"{FORMAT_NAME}-summary",
            "version": FORMAT_VERSION,
            "seed": self.seed,
            "config_hash": config_hash(self.env_config),
            "steps": len(self.steps),
            "sim_time": self.sim_time,
            "final_coverage": self.final_coverage,
            "coverage_at": self.coverage_at,
            "termination": self.termination,
        }

    def cumulative_reward(self) -> float:
        return float(sum(row.reward for row in self.steps))


def write_record(record: EpisodeRecord, path, summary_path=None) -> None:
    path = Path(path)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "seed": record.seed,
        "env_config": record.env_config,
        "termination": record.termination,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for row in record.steps:
            fh.write(json.dumps(row.to_dict(), sort_keys=True) + "\n")
    if summary_path is not None:
        with open(summary_path, "w", encoding="utf-8") as fh:
            json.dump(record.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_record(path) -> EpisodeRecord:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty record")
    header = json.loads(lines[0])
    if header.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: not a {FORMAT_NAME} file")
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported record version {header.get('version')}")
    steps = [StepRow.from_dict(json.loads(line)) for line in lines[1:]]
    record = EpisodeRecord(
        seed=header["seed"],
        env_config=header["env_config"],
        steps=steps,
        termination=header.get("termination", "truncated"),
    )
    if steps:
        record.sim_time = steps[-1].sim_time
        record.final_coverage = steps[-1].coverage
    return record


@dataclass
class ReplayResult:
    diverged: bool
    first_divergent_step: int | None = None
    message: str = ""


def replay_record(record: EpisodeRecord, env=None, on_step=None) -> ReplayResult:
    """Re-simulate the recorded actions and compare rewards/coverage exactly.

    on_step(env, row) is invoked after each verified step (snapshot hook).
    """
    from .env import CoverageEnv, EnvConfig

    if env is None:
        env = CoverageEnv(EnvConfig.from_dict(record.env_config))
    env.reset(record.seed)
    for row in record.steps:
        result = env.step(np.asarray(row.action))
        if on_step is not None:
            on_step(env, row)
        if result.reward != row.reward:
            return ReplayResult(True, row.step,
                                f"reward mismatch at step {row.step}: "
                                f"recorded {row.reward!r}, replayed {result.reward!r}")
        coverage = result.info["current_coverage"]
        if coverage != row.coverage:
            return ReplayResult(True, row.step,
                                f"coverage mismatch at step {row.step}: "
                                f"recorded {row.coverage!r}, replayed {coverage!r}")
        ended = result.terminated or result.truncated
        if ended and row.step != record.steps[-1].step:
            return ReplayResult(True, row.step,
                                f"episode ended early at step {row.step}")
    return ReplayResult(False)
