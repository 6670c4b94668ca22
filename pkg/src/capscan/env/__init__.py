from .env import (
    ActionSpec,
    CoverageEnv,
    EnvConfig,
    EpisodeConfig,
    MagneticsSpec,
    PhantomSpec,
    RewardSpec,
    SharedGeometry,
    StepResult,
)
from .records import EpisodeRecord, read_record, replay_record, write_record

__all__ = [
    "ActionSpec",
    "CoverageEnv",
    "EnvConfig",
    "EpisodeConfig",
    "MagneticsSpec",
    "PhantomSpec",
    "RewardSpec",
    "SharedGeometry",
    "StepResult",
    "EpisodeRecord",
    "read_record",
    "replay_record",
    "write_record",
]
