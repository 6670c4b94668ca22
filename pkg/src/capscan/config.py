"""Plain-text (TOML) configuration for environments and trainers.

Every section is optional; unset keys keep their dataclass defaults. The
same file can carry [phantom]/[world]/... sections for the simulator and
[ppo]/[sac] sections for the trainers. Two ready-made files ship in
capscan/assets: default_stomach.toml (full-length scan episodes on the
stomach phantom) and accept_sphere.toml (the short sphere task used by
the learning checks).
"""

from __future__ import annotations

from pathlib import Path

import tomli

from .env import (
    ActionSpec,
    EnvConfig,
    EpisodeConfig,
    MagneticsSpec,
    PhantomSpec,
    RewardSpec,
)
from .geometry import CameraModel
from .learn import PpoConfig, SacConfig
from .physics import Bounds, WorldParams
from .physics.world import Box

ASSETS_DIR = Path(__file__).resolve().parent / "assets"


def read_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomli.load(fh)


def _take(data: dict, section: str, cls, **renames):
    if section not in data:
        return cls()
    kw = dict(data[section])
    for old, new in renames.items():
        if old in kw:
            kw[new] = kw.pop(old)
    return cls(**kw)


def _bounds_from(data: dict) -> Bounds | None:
    if "bounds" not in data:
        return None
    b = data["bounds"]
    return Bounds(
        capsule_box=Box(b["capsule_box_lo"], b["capsule_box_hi"]),
        magnet_box=Box(b["magnet_box_lo"], b["magnet_box_hi"]),
        capsule_speed_max=b.get("capsule_speed_max", 0.05),
    )


def env_config_from_dict(data: dict) -> EnvConfig:
    env_extra = data.get("env", {})
    return EnvConfig(
        phantom=_take(data, "phantom", PhantomSpec),
        world=_take(data, "world", WorldParams),
        bounds=_bounds_from(data),
        camera=_take(data, "camera", CameraModel),
        reward=_take(data, "reward", RewardSpec),
        episode=_take(data, "episode", EpisodeConfig),
        magnetics=_take(data, "magnetics", MagneticsSpec),
        action=_take(data, "action", ActionSpec),
        wall_clearance=env_extra.get("wall_clearance", 0.0055),
    )


def load_env_config(path=None) -> EnvConfig:
    if path is None:
        return EnvConfig()
    return env_config_from_dict(read_toml(path))


def load_trainer_config(algorithm: str, path=None, **overrides):
    """Trainer config from the [ppo]/[sac] section plus keyword overrides."""
    data = {}
    if path is not None:
        data = read_toml(path).get(algorithm, {})
    data.update({k: v for k, v in overrides.items() if v is not None})
    if algorithm == "ppo":
        return PpoConfig(**data)
    if algorithm == "sac":
        return SacConfig(**data)
    raise ValueError(f"unknown algorithm {algorithm!r} (want ppo or sac)")


def bundled_config(name: str) -> Path:
    path = ASSETS_DIR / f"{name}.toml"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled config named {name!r}")
    return path
