"""World constants, workspace bounds, and the episode-ending boundary check."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# capsule default: 26 mm x 11 mm cylinder, 5 g; z is the long axis
_CAPSULE_MASS = 0.005
_CAPSULE_RADIUS = 0.0055
_CAPSULE_LENGTH = 0.026
_I_AXIAL = 0.5 * _CAPSULE_MASS * _CAPSULE_RADIUS**2
_I_PERP = _CAPSULE_MASS * (3 * _CAPSULE_RADIUS**2 + _CAPSULE_LENGTH**2) / 12.0

VIOLATION_CAPSULE_VELOCITY = "capsule_velocity"
VIOLATION_CAPSULE_POSITION = "capsule_position"
VIOLATION_MAGNET_POSITION = "magnet_position"


@dataclass
class WorldParams:
    """Fixed-step integration constants for the fluid-filled phantom."""

    dt: float = 0.1
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, -9.81, 0.0]))
    capsule_mass: float = _CAPSULE_MASS
    capsule_inertia: np.ndarray = field(
        default_factory=lambda: np.array([_I_PERP, _I_PERP, _I_AXIAL]))
    linear_drag: float = 0.05       # N*s/m
    angular_drag: float = 1.0e-6    # N*m*s/rad
    # near-neutral buoyancy: terminal sink speed m*g*(1-b)/c stays under
    # the default speed bound (0.5 would sink at ~0.5 m/s and end episodes
    # on the spot)
    buoyancy_fraction: float = 0.98

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=np.float64)
        self.capsule_inertia = np.asarray(self.capsule_inertia, dtype=np.float64)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.capsule_mass <= 0:
            raise ValueError("capsule_mass must be positive")
        if np.any(self.capsule_inertia <= 0):
            raise ValueError("inertia components must be positive")
        if self.linear_drag < 0 or self.angular_drag < 0:
            raise ValueError("drag coefficients must be non-negative")
        if not 0.0 <= self.buoyancy_fraction <= 1.0:
            raise ValueError("buoyancy_fraction must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "gravity": self.gravity.tolist(),
            "capsule_mass": self.capsule_mass,
            "capsule_inertia": self.capsule_inertia.tolist(),
            "linear_drag": self.linear_drag,
            "angular_drag": self.angular_drag,
            "buoyancy_fraction": self.buoyancy_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldParams":
        return cls(**d)


@dataclass
class Box:
    """Axis-aligned box, inclusive bounds."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)
        if np.any(self.hi <= self.lo):
            raise ValueError("box must be non-degenerate (hi > lo on every axis)")

    def contains(self, point) -> bool:
        p = np.asarray(point)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def half_extent(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Box":
        return cls(d["lo"], d["hi"])


@dataclass
class Bounds:
    """Episode-ending workspace limits for capsule and magnet."""

    capsule_box: Box
    magnet_box: Box
    capsule_speed_max: float = 0.05

    def __post_init__(self):
        if self.capsule_speed_max <= 0:
            raise ValueError("capsule_speed_max must be positive")

    @classmethod
    def for_phantom(cls, bbox_lo, bbox_hi, capsule_speed_max: float = 0.05,
                    magnet_cube: float = 0.3, magnet_gap: float = 0.02) -> "Bounds":
        """Capsule box = phantom bbox inflated 10%; magnet cube floats above."""
        bbox_lo = np.asarray(bbox_lo, dtype=np.float64)
        bbox_hi = np.asarray(bbox_hi, dtype=np.float64)
        center = 0.5 * (bbox_lo + bbox_hi)
        half = 0.5 * (bbox_hi - bbox_lo) * 1.1
        capsule_box = Box(center - half, center + half)
        mlo = np.array([center[0] - magnet_cube / 2.0,
                        bbox_hi[1] + magnet_gap,
                        center[2] - magnet_cube / 2.0])
        mhi = mlo + magnet_cube
        return cls(capsule_box, Box(mlo, mhi), capsule_speed_max)

    def to_dict(self) -> dict:
        return {
            "capsule_box": self.capsule_box.to_dict(),
            "magnet_box": self.magnet_box.to_dict(),
            "capsule_speed_max": self.capsule_speed_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Bounds":
        return cls(Box.from_dict(d["capsule_box"]), Box.from_dict(d["magnet_box"]),
                   d["capsule_speed_max"])


def check_bounds(capsule, magnet, bounds: Bounds) -> str | None:
    """First violated limit in order: capsule speed, capsule box, magnet box."""
    if np.linalg.norm(capsule.linear_velocity) > bounds.capsule_speed_max:
        return VIOLATION_CAPSULE_VELOCITY
    if not bounds.capsule_box.contains(capsule.position):
        return VIOLATION_CAPSULE_POSITION
    if not bounds.magnet_box.contains(magnet.position):
        return VIOLATION_MAGNET_POSITION
    return None
