"""Point-dipole magnetics between the external magnet and the capsule.

B(r) = (mu0/4pi) * (3(m.r^)r^ - m)/|r|^3. The force on the capsule dipole
is the gradient of m_c . B, available both in closed form and as a central
finite difference; the two agree to better than 1e-8 relative and the
finite-difference route doubles as a built-in cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rigid import RigidState, quat_rotate

MU0 = 4.0e-7 * np.pi
MU0_OVER_4PI = 1.0e-7
MIN_SEPARATION = 1e-6  # meters
FD_STEP = 1e-6         # meters, central-difference step for the force


class MagneticSingularityError(ValueError):
    """Dipole evaluation requested closer than the model is valid."""


@dataclass
class DipoleSpec:
    """Magnetic moment magnitude (A*m^2) and its body-frame axis."""

    moment_magnitude: float
    moment_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        self.moment_axis = np.asarray(self.moment_axis, dtype=np.float64)
        if self.moment_magnitude <= 0:
            raise ValueError("moment_magnitude must be positive")
        norm = np.linalg.norm(self.moment_axis)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("moment_axis must be unit length")

    def world_moment(self, state: RigidState) -> np.ndarray:
        return self.moment_magnitude * quat_rotate(state.orientation,
                                                   self.moment_axis)


@dataclass
class Wrench:
    force: np.ndarray
    torque: np.ndarray

    def __post_init__(self):
        self.force = np.asarray(self.force, dtype=np.float64)
        self.torque = np.asarray(self.torque, dtype=np.float64)

    @classmethod
    def zero(cls) -> "Wrench":
        return cls(np.zeros(3), np.zeros(3))


def dipole_field(moment: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """Field (tesla) of a point dipole `moment` at displacement `offset` from it."""
    moment = np.asarray(moment, dtype=np.float64)
    offset = np.asarray(offset, dtype=np.float64)
    r = np.linalg.norm(offset)
    if r <= MIN_SEPARATION:
        raise MagneticSingularityError(
            f"dipole field evaluated at |offset|={r:.3e} m (< {MIN_SEPARATION} m)")
    rhat = offset / r
    return MU0_OVER_4PI * (3.0 * np.dot(moment, rhat) * rhat - moment) / r**3


def dipole_force_closed(m1: np.ndarray, m2: np.ndarray,
                        offset: np.ndarray) -> np.ndarray:
    """Closed-form force on dipole m2 displaced by `offset` from dipole m1."""
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = np.asarray(m2, dtype=np.float64)
    offset = np.asarray(offset, dtype=np.float64)
    r = np.linalg.norm(offset)
    if r <= MIN_SEPARATION:
        raise MagneticSingularityError(
            f"dipole force evaluated at |offset|={r:.3e} m (< {MIN_SEPARATION} m)")
    rhat = offset / r
    m1r = np.dot(m1, rhat)
    m2r = np.dot(m2, rhat)
    return (3.0 * MU0_OVER_4PI / r**4) * (
        m1r * m2 + m2r * m1 + np.dot(m1, m2) * rhat - 5.0 * m1r * m2r * rhat)


def dipole_force_fd(m1: np.ndarray, m2: np.ndarray, offset: np.ndarray,
                    h: float = FD_STEP) -> np.ndarray:
    """Force as the central-difference gradient of m2 . B1 over the offset."""
    m2 = np.asarray(m2, dtype=np.float64)
    offset = np.asarray(offset, dtype=np.float64)
    force = np.zeros(3)
    for k in range(3):
        dp = np.zeros(3)
        dp[k] = h
        u_plus = np.dot(m2, dipole_field(m1, offset + dp))
        u_minus = np.dot(m2, dipole_field(m1, offset - dp))
        force[k] = (u_plus - u_minus) / (2.0 * h)
    return force


def dipole_wrench(magnet: RigidState, magnet_spec: DipoleSpec,
                  capsule: RigidState, capsule_spec: DipoleSpec,
                  method: str = "closed") -> Wrench:
    """Magnetic force and torque exerted on the capsule by the magnet."""
    m1 = magnet_spec.world_moment(magnet)
    m2 = capsule_spec.world_moment(capsule)
    offset = capsule.position - magnet.position
    if method == "closed":
        force = dipole_force_closed(m1, m2, offset)
    elif method == "fd":
        force = dipole_force_fd(m1, m2, offset)
    else:
        raise ValueError(f"unknown force method {method!r}")
    torque = np.cross(m2, dipole_field(m1, offset))
    return Wrench(force, torque)
