"""Rigid poses, quaternion helpers, and the fixed-step integrators.

World frame is y-up: gravity acts along -y and the magnet's commanded
translations live in the horizontal x-z plane. Quaternions are w-first.
The capsule uses semi-implicit Euler with explicit viscous drag; the
magnet is robot-held and purely kinematic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q)


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by unit quaternion q."""
    w = q[0]
    u = q[1:]
    return (2.0 * np.dot(u, v) * u
            + (w * w - np.dot(u, u)) * np.asarray(v, dtype=np.float64)
            + 2.0 * w * np.cross(u, v))


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if norm < 1e-30:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / norm])


def quat_integrate(q: np.ndarray, omega_world: np.ndarray, dt: float) -> np.ndarray:
    """Advance orientation by world-frame angular velocity (exact exponential)."""
    theta = np.linalg.norm(omega_world) * dt
    if theta < 1e-30:
        return quat_normalize(q)
    dq = quat_from_axis_angle(omega_world, theta)
    return quat_normalize(quat_mul(dq, q))


def ypr_to_quat(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Intrinsic yaw (about +y), pitch (about +x), roll (about +z)."""
    qy = quat_from_axis_angle([0.0, 1.0, 0.0], yaw)
    qx = quat_from_axis_angle([1.0, 0.0, 0.0], pitch)
    qz = quat_from_axis_angle([0.0, 0.0, 1.0], roll)
    return quat_mul(quat_mul(qy, qx), qz)


def quat_to_ypr(q: np.ndarray) -> np.ndarray:
    """Inverse of ypr_to_quat; returns (yaw, pitch, roll) in radians."""
    w, x, y, z = quat_normalize(q)
    # R = Ry(yaw) Rx(pitch) Rz(roll):
    #   R12 = -sin(pitch); R02/R22 -> yaw; R10/R11 -> roll
    r12 = 2.0 * (y * z - w * x)
    pitch = np.arcsin(np.clip(-r12, -1.0, 1.0))
    if abs(r12) < 1.0 - 1e-12:
        yaw = np.arctan2(2.0 * (x * z + w * y), 1.0 - 2.0 * (x * x + y * y))
        roll = np.arctan2(2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z))
    else:  # gimbal lock: fold everything into yaw
        yaw = np.arctan2(-2.0 * (x * z - w * y), 1.0 - 2.0 * (y * y + z * z))
        roll = 0.0
    return np.array([yaw, pitch, roll])


@dataclass
class RigidState:
    """Pose and twist of one rigid body."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64).copy()
        self.orientation = np.asarray(self.orientation, dtype=np.float64).copy()
        self.linear_velocity = np.asarray(self.linear_velocity, dtype=np.float64).copy()
        self.angular_velocity = np.asarray(self.angular_velocity,
                                           dtype=np.float64).copy()

    def validate(self) -> None:
        for arr in (self.position, self.linear_velocity, self.angular_velocity):
            if not np.all(np.isfinite(arr)):
                raise ValueError("rigid state has non-finite components")
        if abs(np.linalg.norm(self.orientation) - 1.0) > 1e-9:
            raise ValueError("orientation quaternion must be unit length")

    def copy(self) -> "RigidState":
        return RigidState(self.position, self.orientation,
                          self.linear_velocity, self.angular_velocity)


def step_capsule(capsule: RigidState, wrench, params) -> RigidState:
    """One semi-implicit Euler step of the capsule in viscous fluid.

    v' = v + dt*(F_ext + m*g*(1-buoyancy) - c_lin*v)/m, then x' = x + dt*v'.
    The angular update mirrors it with the principal inertia applied in the
    body frame; the gyroscopic term is dropped (overdamped, capsule-scale).
    """
    dt = params.dt
    m = params.capsule_mass
    g_eff = params.gravity * (1.0 - params.buoyancy_fraction)

    force = wrench.force + m * g_eff - params.linear_drag * capsule.linear_velocity
    v_new = capsule.linear_velocity + dt * force / m
    x_new = capsule.position + dt * v_new

    q = capsule.orientation
    omega_body = quat_rotate(quat_conj(q), capsule.angular_velocity)
    torque_body = quat_rotate(quat_conj(q), wrench.torque)
    inertia = params.capsule_inertia
    omega_body = omega_body + dt * (torque_body
                                    - params.angular_drag * omega_body) / inertia
    w_new = quat_rotate(q, omega_body)
    q_new = quat_integrate(q, w_new, dt)

    return RigidState(x_new, q_new, v_new, w_new)


def apply_magnet_command(magnet: RigidState, velocity_cmd, angular_cmd,
                         params) -> RigidState:
    """Kinematic magnet update: the robot arm enforces the command exactly."""
    velocity_cmd = np.asarray(velocity_cmd, dtype=np.float64)
    angular_cmd = np.asarray(angular_cmd, dtype=np.float64)
    position = magnet.position + velocity_cmd * params.dt
    orientation = quat_integrate(magnet.orientation, angular_cmd, params.dt)
    return RigidState(position, orientation, velocity_cmd, angular_cmd)
