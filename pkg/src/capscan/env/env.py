"""Episodic coverage-scanning environment.

One step: apply the magnet command, integrate the capsule under the
dipole wrench, detect newly visible wall vertices, convert the coverage
gain into the reward (gain scaled by k above the threshold, a stall
penalty otherwise, a violation penalty on boundary exit), then check the
episode-ending bounds. Observations are the 17-scalar state vector:
capsule position, orientation quaternion, linear velocity, magnet
position, magnet yaw-pitch-roll, and episode progress.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from ..geometry import (
    BvhIndex,
    CameraModel,
    CameraPose,
    CoverageTracker,
    TriangleMesh,
    generate_sphere_phantom,
    generate_stomach_phantom,
    load_mesh,
    visible_vertices,
)
from ..physics import (
    Bounds,
    DipoleSpec,
    RigidState,
    WorldParams,
    apply_magnet_command,
    check_bounds,
    dipole_field,
    dipole_wrench,
    quat_from_axis_angle,
    quat_mul,
    quat_to_ypr,
    step_capsule,
)

OBSERVATION_DIM = 17

# magnet rest orientation: body moment axis (+z) pointing straight down
MAGNET_DOWN = quat_from_axis_angle([1.0, 0.0, 0.0], np.pi / 2.0)


@dataclass
class PhantomSpec:
    kind: str = "stomach"        # stomach | sphere | file
    n_vertices: int = 2000       # sphere only
    radius: float = 0.05         # sphere only
    path: str | None = None      # file only

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "sphere":
            d["n_vertices"] = self.n_vertices
            d["radius"] = self.radius
        elif self.kind == "file":
            d["path"] = self.path
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PhantomSpec":
        return cls(**d)

    def build(self) -> TriangleMesh:
        if self.kind == "stomach":
            return generate_stomach_phantom()
        if self.kind == "sphere":
            return generate_sphere_phantom(self.n_vertices, self.radius)
        if self.kind == "file":
            if not self.path:
                raise ValueError("phantom kind 'file' needs a path")
            return load_mesh(self.path)
        raise ValueError(f"unknown phantom kind {self.kind!r}")


@dataclass
class RewardSpec:
    """Coverage-gain shaping: r > threshold pays k*r, else the stall penalty."""

    k: float = 0.1
    diff_threshold: float = 0.02   # percent points of coverage
    stall_penalty: float = -0.01
    violation_penalty: float = -0.1

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.diff_threshold < 0:
            raise ValueError("diff_threshold must be non-negative")

    def to_dict(self) -> dict:
        return {"k": self.k, "diff_threshold": self.diff_threshold,
                "stall_penalty": self.stall_penalty,
                "violation_penalty": self.violation_penalty}

    @classmethod
    def from_dict(cls, d: dict) -> "RewardSpec":
        return cls(**d)


@dataclass
class EpisodeConfig:
    max_steps: int = 1500
    seed: int = 0
    mode: str = "occlusion"      # visibility mode: occlusion | frustum
    spawn_fraction: float = 0.4  # interior sub-box as a fraction of the bbox
    # sub-box center offset in fractions of the bbox half-extent (e.g. a
    # positive y starts the capsule high in the cavity)
    spawn_offset: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0.0 < self.spawn_fraction <= 1.0:
            raise ValueError("spawn_fraction must be in (0, 1]")
        self.spawn_offset = tuple(float(v) for v in self.spawn_offset)

    def to_dict(self) -> dict:
        return {"max_steps": self.max_steps, "seed": self.seed, "mode": self.mode,
                "spawn_fraction": self.spawn_fraction,
                "spawn_offset": list(self.spawn_offset)}

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeConfig":
        return cls(**d)


@dataclass
class MagneticsSpec:
    capsule_moment: float = 0.02   # A*m^2
    magnet_moment: float = 50.0    # A*m^2

    def to_dict(self) -> dict:
        return {"capsule_moment": self.capsule_moment,
                "magnet_moment": self.magnet_moment}

    @classmethod
    def from_dict(cls, d: dict) -> "MagneticsSpec":
        return cls(**d)


@dataclass
class ActionSpec:
    """Action-to-command mapping. planar2: horizontal x/z magnet velocity.

    extended5 adds vertical velocity plus yaw/pitch rates (opt-in).
    """

    mode: str = "planar2"            # planar2 | extended5
    magnet_speed_max: float = 0.05   # m/s
    magnet_turn_rate_max: float = np.pi / 4.0  # rad/s, extended mode only

    @property
    def dim(self) -> int:
        return 2 if self.mode == "planar2" else 5

    def to_dict(self) -> dict:
        return {"mode": self.mode, "magnet_speed_max": self.magnet_speed_max,
                "magnet_turn_rate_max": self.magnet_turn_rate_max}

    @classmethod
    def from_dict(cls, d: dict) -> "ActionSpec":
        return cls(**d)


@dataclass
class EnvConfig:
    phantom: PhantomSpec = field(default_factory=PhantomSpec)
    world: WorldParams = field(default_factory=WorldParams)
    bounds: Bounds | None = None     # None: derived from the phantom bbox
    camera: CameraModel = field(default_factory=CameraModel)
    reward: RewardSpec = field(default_factory=RewardSpec)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    magnetics: MagneticsSpec = field(default_factory=MagneticsSpec)
    action: ActionSpec = field(default_factory=ActionSpec)
    wall_clearance: float = 0.0055   # capsule radius: stand-off from the wall

    def to_dict(self) -> dict:
        return {
            "phantom": self.phantom.to_dict(),
            "world": self.world.to_dict(),
            "bounds": None if self.bounds is None else self.bounds.to_dict(),
            "camera": {"fov_deg": self.camera.fov_deg, "near": self.camera.near,
                       "far": self.camera.far},
            "reward": self.reward.to_dict(),
            "episode": self.episode.to_dict(),
            "magnetics": self.magnetics.to_dict(),
            "action": self.action.to_dict(),
            "wall_clearance": self.wall_clearance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        return cls(
            phantom=PhantomSpec.from_dict(d["phantom"]),
            world=WorldParams.from_dict(d["world"]),
            bounds=None if d.get("bounds") is None else Bounds.from_dict(d["bounds"]),
            camera=CameraModel(**d["camera"]),
            reward=RewardSpec.from_dict(d["reward"]),
            episode=EpisodeConfig.from_dict(d["episode"]),
            magnetics=MagneticsSpec.from_dict(d["magnetics"]),
            action=ActionSpec.from_dict(d["action"]),
            wall_clearance=d["wall_clearance"],
        )


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    info: dict


class SharedGeometry:
    """Mesh + accelerators, immutable, shared by all env instances."""

    def __init__(self, mesh: TriangleMesh):
        mesh.validate()
        self.mesh = mesh
        self.bvh = BvhIndex(mesh)
        self.kdtree = cKDTree(mesh.vertices)
        self.bbox = mesh.bounding_box()

    @classmethod
    def build(cls, phantom: PhantomSpec) -> "SharedGeometry":
        return cls(phantom.build())


class CoverageEnv:
    """One sequential episode at a time; share only SharedGeometry across envs."""

    def __init__(self, config: EnvConfig, geometry: SharedGeometry | None = None):
        self.geometry = geometry or SharedGeometry.build(config.phantom)
        bounds = config.bounds
        if bounds is None:
            bounds = Bounds.for_phantom(*self.geometry.bbox)
        self.config = replace(config, bounds=bounds)
        self.mesh = self.geometry.mesh
        self.bvh = self.geometry.bvh
        self.tracker = CoverageTracker(self.mesh.vertex_count)
        self.capsule_spec = DipoleSpec(config.magnetics.capsule_moment)
        self.magnet_spec = DipoleSpec(config.magnetics.magnet_moment)
        self.capsule = RigidState()
        self.magnet = RigidState()
        self.step_count = 0
        self._finished = True  # must reset before stepping

    # -- lifecycle ---------------------------------------------------------

    @property
    def action_dim(self) -> int:
        return self.config.action.dim

    @property
    def dt(self) -> float:
        return self.config.world.dt

    @property
    def sim_time(self) -> float:
        return self.step_count * self.dt

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is None:
            seed = self.config.episode.seed
        rng = np.random.default_rng(seed)
        self.tracker.reset()
        self.magnet = RigidState(position=self.config.bounds.magnet_box.center,
                                 orientation=MAGNET_DOWN.copy())
        position = self._spawn_position(rng)
        yaw = rng.uniform(0.0, 2.0 * np.pi)
        self.capsule = RigidState(
            position=position,
            orientation=self._spawn_orientation(position, yaw),
        )
        self.step_count = 0
        self._finished = False
        # the spawn exposure is not counted before the first step
        return self.observe()

    def _spawn_orientation(self, position, yaw: float) -> np.ndarray:
        """Long axis settled along the local field, random spin about it.

        A free capsule in fluid starts magnetically aligned; spawning it
        that way avoids a violent (and coverage-inflating) realignment
        transient on the first steps.
        """
        spin = quat_from_axis_angle([0.0, 0.0, 1.0], yaw)
        B = dipole_field(self.magnet_spec.world_moment(self.magnet),
                         position - self.magnet.position)
        norm = np.linalg.norm(B)
        if norm < 1e-18:
            return spin
        d = B / norm
        z = np.array([0.0, 0.0, 1.0])
        axis = np.cross(z, d)
        axis_norm = np.linalg.norm(axis)
        if axis_norm < 1e-12:
            align = (np.array([1.0, 0.0, 0.0, 0.0]) if d[2] > 0
                     else quat_from_axis_angle([1.0, 0.0, 0.0], np.pi))
        else:
            align = quat_from_axis_angle(axis, np.arccos(np.clip(d @ z, -1.0, 1.0)))
        return quat_mul(align, spin)

    def _spawn_position(self, rng) -> np.ndarray:
        lo, hi = self.geometry.bbox
        bbox_half = 0.5 * (hi - lo)
        center = 0.5 * (lo + hi) + bbox_half * np.asarray(self.config.episode.spawn_offset)
        half = bbox_half * self.config.episode.spawn_fraction
        clearance = self.config.wall_clearance
        for _ in range(100):
            pos = rng.uniform(center - half, center + half)
            if not self.bvh.contains(pos):
                continue
            dist, _ = self.geometry.kdtree.query(pos)
            if dist > clearance:
                return pos
        raise RuntimeError("could not spawn the capsule inside the phantom "
                           "after 100 draws; shrink spawn_fraction")

    # -- stepping ----------------------------------------------------------

    def _magnet_command(self, action: np.ndarray):
        spec = self.config.action
        a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        if spec.mode == "planar2":
            if a.shape != (2,):
                raise ValueError(f"planar2 action must have shape (2,), got {a.shape}")
            velocity = np.array([a[0], 0.0, a[1]]) * spec.magnet_speed_max
            angular = np.zeros(3)
        elif spec.mode == "extended5":
            if a.shape != (5,):
                raise ValueError(f"extended5 action must have shape (5,), got {a.shape}")
            velocity = a[:3] * spec.magnet_speed_max
            angular = np.array([0.0, a[3], 0.0]) * spec.magnet_turn_rate_max \
                + np.array([a[4], 0.0, 0.0]) * spec.magnet_turn_rate_max
        else:
            raise ValueError(f"unknown action mode {spec.mode!r}")
        return velocity, angular

    def _clamp_to_wall(self, state: RigidState) -> RigidState:
        """Push the capsule back inside along the local inward normal."""
        dist, idx = self.geometry.kdtree.query(state.position)
        normal = self.mesh.normals[idx]  # inward for cavity phantoms
        gap = (state.position - self.mesh.vertices[idx]) @ normal
        clearance = self.config.wall_clearance
        if gap >= clearance:
            return state
        position = state.position + (clearance - gap) * normal
        velocity = state.linear_velocity.copy()
        outward = velocity @ normal
        if outward < 0.0:
            velocity = velocity - outward * normal
        return RigidState(position, state.orientation, velocity,
                          state.angular_velocity)

    def step(self, action) -> StepResult:
        if self._finished:
            raise RuntimeError("episode is finished; call reset() first")
        cfg = self.config
        self.step_count += 1

        velocity_cmd, angular_cmd = self._magnet_command(action)
        self.magnet = apply_magnet_command(self.magnet, velocity_cmd, angular_cmd,
                                           cfg.world)

        wrench = dipole_wrench(self.magnet, self.magnet_spec,
                               self.capsule, self.capsule_spec)
        self.capsule = self._clamp_to_wall(
            step_capsule(self.capsule, wrench, cfg.world))

        pose = CameraPose(self.capsule.position, self.capsule.orientation)
        seen = visible_vertices(cfg.camera, pose, self.mesh, self.bvh,
                                mode=cfg.episode.mode)
        new_vertices = self.tracker.fresh_indices(seen)
        diff = self.tracker.mark_and_diff(seen)

        if diff > cfg.reward.diff_threshold:
            reward = cfg.reward.k * diff
        else:
            reward = cfg.reward.stall_penalty

        violation = check_bounds(self.capsule, self.magnet, cfg.bounds)
        terminated = violation is not None
        if terminated:
            reward = cfg.reward.violation_penalty
        truncated = self.step_count >= cfg.episode.max_steps
        self._finished = terminated or truncated

        info = {
            "current_coverage": self.tracker.current_coverage,
            "diff_coverage": diff,
            "new_vertices": new_vertices,
            "violation": violation,
        }
        return StepResult(self.observe(), float(reward), terminated, truncated, info)

    def observe(self) -> np.ndarray:
        progress = self.step_count / self.config.episode.max_steps
        return np.concatenate([
            self.capsule.position,
            self.capsule.orientation,
            self.capsule.linear_velocity,
            self.magnet.position,
            quat_to_ypr(self.magnet.orientation),
            [progress],
        ])

    def normalize_observation(self, obs: np.ndarray) -> np.ndarray:
        """Affine map to roughly unit scale for the policy boundary.

        Positions are centered on and divided by their workspace boxes,
        velocity by the speed cap, angles by pi; quaternion and progress
        pass through.
        """
        b = self.config.bounds
        out = np.asarray(obs, dtype=np.float64).copy()
        out[0:3] = (obs[0:3] - b.capsule_box.center) / b.capsule_box.half_extent
        out[7:10] = obs[7:10] / b.capsule_speed_max
        out[10:13] = (obs[10:13] - b.magnet_box.center) / b.magnet_box.half_extent
        out[13:16] = obs[13:16] / np.pi
        return out

    # -- rollout helper ----------------------------------------------------

    def run_episode(self, policy, seed: int | None = None,
                    coverage_marks=(60.0, 120.0, 150.0)):
        """Drive policy to termination/truncation; returns an EpisodeRecord."""
        from .records import EpisodeRecord, StepRow

        wall_start = time.perf_counter()
        self.reset(seed)
        rows = []
        coverage_at = {f"{mark:g}": None for mark in coverage_marks}
        termination = "truncated"
        while True:
            action = np.asarray(policy(self.observe()), dtype=np.float64)
            if not np.all(np.isfinite(action)):
                raise ValueError(
                    f"policy output non-finite at step {self.step_count + 1}: {action}")
            result = self.step(action)
            rows.append(StepRow(
                step=self.step_count,
                sim_time=self.sim_time,
                action=np.clip(action, -1.0, 1.0).tolist(),
                reward=result.reward,
                coverage=result.info["current_coverage"],
                violation=result.info["violation"],
            ))
            for mark in coverage_marks:
                key = f"{mark:g}"
                if coverage_at[key] is None and self.sim_time >= mark:
                    coverage_at[key] = result.info["current_coverage"]
            if result.terminated:
                termination = result.info["violation"]
                break
            if result.truncated:
                break
        seed_used = self.config.episode.seed if seed is None else seed
        return EpisodeRecord(
            seed=seed_used,
            env_config=self.config.to_dict(),
            steps=rows,
            termination=termination,
            final_coverage=self.tracker.current_coverage,
            coverage_at=coverage_at,
            sim_time=self.sim_time,
            wall_time=time.perf_counter() - wall_start,
        )
