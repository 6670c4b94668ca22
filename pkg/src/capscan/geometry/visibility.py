"""Camera-frustum and occlusion visibility of mesh vertices.

A vertex is visible when it (a) lies inside the view cone between the
near and far ranges, (b) faces the camera, and (c) in occlusion mode is
not blocked by any triangle strictly before it along the sight ray. The
frustum-only mode skips (c) and needs no BVH; it exists as the fast path
for training on convex phantoms, where it is equivalent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..physics.rigid import quat_rotate

# camera boresight in the capsule body frame (long axis)
BODY_FORWARD = np.array([0.0, 0.0, 1.0])

DEFAULT_EPS_OCC = 1e-5  # meters along the sight ray


@dataclass
class CameraModel:
    """Cone-of-view camera: full apex angle in degrees, radial near/far (m)."""

    fov_deg: float = 110.0
    near: float = 0.001
    far: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError("fov_deg must be in (0, 180)")
        if not 0.0 < self.near < self.far:
            raise ValueError("need 0 < near < far")


@dataclass
class CameraPose:
    position: np.ndarray    # (3,) meters
    orientation: np.ndarray  # (4,) unit quaternion, w-first

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.orientation = np.asarray(self.orientation, dtype=np.float64)
        norm = np.linalg.norm(self.orientation)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("camera quaternion must be unit length")

    def forward(self) -> np.ndarray:
        return quat_rotate(self.orientation, BODY_FORWARD)


def frustum_mask(camera: CameraModel, pose: CameraPose, vertices: np.ndarray,
                 normals: np.ndarray) -> np.ndarray:
    """Boolean mask of vertices inside the cone and front-facing."""
    d = vertices - pose.position
    dist = np.linalg.norm(d, axis=1)
    fwd = pose.forward()
    cos_half = np.cos(np.radians(camera.fov_deg) / 2.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_ang = (d @ fwd) / dist
    in_range = (dist >= camera.near) & (dist <= camera.far)
    in_cone = cos_ang >= cos_half
    # front-facing: vertex normal has a positive component toward the camera
    facing = np.einsum("ij,ij->i", normals, -d) > 0.0
    return in_range & in_cone & facing


def visible_vertices(camera: CameraModel, pose: CameraPose, mesh, bvh=None,
                     mode: str = "occlusion",
                     eps_occ: float = DEFAULT_EPS_OCC) -> np.ndarray:
    """Indices of vertices visible from the pose, ascending.

    mode "frustum" tests the cone and facing only; mode "occlusion"
    additionally ray-casts camera->vertex through the BVH.
    """
    if mode not in ("occlusion", "frustum"):
        raise ValueError(f"unknown visibility mode {mode!r}")
    mask = frustum_mask(camera, pose, mesh.vertices, mesh.normals)
    candidates = np.nonzero(mask)[0]
    if mode == "frustum" or candidates.size == 0:
        return candidates
    if bvh is None:
        raise ValueError("occlusion mode requires a BvhIndex")
    blocked = bvh.occluded(pose.position, mesh.vertices[candidates], eps_occ)
    return candidates[~blocked]
