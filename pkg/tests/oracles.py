"""Independent brute-force reference implementations used by the tests.

Everything here deliberately avoids the library's BVH/visibility code
paths: plain numpy over all triangles, O(V*T), so library results can be
checked against an implementation with no shared traversal logic.
"""

import numpy as np


def ray_tri_all(origin, direction, tri_verts):
    """Hit parameters t (unit-direction metric) for every triangle; -1 = miss."""
    v0 = tri_verts[:, 0, :]
    e1 = tri_verts[:, 1, :] - v0
    e2 = tri_verts[:, 2, :] - v0
    d = np.asarray(direction, dtype=np.float64)
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    ok = np.abs(det) >= 1e-14
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = np.asarray(origin, dtype=np.float64) - v0
    u = np.einsum("ij,ij->i", tvec, p) * inv
    q = np.cross(tvec, e1)
    v = (q @ d) * inv
    t = np.einsum("ij,ij->i", e2, q) * inv
    ok &= (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (u + v <= 1.0) & (t >= 0.0)
    return np.where(ok, t, -1.0)


def brute_nearest_hit(origin, direction, mesh):
    """(t, triangle index) of the nearest hit, or (inf, -1)."""
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    t = ray_tri_all(origin, d, mesh.vertices[mesh.triangles])
    hit = t >= 0.0
    if not hit.any():
        return np.inf, -1
    t = np.where(hit, t, np.inf)
    i = int(np.argmin(t))
    return float(t[i]), i


def brute_visible_set(camera, pose, mesh, mode="occlusion", eps_occ=1e-5):
    """O(V*T) visible-vertex indices: cone, range, facing, per-vertex ray cast."""
    cam = pose.position
    fwd = pose.forward()
    cos_half = np.cos(np.radians(camera.fov_deg) / 2.0)
    tri_verts = mesh.vertices[mesh.triangles]
    out = []
    for i in range(mesh.vertex_count):
        d = mesh.vertices[i] - cam
        dist = np.linalg.norm(d)
        if dist < camera.near or dist > camera.far or dist == 0.0:
            continue
        if d @ fwd < cos_half * dist:
            continue
        if mesh.normals[i] @ (-d) <= 0.0:
            continue
        if mode == "occlusion":
            t = ray_tri_all(cam, d / dist, tri_verts)
            if np.any((t > 0.0) & (t < dist - eps_occ)):
                continue
        out.append(i)
    return np.array(out, dtype=np.int64)
