"""Axis-aligned bounding-box tree over triangles with jitted ray queries.

The tree is flattened into plain arrays so the traversal kernels can run
under numba. Queries: nearest-hit raycast, any-hit occlusion for a batch
of camera->vertex segments, and hit counting for inside/outside parity
tests. All kernels are exact Moller-Trumbore in float64, so results match
exhaustive triangle iteration bit for bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_LEAF_SIZE = 4
_STACK_DEPTH = 64


def _build_nodes(centroids: np.ndarray, tri_min: np.ndarray, tri_max: np.ndarray):
    """Median-split build. Returns flat arrays and the triangle order."""
    n_tris = centroids.shape[0]
    order = np.arange(n_tris, dtype=np.int64)
    bounds_min, bounds_max, left_or_start, count = [], [], [], []

    # iterative build with an explicit stack of (start, end, node_index)
    stack = [(0, n_tris)]
    slots = [-1]  # parent slot to patch with this node's index (-1 = root)
    patch_side = [0]
    while stack:
        start, end = stack.pop()
        slot = slots.pop()
        side = patch_side.pop()
        idx = len(bounds_min)
        if slot >= 0:
            if side == 0:
                left_or_start[slot] = idx
            # right child is always left + subtree size; patched after build
        sel = order[start:end]
        bounds_min.append(tri_min[sel].min(axis=0))
        bounds_max.append(tri_max[sel].max(axis=0))
        if end - start <= _LEAF_SIZE:
            left_or_start.append(start)
            count.append(end - start)
            continue
        cent = centroids[sel]
        axis = int(np.argmax(cent.max(axis=0) - cent.min(axis=0)))
        mid = (end - start) // 2
        local = np.argpartition(cent[:, axis], mid, kind="introselect")
        order[start:end] = sel[local]
        left_or_start.append(-1)  # patched when the left child is created
        count.append(0)
        # push right first so left is processed (and numbered) first
        stack.append((start + mid, end))
        slots.append(idx)
        patch_side.append(1)
        stack.append((start, start + mid))
        slots.append(idx)
        patch_side.append(0)

    return (np.array(bounds_min), np.array(bounds_max),
            np.array(left_or_start, dtype=np.int64),
            np.array(count, dtype=np.int64), order)


def _right_children(left_or_start: np.ndarray, count: np.ndarray) -> np.ndarray:
    """Right child index per internal node (subtree sizes via reverse scan)."""
    n = left_or_start.shape[0]
    size = np.ones(n, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        if count[i] == 0:
            left = left_or_start[i]
            right[i] = left + size[left]
            size[i] = 1 + size[left] + size[right[i]]
    return right


@njit(cache=True)
def _ray_tri(orig, dirn, v0, v1, v2):
    """Moller-Trumbore; returns t >= 0 on hit, -1 otherwise."""
    e1x, e1y, e1z = v1[0] - v0[0], v1[1] - v0[1], v1[2] - v0[2]
    e2x, e2y, e2z = v2[0] - v0[0], v2[1] - v0[1], v2[2] - v0[2]
    px = dirn[1] * e2z - dirn[2] * e2y
    py = dirn[2] * e2x - dirn[0] * e2z
    pz = dirn[0] * e2y - dirn[1] * e2x
    det = e1x * px + e1y * py + e1z * pz
    if -1e-14 < det < 1e-14:
        return -1.0
    inv = 1.0 / det
    tx, ty, tz = orig[0] - v0[0], orig[1] - v0[1], orig[2] - v0[2]
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return -1.0
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dirn[0] * qx + dirn[1] * qy + dirn[2] * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return -1.0
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t < 0.0:
        return -1.0
    return t


@njit(cache=True)
def _slab_hit(orig, inv_dir, bmin, bmax, tmax):
    tmin_t = 0.0
    tmax_t = tmax
    for k in range(3):
        t1 = (bmin[k] - orig[k]) * inv_dir[k]
        t2 = (bmax[k] - orig[k]) * inv_dir[k]
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin_t:
            tmin_t = t1
        if t2 < tmax_t:
            tmax_t = t2
        if tmin_t > tmax_t:
            return False
    return True


@njit(cache=True)
def _traverse_nearest(orig, dirn, bmin, bmax, left, right, count, tri_v, tmax):
    inv_dir = np.empty(3)
    for k in range(3):
        d = dirn[k]
        if -1e-300 < d < 1e-300:
            d = 1e-300 if d >= 0 else -1e-300
        inv_dir[k] = 1.0 / d
    best_t = tmax
    best_i = -1
    stack = np.empty(_STACK_DEPTH, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if not _slab_hit(orig, inv_dir, bmin[node], bmax[node], best_t):
            continue
        if count[node] > 0:
            for s in range(left[node], left[node] + count[node]):
                t = _ray_tri(orig, dirn, tri_v[s, 0], tri_v[s, 1], tri_v[s, 2])
                if 0.0 <= t < best_t:
                    best_t = t
                    best_i = s
        else:
            stack[top] = left[node]
            top += 1
            stack[top] = right[node]
            top += 1
    return best_t, best_i


@njit(cache=True)
def _traverse_any(orig, dirn, bmin, bmax, left, right, count, tri_v, t_lo, t_hi):
    """True when any triangle hit falls inside (t_lo, t_hi)."""
    inv_dir = np.empty(3)
    for k in range(3):
        d = dirn[k]
        if -1e-300 < d < 1e-300:
            d = 1e-300 if d >= 0 else -1e-300
        inv_dir[k] = 1.0 / d
    stack = np.empty(_STACK_DEPTH, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if not _slab_hit(orig, inv_dir, bmin[node], bmax[node], t_hi):
            continue
        if count[node] > 0:
            for s in range(left[node], left[node] + count[node]):
                t = _ray_tri(orig, dirn, tri_v[s, 0], tri_v[s, 1], tri_v[s, 2])
                if t_lo < t < t_hi:
                    return True
        else:
            stack[top] = left[node]
            top += 1
            stack[top] = right[node]
            top += 1
    return False


@njit(cache=True)
def _occluded_batch(orig, targets, bmin, bmax, left, right, count, tri_v, eps):
    out = np.empty(targets.shape[0], dtype=np.bool_)
    dirn = np.empty(3)
    for i in range(targets.shape[0]):
        dist = 0.0
        for k in range(3):
            dirn[k] = targets[i, k] - orig[k]
            dist += dirn[k] * dirn[k]
        dist = np.sqrt(dist)
        if dist <= eps:
            out[i] = False
            continue
        for k in range(3):
            dirn[k] /= dist
        out[i] = _traverse_any(orig, dirn, bmin, bmax, left, right, count,
                               tri_v, 0.0, dist - eps)
    return out


@njit(cache=True)
def _count_hits_brute(orig, dirn, tri_v):
    n = 0
    for s in range(tri_v.shape[0]):
        t = _ray_tri(orig, dirn, tri_v[s, 0], tri_v[s, 1], tri_v[s, 2])
        if t > 1e-12:
            n += 1
    return n


class BvhIndex:
    """Immutable accelerator over a mesh's triangles; share freely across threads."""

    def __init__(self, mesh):
        v = mesh.vertices
        t = mesh.triangles
        tri_v = v[t]  # (T, 3, 3)
        tri_min = tri_v.min(axis=1)
        tri_max = tri_v.max(axis=1)
        centroids = tri_v.mean(axis=1)
        bmin, bmax, left, count, order = _build_nodes(centroids, tri_min, tri_max)
        self.node_min = np.ascontiguousarray(bmin)
        self.node_max = np.ascontiguousarray(bmax)
        self.node_left = left
        self.node_count = count
        self.node_right = _right_children(left, count)
        self.tri_order = order  # leaf slot -> original triangle index
        self.tri_verts = np.ascontiguousarray(tri_v[order])
        self.mesh = mesh

    def raycast(self, origin, direction, tmax: float = np.inf):
        """Nearest hit along a ray: (t, triangle index) or (inf, -1)."""
        origin = np.asarray(origin, dtype=np.float64)
        direction = np.asarray(direction, dtype=np.float64)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            raise ValueError("ray direction must be nonzero")
        t, slot = _traverse_nearest(origin, direction / norm, self.node_min,
                                    self.node_max, self.node_left,
                                    self.node_right, self.node_count,
                                    self.tri_verts, tmax)
        if slot < 0:
            return np.inf, -1
        return float(t), int(self.tri_order[slot])

    def occluded(self, origin, targets, eps: float) -> np.ndarray:
        """For each target point: does any triangle block origin->target?

        A hit counts only when it lands strictly inside (0, |target-origin|-eps),
        so triangles incident to the target itself are excluded by the eps band.
        """
        origin = np.asarray(origin, dtype=np.float64)
        targets = np.ascontiguousarray(np.atleast_2d(targets), dtype=np.float64)
        return _occluded_batch(origin, targets, self.node_min, self.node_max,
                               self.node_left, self.node_right, self.node_count,
                               self.tri_verts, eps)

    def contains(self, point) -> bool:
        """Inside/outside by ray-crossing parity (watertight meshes)."""
        point = np.asarray(point, dtype=np.float64)
        # direction chosen away from axis alignment to dodge edge grazing
        dirn = np.array([0.5773502691896258, 0.5773502691896257, 0.5773502691896259])
        return _count_hits_brute(point, dirn, self.tri_verts) % 2 == 1
