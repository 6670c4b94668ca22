"""Triangle meshes for the scanning phantoms.

Holds the mesh container, OBJ/PLY loaders, the coverage-colored PLY
exporter, and the two procedural phantoms: a geodesic sphere for fast
tests and the stomach-shaped cavity used as the bundled scan target.
Phantom normals point into the cavity by default since the capsule
camera always views the wall from inside.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

STOMACH_VERTEX_COUNT = 24822


class MeshError(ValueError):
    """Raised for unreadable or malformed mesh input."""


@dataclass
class TriangleMesh:
    """Vertex positions (m), unit vertex normals, and triangle index triples."""

    vertices: np.ndarray  # (V, 3) float64
    normals: np.ndarray   # (V, 3) float64, unit length
    triangles: np.ndarray  # (T, 3) int64

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.normals = np.ascontiguousarray(self.normals, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]

    @property
    def triangle_count(self) -> int:
        return self.triangles.shape[0]

    def validate(self) -> None:
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be (V, 3)")
        if self.vertices.shape[0] == 0:
            raise MeshError("mesh has zero vertices")
        if self.normals.shape != self.vertices.shape:
            raise MeshError("normals must match vertex count")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be (T, 3)")
        if self.triangles.size and self.triangles.max() >= self.vertex_count:
            raise MeshError("triangle index out of range")
        if self.triangles.size and self.triangles.min() < 0:
            raise MeshError("negative triangle index")
        norms = np.linalg.norm(self.normals, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-6):
            raise MeshError("vertex normals must be unit length")

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def is_watertight(self) -> bool:
        """Every undirected edge shared by exactly two triangles."""
        tri = self.triangles
        edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        return bool(np.all(counts == 2))

    def signed_volume(self) -> float:
        """Positive when triangle winding is outward (divergence theorem)."""
        v = self.vertices
        a, b, c = v[self.triangles[:, 0]], v[self.triangles[:, 1]], v[self.triangles[:, 2]]
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def flipped(self) -> "TriangleMesh":
        """Reverse winding and negate normals (outward <-> inward)."""
        return TriangleMesh(self.vertices.copy(), -self.normals,
                            self.triangles[:, ::-1].copy())


def compute_vertex_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Area-weighted average of incident face normals, normalized per vertex."""
    v = np.asarray(vertices, dtype=np.float64)
    t = np.asarray(triangles)
    face_n = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    # cross product magnitude = 2*area, so this is already area-weighted
    normals = np.zeros_like(v)
    for k in range(3):
        np.add.at(normals, t[:, k], face_n)
    lens = np.linalg.norm(normals, axis=1)
    lens[lens < 1e-30] = 1.0
    return normals / lens[:, None]


# ---------------------------------------------------------------------------
# loaders


def load_mesh(path) -> TriangleMesh:
    """Load an ASCII OBJ (v/vn/f, triangles only) or binary little-endian PLY.

    Normals are computed by area-weighted face averaging when the file
    carries none.
    """
    path = Path(path)
    if not path.is_file():
        raise MeshError(f"cannot read mesh file: {path}")
    suffix = path.suffix.lower()
    if suffix == ".obj":
        mesh = _load_obj(path)
    elif suffix == ".ply":
        mesh = _load_ply(path)
    else:
        raise MeshError(f"unsupported mesh format: {suffix!r} (want .obj or .ply)")
    mesh.validate()
    return mesh


def _load_obj(path: Path) -> TriangleMesh:
    verts: list[list[float]] = []
    file_normals: list[list[float]] = []
    faces: list[list[int]] = []
    face_normal_ids: list[list[int]] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: malformed vertex line")
                verts.append([float(x) for x in parts[1:4]])
            elif tag == "vn":
                file_normals.append([float(x) for x in parts[1:4]])
            elif tag == "f":
                refs = parts[1:]
                if len(refs) != 3:
                    raise MeshError(
                        f"{path}:{lineno}: non-triangle face with {len(refs)} vertices")
                vids, nids = [], []
                for ref in refs:
                    fields = ref.split("/")
                    vids.append(int(fields[0]))
                    if len(fields) == 3 and fields[2]:
                        nids.append(int(fields[2]))
                faces.append(vids)
                if len(nids) == 3:
                    face_normal_ids.append(nids)
    if not verts:
        raise MeshError(f"{path}: mesh has zero vertices")

    nv = len(verts)

    def resolve(i: int, count: int) -> int:
        # OBJ indices are 1-based; negatives count from the end
        j = i - 1 if i > 0 else count + i
        if j < 0 or j >= count:
            raise MeshError(f"{path}: face index {i} out of range")
        return j

    tris = np.array([[resolve(i, nv) for i in f] for f in faces], dtype=np.int64)
    vertices = np.array(verts, dtype=np.float64)

    if file_normals and len(face_normal_ids) == len(faces):
        normals = np.zeros((nv, 3))
        src = np.array(file_normals, dtype=np.float64)
        for f, nids in zip(tris, face_normal_ids):
            for v_idx, n_idx in zip(f, nids):
                normals[v_idx] = src[resolve(n_idx, len(file_normals))]
        lens = np.linalg.norm(normals, axis=1)
        if np.any(lens < 1e-12):  # some vertex never referenced with a normal
            normals = compute_vertex_normals(vertices, tris)
        else:
            normals = normals / lens[:, None]
    else:
        normals = compute_vertex_normals(vertices, tris)
    return TriangleMesh(vertices, normals, tris)


_PLY_DTYPES = {
    "float": ("<f4", 4), "float32": ("<f4", 4),
    "double": ("<f8", 8), "float64": ("<f8", 8),
    "uchar": ("<u1", 1), "uint8": ("<u1", 1),
    "char": ("<i1", 1), "int8": ("<i1", 1),
    "short": ("<i2", 2), "int16": ("<i2", 2),
    "ushort": ("<u2", 2), "uint16": ("<u2", 2),
    "int": ("<i4", 4), "int32": ("<i4", 4),
    "uint": ("<u4", 4), "uint32": ("<u4", 4),
}


def _load_ply(path: Path) -> TriangleMesh:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"ply":
            raise MeshError(f"{path}: not a PLY file")
        fmt = None
        elements = []  # (name, count, [(prop_name, type, list_count_type|None)])
        while True:
            line = fh.readline()
            if not line:
                raise MeshError(f"{path}: truncated PLY header")
            tokens = line.decode("ascii", errors="replace").split()
            if not tokens:
                continue
            if tokens[0] == "format":
                fmt = tokens[1]
            elif tokens[0] == "element":
                elements.append((tokens[1], int(tokens[2]), []))
            elif tokens[0] == "property":
                if not elements:
                    raise MeshError(f"{path}: property before element")
                if tokens[1] == "list":
                    elements[-1][2].append((tokens[4], tokens[3], tokens[2]))
                else:
                    elements[-1][2].append((tokens[2], tokens[1], None))
            elif tokens[0] == "end_header":
                break
        if fmt != "binary_little_endian":
            raise MeshError(f"{path}: PLY format {fmt!r} unsupported "
                            "(binary_little_endian required)")
        vertices = normals = None
        tris = None
        for name, count, props in elements:
            if name == "vertex":
                if any(p[2] is not None for p in props):
                    raise MeshError(f"{path}: list property in vertex element")
                dtype = np.dtype([(p[0], _PLY_DTYPES[p[1]][0]) for p in props])
                data = np.frombuffer(fh.read(dtype.itemsize * count), dtype=dtype,
                                     count=count)
                vertices = np.stack([data[c].astype(np.float64)
                                     for c in ("x", "y", "z")], axis=1)
                if all(c in data.dtype.names for c in ("nx", "ny", "nz")):
                    normals = np.stack([data[c].astype(np.float64)
                                        for c in ("nx", "ny", "nz")], axis=1)
            elif name == "face":
                if len(props) != 1 or props[0][2] is None:
                    raise MeshError(f"{path}: face element must be a single list")
                _, idx_type, count_type = props[0]
                cnt_dt, cnt_sz = _PLY_DTYPES[count_type]
                idx_dt, idx_sz = _PLY_DTYPES[idx_type]
                rows = []
                for _ in range(count):
                    n = int(np.frombuffer(fh.read(cnt_sz), dtype=cnt_dt)[0])
                    if n != 3:
                        raise MeshError(f"{path}: non-triangle face with {n} vertices")
                    rows.append(np.frombuffer(fh.read(idx_sz * 3), dtype=idx_dt))
                tris = np.array(rows, dtype=np.int64)
            else:
                raise MeshError(f"{path}: unsupported PLY element {name!r}")
        if vertices is None or vertices.shape[0] == 0:
            raise MeshError(f"{path}: mesh has zero vertices")
        if tris is None:
            raise MeshError(f"{path}: PLY carries no faces")
        if normals is None:
            normals = compute_vertex_normals(vertices, tris)
        else:
            lens = np.linalg.norm(normals, axis=1)
            lens[lens < 1e-30] = 1.0
            normals = normals / lens[:, None]
        return TriangleMesh(vertices, normals, tris)


def save_ply(mesh: TriangleMesh, path, colors: np.ndarray | None = None) -> None:
    """Write binary little-endian PLY, optionally with per-vertex uchar RGB."""
    path = Path(path)
    v = mesh.vertices
    n = mesh.normals
    header = ["ply", "format binary_little_endian 1.0",
              f"element vertex {mesh.vertex_count}"]
    for c in ("x", "y", "z"):
        header.append(f"property double {c}")
    for c in ("nx", "ny", "nz"):
        header.append(f"property double {c}")
    if colors is not None:
        for c in ("red", "green", "blue"):
            header.append(f"property uchar {c}")
    header += [f"element face {mesh.triangle_count}",
               "property list uchar int vertex_indices", "end_header"]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if colors is None:
            rows = np.hstack([v, n]).astype("<f8")
            fh.write(rows.tobytes())
        else:
            rec = np.dtype([("pos", "<f8", 3), ("nrm", "<f8", 3), ("rgb", "<u1", 3)])
            data = np.empty(mesh.vertex_count, dtype=rec)
            data["pos"], data["nrm"] = v, n
            data["rgb"] = np.asarray(colors, dtype=np.uint8)
            fh.write(data.tobytes())
        face = np.dtype([("n", "<u1"), ("idx", "<i4", 3)])
        fdata = np.empty(mesh.triangle_count, dtype=face)
        fdata["n"] = 3
        fdata["idx"] = mesh.triangles.astype("<i4")
        fh.write(fdata.tobytes())


VISITED_COLOR = (0, 0, 255)    # blue, per the red->blue scan convention
UNVISITED_COLOR = (255, 0, 0)  # red


def save_coverage_ply(mesh: TriangleMesh, visited: np.ndarray, path) -> None:
    """Snapshot the coverage state: visited vertices blue, unvisited red."""
    visited = np.asarray(visited, dtype=bool)
    if visited.shape[0] != mesh.vertex_count:
        raise MeshError("visited flags must match vertex count")
    colors = np.where(visited[:, None], np.array(VISITED_COLOR, dtype=np.uint8),
                      np.array(UNVISITED_COLOR, dtype=np.uint8))
    save_ply(mesh, path, colors=colors)


# ---------------------------------------------------------------------------
# procedural phantoms

_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
    [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
    [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
], dtype=np.float64)
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


def generate_sphere_phantom(n_vertices: int, radius: float,
                            inward: bool = True) -> TriangleMesh:
    """Geodesic sphere with approximately n_vertices vertices.

    Subdivides each icosahedron edge into f segments giving exactly
    10*f**2 + 2 vertices; f is chosen to land nearest the request.
    Normals are exact unit radials, flipped inside when `inward`.
    """
    if n_vertices < 12:
        raise MeshError("sphere phantom needs n_vertices >= 12")
    if radius <= 0:
        raise MeshError("sphere phantom needs radius > 0")
    f = max(1, round(np.sqrt((n_vertices - 2) / 10.0)))

    base = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1)[:, None]
    verts: list[np.ndarray] = [base[i] for i in range(12)]
    edge_points: dict[tuple[int, int], list[int]] = {}

    def edge_interior(a: int, b: int) -> list[int]:
        key = (a, b) if a < b else (b, a)
        if key not in edge_points:
            ids = []
            for s in range(1, f):
                p = base[key[0]] * (f - s) + base[key[1]] * s
                verts.append(p / np.linalg.norm(p))
                ids.append(len(verts) - 1)
            edge_points[key] = ids
        ids = edge_points[key]
        return ids if (a, b) == key else ids[::-1]

    faces: list[list[int]] = []
    for a, b, c in _ICO_FACES:
        # lattice[i][j] = vertex id at barycentric (f-i-j, i, j), i along a->b
        ab, ac = edge_interior(a, b), edge_interior(a, c)
        bc = edge_interior(b, c)
        lattice = [[-1] * (f + 1 - i) for i in range(f + 1)]
        lattice[0][0] = a
        lattice[f][0] = b
        lattice[0][f] = c
        for s in range(1, f):
            lattice[s][0] = ab[s - 1]
            lattice[0][s] = ac[s - 1]
            lattice[f - s][s] = bc[s - 1]
        for i in range(1, f):
            for j in range(1, f - i):
                p = base[a] * (f - i - j) + base[b] * i + base[c] * j
                verts.append(p / np.linalg.norm(p))
                lattice[i][j] = len(verts) - 1
        for i in range(f):
            for j in range(f - i):
                faces.append([lattice[i][j], lattice[i + 1][j], lattice[i][j + 1]])
                if i + j < f - 1:
                    faces.append([lattice[i + 1][j], lattice[i + 1][j + 1],
                                  lattice[i][j + 1]])

    vertices = np.array(verts) * radius
    normals = np.array(verts)  # unit radials (outward)
    tris = np.array(faces, dtype=np.int64)
    mesh = TriangleMesh(vertices, normals, tris)
    if mesh.signed_volume() < 0:
        # winding-only fix: radial normals are already outward
        mesh = TriangleMesh(vertices, normals, tris[:, ::-1].copy())
    if inward:
        mesh = mesh.flipped()
    mesh.validate()
    return mesh


def _rotation_minimizing_frames(centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Transport a normal/binormal pair along a polyline (double reflection)."""
    m = centers.shape[0]
    tangents = np.zeros_like(centers)
    tangents[1:-1] = centers[2:] - centers[:-2]
    tangents[0] = centers[1] - centers[0]
    tangents[-1] = centers[-1] - centers[-2]
    tangents /= np.linalg.norm(tangents, axis=1)[:, None]

    normals = np.zeros_like(centers)
    binormals = np.zeros_like(centers)
    ref = np.array([0.0, 0.0, 1.0])
    if abs(np.dot(ref, tangents[0])) > 0.9:
        ref = np.array([1.0, 0.0, 0.0])
    n0 = ref - np.dot(ref, tangents[0]) * tangents[0]
    normals[0] = n0 / np.linalg.norm(n0)
    binormals[0] = np.cross(tangents[0], normals[0])
    for i in range(m - 1):
        v1 = centers[i + 1] - centers[i]
        c1 = np.dot(v1, v1)
        rl = normals[i] - (2.0 / c1) * np.dot(v1, normals[i]) * v1
        tl = tangents[i] - (2.0 / c1) * np.dot(v1, tangents[i]) * v1
        v2 = tangents[i + 1] - tl
        c2 = np.dot(v2, v2)
        n = rl if c2 < 1e-30 else rl - (2.0 / c2) * np.dot(v2, rl) * v2
        n = n - np.dot(n, tangents[i + 1]) * tangents[i + 1]
        normals[i + 1] = n / np.linalg.norm(n)
        binormals[i + 1] = np.cross(tangents[i + 1], normals[i + 1])
    return normals, binormals


def generate_stomach_phantom(inward: bool = True) -> TriangleMesh:
    """Stomach-shaped cavity: a bent, bulged bag remeshed to 24822 vertices.

    The surface is a closed tube swept along a J-shaped centerline with a
    fundus bulge, on a 146-ring x 170-column grid plus two pole vertices
    (146*170 + 2 = 24822). Fully deterministic; roughly 0.1 m across.
    """
    rings, cols = 146, 170
    n_stations = rings + 2

    t = np.linspace(0.0, 1.0, n_stations)
    # J-shaped centerline: arc in the x-y plane, y up
    phi = -0.35 + 2.95 * t
    arc_r = 0.042
    centers = np.stack([arc_r * np.sin(phi),
                        arc_r * np.cos(phi),
                        0.015 * np.sin(np.pi * t)], axis=1)
    # bag profile: wide fundus/body, narrow cardia and pylorus
    prof = 0.012 + 0.024 * np.exp(-((t - 0.38) / 0.30) ** 2)
    rho = prof * np.sin(np.pi * t) ** 0.85

    frame_n, frame_b = _rotation_minimizing_frames(centers)

    psi = 2.0 * np.pi * np.arange(cols) / cols
    cosp, sinp = np.cos(psi), np.sin(psi)

    verts = np.empty((STOMACH_VERTEX_COUNT, 3))
    verts[0] = centers[0]
    for i in range(rings):
        st = i + 1
        ring = (centers[st]
                + rho[st] * (np.outer(cosp, frame_n[st]) + np.outer(sinp, frame_b[st])))
        verts[1 + i * cols: 1 + (i + 1) * cols] = ring
    verts[-1] = centers[-1]

    top, bottom = 0, STOMACH_VERTEX_COUNT - 1
    faces = []
    ring0 = lambda i, j: 1 + i * cols + (j % cols)
    for j in range(cols):
        faces.append([top, ring0(0, j), ring0(0, j + 1)])
    for i in range(rings - 1):
        for j in range(cols):
            a, b = ring0(i, j), ring0(i, j + 1)
            c, d = ring0(i + 1, j), ring0(i + 1, j + 1)
            faces.append([a, c, b])
            faces.append([b, c, d])
    for j in range(cols):
        faces.append([bottom, ring0(rings - 1, j + 1), ring0(rings - 1, j)])
    tris = np.array(faces, dtype=np.int64)

    normals = compute_vertex_normals(verts, tris)
    mesh = TriangleMesh(verts, normals, tris)
    if mesh.signed_volume() < 0:
        mesh = TriangleMesh(verts, -normals, tris[:, ::-1].copy())
    if inward:
        mesh = mesh.flipped()
    mesh.validate()
    return mesh


def stomach_phantom_path() -> Path:
    """Path of the bundled stomach phantom PLY (generated on first use)."""
    path = Path(__file__).resolve().parent.parent / "assets" / "stomach_phantom.ply"
    if not path.is_file():
        save_ply(generate_stomach_phantom(), path)
    return path
