from .mesh import (
    TriangleMesh,
    load_mesh,
    save_coverage_ply,
    generate_sphere_phantom,
    generate_stomach_phantom,
    stomach_phantom_path,
    MeshError,
)
from .bvh import BvhIndex
from .visibility import CameraModel, CameraPose, visible_vertices
from .coverage import CoverageTracker

__all__ = [
    "TriangleMesh",
    "load_mesh",
    "save_coverage_ply",
    "generate_sphere_phantom",
    "generate_stomach_phantom",
    "stomach_phantom_path",
    "MeshError",
    "BvhIndex",
    "CameraModel",
    "CameraPose",
    "visible_vertices",
    "CoverageTracker",
]
