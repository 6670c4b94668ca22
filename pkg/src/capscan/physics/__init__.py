from .rigid import (
    RigidState,
    quat_mul,
    quat_conj,
    quat_rotate,
    quat_normalize,
    quat_from_axis_angle,
    quat_to_ypr,
    ypr_to_quat,
    step_capsule,
    apply_magnet_command,
)
from .dipole import DipoleSpec, Wrench, MagneticSingularityError, dipole_field, dipole_wrench
from .world import WorldParams, Bounds, check_bounds

__all__ = [
    "RigidState",
    "quat_mul",
    "quat_conj",
    "quat_rotate",
    "quat_normalize",
    "quat_from_axis_angle",
    "quat_to_ypr",
    "ypr_to_quat",
    "step_capsule",
    "apply_magnet_command",
    "DipoleSpec",
    "Wrench",
    "MagneticSingularityError",
    "dipole_field",
    "dipole_wrench",
    "WorldParams",
    "Bounds",
    "check_bounds",
]
