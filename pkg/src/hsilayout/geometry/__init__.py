from .boxes import OrientedBox, box_from_mesh, iou2d, oriented_iou3d
from .bvh import BVH
from .distance import nearest_distances, one_sided_chamfer, point_to_surface
from .mesh import (
    InvalidMeshError,
    NotWatertightError,
    TriMesh,
    WatertightReport,
    box_mesh,
    icosphere,
    merge_meshes,
    orient_outward,
    read_obj,
    require_watertight,
    validate_watertight,
    write_obj,
)
from .pose import InvalidParameterError, PoseParams, apply_pose, invert_rigid, pose_points, rotation_y
from .winding import inside, winding_number

__all__ = [
    "BVH", "InvalidMeshError", "InvalidParameterError", "NotWatertightError", "OrientedBox",
    "PoseParams", "TriMesh", "WatertightReport", "apply_pose", "box_from_mesh", "box_mesh", "icosphere",
    "inside", "invert_rigid", "iou2d", "merge_meshes", "nearest_distances", "one_sided_chamfer",
    "orient_outward", "oriented_iou3d", "point_to_surface", "pose_points", "read_obj",
    "require_watertight", "rotation_y", "validate_watertight", "winding_number", "write_obj",
]
