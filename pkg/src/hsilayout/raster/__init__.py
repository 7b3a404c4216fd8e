from .camera import NEAR_EPS, PinholeCamera, camera_rotation
from .imageio import read_pfm, read_pgm, write_pfm, write_pgm
from .render import (
    occ_sil_loss,
    render_depth,
    render_silhouette,
    render_soft_silhouette,
    depth_from_camera_vertices,
    soft_from_camera_vertices,
    soft_from_depth,
)

__all__ = [
    "NEAR_EPS", "PinholeCamera", "camera_rotation", "occ_sil_loss", "read_pfm", "read_pgm",
    "render_depth", "render_silhouette", "render_soft_silhouette", "soft_from_depth", "depth_from_camera_vertices", "soft_from_camera_vertices", "write_pfm", "write_pgm",
]
