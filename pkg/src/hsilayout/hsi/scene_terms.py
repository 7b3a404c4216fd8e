"""Image-box agreement and scale regularisation."""

from __future__ import annotations

import numpy as np

from ..geometry.boxes import OrientedBox
from ..raster.camera import PinholeCamera


def projected_box(cam: PinholeCamera, box: OrientedBox) -> np.ndarray:
    """(x_min, y_min, width, height) in pixels of the projected box corners."""
    uv, _, ok = cam.project(box.corners())
    if not ok.all():
        uv = uv[ok]
    if len(uv) == 0:
        return np.array([np.nan] * 4)
    lo, hi = uv.min(axis=0), uv.max(axis=0)
    return np.array([lo[0], lo[1], hi[0] - lo[0], hi[1] - lo[1]])


def bbox_term(projected, detected, image_width: int) -> float:
    p = np.asarray(projected, dtype=np.float64)
    d = np.asarray(detected, dtype=np.float64)
    return float(np.abs(p[:3] - d[:3]).sum() / image_width)


def bbox_loss(projected, detected, image_width: int) -> float:
    """Sum over objects of the L1 error in x_min, y_min and width, in image widths."""
    return sum(bbox_term(p, d, image_width) for p, d in zip(projected, detected))


def scale_term(scale, init_scale) -> float:
    return float(np.linalg.norm(np.asarray(scale, float) / np.asarray(init_scale, float) - 1.0))


def scale_loss(scales, init_scales) -> float:
    return sum(scale_term(s, s0) for s, s0 in zip(scales, init_scales))
