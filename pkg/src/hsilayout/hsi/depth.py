"""Per-object depth bounds accumulated from body occlusion evidence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry.mesh import TriMesh
from ..raster.camera import PinholeCamera
from ..raster.render import render_depth


@dataclass(frozen=True, eq=False)
class DepthRangeMaps:
    """Stacked (N, H, W) bounds; ``near`` is -inf and ``far`` +inf where unconstrained."""

    near: np.ndarray
    far: np.ndarray

    def __post_init__(self):
        near = np.asarray(self.near, dtype=np.float64)
        far = np.asarray(self.far, dtype=np.float64)
        if near.shape != far.shape or near.ndim != 3:
            raise ValueError("near and far maps must share an (N, H, W) shape")
        object.__setattr__(self, "near", near)
        object.__setattr__(self, "far", far)

    @classmethod
    def empty(cls, n_objects: int, shape) -> "DepthRangeMaps":
        return cls(np.full((n_objects, *shape), -np.inf), np.full((n_objects, *shape), np.inf))

    @property
    def n_objects(self) -> int:
        return self.near.shape[0]


def frame_depth_ranges(cam: PinholeCamera, body: TriMesh, person_mask, object_masks) -> DepthRangeMaps:
    """Depth bounds one frame puts on each object.

    Where the visible person overlaps object i, the object must lie behind the
    body's back surface (near bound). Where the rendered body overlaps object i
    but the person is hidden, the object must lie in front of the body (far bound).
    ``body`` is in camera coordinates.
    """
    masks = np.asarray(object_masks).astype(bool)
    if masks.ndim == 2:
        masks = masks[None]
    person = np.asarray(person_mask).astype(bool)
    if person.shape != cam.shape or masks.shape[1:] != cam.shape:
        raise ValueError(f"mask resolution does not match the camera {cam.shape}")
    front = render_depth(cam, body, "front", camera_frame=True)
    back = render_depth(cam, body, "back", camera_frame=True)
    sil = np.isfinite(front)
    frontal = sil & person
    occluded = sil & ~person
    near = np.where(masks & frontal, back, -np.inf)
    far = np.where(masks & occluded, front, np.inf)
    return DepthRangeMaps(near, far)


def accumulate_depth_ranges(per_frame) -> DepthRangeMaps:
    """Tightest bounds over frames: max of near bounds and min of far bounds."""
    per_frame = list(per_frame)
    if not per_frame:
        raise ValueError("need at least one frame of depth ranges")
    near = per_frame[0].near.copy()
    far = per_frame[0].far.copy()
    for m in per_frame[1:]:
        if m.near.shape != near.shape:
            raise ValueError("depth range maps differ in shape")
        np.maximum(near, m.near, out=near)
        np.minimum(far, m.far, out=far)
    return DepthRangeMaps(near, far)


def object_depth_penalty(depth: np.ndarray, mask, near: np.ndarray, far: np.ndarray) -> float:
    """Mean hinge violation of one object's rendered depth over its constrained pixels."""
    region = np.isfinite(depth) & np.asarray(mask, bool) & (np.isfinite(near) | np.isfinite(far))
    n = int(region.sum())
    if n == 0:
        return 0.0
    d = depth[region]
    over = np.maximum(d - far[region], 0.0)
    under = np.maximum(near[region] - d, 0.0)
    return float((over.sum() + under.sum()) / n)


def depth_order_loss(cam: PinholeCamera, posed_objects, maps: DepthRangeMaps, object_masks) -> float:
    """Sum over objects of the mean depth-range violation on Sil_i and M_i.

    ``posed_objects`` are world-frame meshes, rendered through ``cam``.
    """
    total = 0.0
    for i, mesh in enumerate(posed_objects):
        depth = render_depth(cam, mesh, "front")
        total += object_depth_penalty(depth, object_masks[i], maps.near[i], maps.far[i])
    return total
