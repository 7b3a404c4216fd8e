"""Layout and interaction metrics over an (estimate, bodies, ground truth) triple."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from typing import ClassVar, Optional

import numpy as np
from pydantic import BaseModel, Field

from .geometry.boxes import OrientedBox, box_from_mesh, iou2d, oriented_iou3d
from .geometry.mesh import TriMesh
from .geometry.pose import apply_pose
from .geometry.winding import crossing_winding
from .hsi.scene_terms import projected_box
from .raster.camera import PinholeCamera

REPORT_SCHEMA_VERSION = 1
PROXIMITY_RADIUS = 0.02

__all__ = [
    "REPORT_SCHEMA_VERSION", "ObjectReport", "SceneReport", "SceneEstimate", "iou2d", "iou3d",
    "inside_any", "non_collision_score", "contact_score", "proximity_contact_score", "ground_penetration",
    "camera_orientation_error", "point_to_surface_error", "match_objects", "evaluate",
]


def iou3d(a: OrientedBox, b: OrientedBox) -> float:
    return oriented_iou3d(a, b)


class _Memo:
    """Reuses per-body results for bodies that appear in several identical frames."""

    def __init__(self):
        self.cache = {}

    def __call__(self, verts: np.ndarray, fn):
        key = hashlib.sha1(np.ascontiguousarray(verts).tobytes()).hexdigest()
        if key not in self.cache:
            self.cache[key] = fn(verts)
        return self.cache[key]


def inside_any(points: np.ndarray, objects) -> np.ndarray:
    """True where a point lies inside any posed object (positive winding number).

    The winding number is the exact signed ray-crossing count, which equals the
    solid-angle winding number for the closed meshes objects are required to be.
    """
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    out = np.zeros(len(p), dtype=bool)
    for mesh in objects:
        lo, hi = mesh.bounds
        cand = np.flatnonzero(~out & np.all((p >= lo) & (p <= hi), axis=1))
        if len(cand):
            out[cand] = crossing_winding(p[cand], mesh) > 0
    return out


def non_collision_score(bodies, objects) -> float:
    """Mean over bodies of the fraction of vertices outside every object; 1.0 with no bodies."""
    bodies = list(bodies)
    if not bodies:
        return 1.0
    memo = _Memo()
    return float(np.mean([memo(b, lambda v: 1.0 - inside_any(v, objects).mean()) for b in bodies]))


def contact_score(bodies, objects) -> float:
    """Fraction of bodies with at least one vertex inside the scene (literal penetration indicator)."""
    bodies = list(bodies)
    if not bodies:
        return 0.0
    memo = _Memo()
    return float(np.mean([memo(b, lambda v: float(inside_any(v, objects).any())) for b in bodies]))


def proximity_contact_score(bodies, objects, radius: float = PROXIMITY_RADIUS) -> float:
    """Fraction of bodies with a vertex inside or within ``radius`` of an object surface.

    Not the literal definition; reported next to it as a proximity variant.
    """
    bodies = list(bodies)
    if not bodies:
        return 0.0

    def touches(v):
        if inside_any(v, objects).any():
            return 1.0
        for mesh in objects:
            if np.isfinite(mesh.bvh.closest(v, radius)[0]).any():
                return 1.0
        return 0.0

    memo = _Memo()
    return float(np.mean([memo(b, touches) for b in bodies]))


def ground_penetration(points, y_gp: float, R: np.ndarray, threshold: float = 0.0) -> tuple[float, float]:
    """(frequency, mean depth) of foot-contact vertices below the ground plane.

    ``points`` are camera-frame vertices; heights are taken in the world frame.
    """
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(p) == 0:
        raise ValueError("ground penetration needs foot-contact vertices")
    h = (p @ np.asarray(R))[:, 1] - y_gp
    pen = h < -threshold
    freq = float(pen.mean())
    dist = float(np.abs(h[pen]).mean()) if pen.any() else 0.0
    return freq, dist


def camera_orientation_error(est, gt) -> tuple[float, float, float]:
    dp = abs(float(est[0]) - float(gt[0]))
    dr = abs(float(est[1]) - float(gt[1]))
    return dp, dr, 0.5 * (dp + dr)


def point_to_surface_error(gt_mesh: TriMesh, est_mesh: TriMesh) -> float:
    """Mean distance from ground-truth vertices to the estimated surface."""
    return float(est_mesh.bvh.distance(gt_mesh.vertices).mean())


def match_objects(est_categories, est_boxes, gt_categories, gt_boxes) -> list[tuple[int, int]]:
    """Same-category pairs chosen greedily by decreasing 3D IoU; ties go to lower indices."""
    pairs = []
    for i, (ce, be) in enumerate(zip(est_categories, est_boxes)):
        for j, (cg, bg) in enumerate(zip(gt_categories, gt_boxes)):
            if ce == cg:
                pairs.append((-iou3d(be, bg), j, i))
    pairs.sort()
    used_e, used_g, out = set(), set(), []
    for _, j, i in pairs:
        if i in used_e or j in used_g:
            continue
        used_e.add(i)
        used_g.add(j)
        out.append((i, j))
    return sorted(out, key=lambda ij: ij[1])


class ObjectReport(BaseModel):
    gt_id: str
    category: str
    matched: Optional[str] = None  # estimated object id
    iou3d: float = Field(ge=0, le=1)
    iou2d: float = Field(ge=0, le=1)
    p2s: Optional[float] = Field(default=None, ge=0)
    flags: list[str] = Field(default_factory=list)


class SceneReport(BaseModel):
    schema_version: int = REPORT_SCHEMA_VERSION
    ground_truth_available: bool
    objects: list[ObjectReport] = Field(default_factory=list)
    mean_iou3d: Optional[float] = None
    mean_iou2d: Optional[float] = None
    mean_p2s: Optional[float] = None
    non_collision: float = Field(ge=0, le=1)
    contact: float = Field(ge=0, le=1)
    contact_proximity: float = Field(ge=0, le=1)  # proximity variant, not the literal indicator
    ground_penetration_frequency: Optional[float] = None
    ground_penetration_distance: Optional[float] = None
    pitch_error: Optional[float] = None
    roll_error: Optional[float] = None
    orientation_error: Optional[float] = None
    flags: list[str] = Field(default_factory=list)
    metadata: dict = Field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2, sort_keys=True) + "\n"

    CSV_FIELDS: ClassVar[tuple] = ("schema_version", "ground_truth_available", "mean_iou3d", "mean_iou2d", "mean_p2s",
                  "non_collision", "contact", "contact_proximity", "ground_penetration_frequency",
                  "ground_penetration_distance", "pitch_error", "roll_error", "orientation_error")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        row = []
        for k in self.CSV_FIELDS:
            v = getattr(self, k)
            row.append("" if v is None else (repr(v) if isinstance(v, float) else v))
        w.writerow(row)
        return buf.getvalue()


@dataclass(eq=False)
class SceneEstimate:
    """An estimated layout: canonical meshes with poses, plus the camera and ground."""

    ids: list
    categories: list
    meshes: list
    poses: list
    cam: PinholeCamera
    y_gp: float

    def posed(self) -> list:
        return [apply_pose(m, p) for m, p in zip(self.meshes, self.poses)]

    def boxes(self) -> list:
        return [box_from_mesh(m, p) for m, p in zip(self.meshes, self.poses)]


def evaluate(estimate: SceneEstimate, bodies=(), foot_points=None, gt: SceneEstimate | None = None,
             ground_threshold: float = 0.0) -> SceneReport:
    """Score an estimate.

    ``bodies`` are world-frame vertex arrays and ``foot_points`` camera-frame
    foot-contact vertices. Layout and camera metrics need ``gt``; without it
    those fields stay ``None`` and the report says so.
    """
    posed = estimate.posed()
    bodies = [np.asarray(b, dtype=np.float64) for b in bodies]
    flags = []
    fields = {
        "non_collision": non_collision_score(bodies, posed),
        "contact": contact_score(bodies, posed),
        "contact_proximity": proximity_contact_score(bodies, posed),
    }
    if foot_points is not None and len(foot_points):
        freq, dist = ground_penetration(foot_points, estimate.y_gp, estimate.cam.rotation, ground_threshold)
        fields["ground_penetration_frequency"] = freq
        fields["ground_penetration_distance"] = dist
    else:
        flags.append("no foot contacts: ground penetration unavailable")
    fields["metadata"] = {
        "p2s_queries": "ground-truth mesh vertices",
        "p2s_direction": "ground truth to estimate",
        "contact": "literal penetration indicator",
        "contact_proximity": "supplementary: any body vertex within the radius of an object surface",
        "contact_proximity_radius_m": PROXIMITY_RADIUS,
        "ground_threshold_m": ground_threshold,
        "inside_test": "exact winding number on posed meshes",
    }
    if gt is None:
        flags.append("no ground truth: layout and camera metrics unavailable")
        return SceneReport(ground_truth_available=False, flags=flags, **fields)

    dp, dr, dm = camera_orientation_error((estimate.cam.pitch, estimate.cam.roll), (gt.cam.pitch, gt.cam.roll))
    est_boxes, gt_boxes = estimate.boxes(), gt.boxes()
    gt_posed = gt.posed()
    pairs = dict((j, i) for i, j in match_objects(estimate.categories, est_boxes, gt.categories, gt_boxes))
    reports = []
    for j in range(len(gt_boxes)):
        if j not in pairs:
            reports.append(ObjectReport(gt_id=gt.ids[j], category=gt.categories[j], iou3d=0.0, iou2d=0.0,
                                        flags=["unmatched: no estimated object of this category"]))
            continue
        i = pairs[j]
        b_est = projected_box(estimate.cam, est_boxes[i])
        b_gt = projected_box(gt.cam, gt_boxes[j])
        reports.append(ObjectReport(
            gt_id=gt.ids[j], category=gt.categories[j], matched=estimate.ids[i],
            iou3d=iou3d(est_boxes[i], gt_boxes[j]), iou2d=iou2d(b_est, b_gt),
            p2s=point_to_surface_error(gt_posed[j], posed[i])))
    if len(estimate.ids) > len(pairs):
        flags.append(f"{len(estimate.ids) - len(pairs)} estimated objects unmatched")
    p2s = [r.p2s for r in reports if r.p2s is not None]
    return SceneReport(
        ground_truth_available=True, objects=reports,
        mean_iou3d=float(np.mean([r.iou3d for r in reports])) if reports else 0.0,
        mean_iou2d=float(np.mean([r.iou2d for r in reports])) if reports else 0.0,
        mean_p2s=float(np.mean(p2s)) if p2s else None,
        pitch_error=dp, roll_error=dr, orientation_error=dm, flags=flags, **fields)
