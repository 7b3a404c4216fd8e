"""The layout objective, decomposed per object so probes only redo what they touch."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..body.robust import SIGMA_FEET, geman_mcclure
from ..geometry.boxes import OrientedBox
from ..geometry.mesh import TriMesh
from ..geometry.pose import PoseParams
from ..hsi.collision import penetration_sum
from ..hsi.contact import ContactRegions, ObjectContacts, object_contact_term
from ..hsi.depth import object_depth_penalty
from ..hsi.scene_terms import bbox_term, projected_box, scale_term
from ..raster.camera import PinholeCamera, camera_rotation
from ..raster.render import depth_from_camera_vertices, soft_from_camera_vertices
from ..sdf import SdfVolume
from .gradient import central_gradient
from .params import ParamLayout

OBJECT_TERMS = ("bbox", "occ_sil", "scale", "depth", "collision", "contact")
TERMS = OBJECT_TERMS + ("feet",)
IMAGE_TERMS = ("occ_sil", "depth")


class NonFiniteLossError(FloatingPointError):
    def __init__(self, term: str, value: float):
        self.term = term
        super().__init__(f"loss term {term!r} evaluated to {value}")


@dataclass(frozen=True, eq=False)
class ObjectData:
    """Everything the objective needs about one object, fixed during optimisation."""

    mesh: TriMesh  # canonical frame
    category: str
    regions: ContactRegions
    init_scale: np.ndarray
    detected_box: np.ndarray  # x_min, y_min, width, height in pixels
    mask: np.ndarray  # bool (H, W)
    ignore: np.ndarray  # bool (H, W), pixels excluded from the silhouette term
    near: np.ndarray
    far: np.ndarray
    contacts: ObjectContacts

    @property
    def box_center(self) -> np.ndarray:
        lo, hi = self.mesh.bounds
        return 0.5 * (lo + hi)

    @property
    def box_half(self) -> np.ndarray:
        lo, hi = self.mesh.bounds
        return np.maximum(0.5 * (hi - lo), 1e-9)


@dataclass(eq=False)
class ProblemData:
    cam: PinholeCamera  # intrinsics; orientation comes from the parameters
    objects: list
    sdf: SdfVolume | None = None
    foot_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    soft_silhouette: bool = True

    def __post_init__(self):
        self.n_vertices = sum(o.mesh.n_vertices for o in self.objects)
        self.n_contact_objects = sum(
            1 for o in self.objects if len(o.contacts.seat_points) + len(o.contacts.back_points) > 0)


@dataclass(frozen=True)
class Evaluation:
    total: float
    terms: dict  # unweighted term values
    per_object: tuple  # per-object unweighted contributions


class LayoutProblem:
    def __init__(self, data: ProblemData):
        self.data = data
        self.layout = ParamLayout(len(data.objects))

    # ---- per-object pieces -------------------------------------------------
    def object_terms(self, i: int, pose: PoseParams, pitch: float, roll: float, needed) -> dict:
        d = self.data
        o = d.objects[i]
        R = camera_rotation(pitch, roll)
        cam = d.cam.with_orientation(pitch, roll)
        out = {}
        world = (o.mesh.vertices * pose.scale) @ pose.rotation.T + pose.translation
        pc = None
        if "bbox" in needed:
            c = pose.rotation @ (pose.scale * o.box_center) + pose.translation
            box = OrientedBox(c, pose.scale * o.box_half, pose.yaw)
            out["bbox"] = bbox_term(projected_box(cam, box), o.detected_box, d.cam.width)
        if "scale" in needed:
            out["scale"] = scale_term(pose.scale, o.init_scale)
        if any(t in needed for t in IMAGE_TERMS + ("collision",)):
            pc = world @ R.T
        if any(t in needed for t in IMAGE_TERMS):
            depth = depth_from_camera_vertices(cam, pc, o.mesh.faces, "front")
            if "occ_sil" in needed:
                if d.soft_silhouette:
                    sil = soft_from_camera_vertices(cam, pc, o.mesh.faces, o.mesh.edge_faces, depth)
                else:
                    sil = np.isfinite(depth).astype(np.float64)
                valid = ~o.ignore
                n = int(valid.sum())
                diff = (sil - o.mask)[valid]
                out["occ_sil"] = float(np.dot(diff, diff) / n) if n else 0.0
            if "depth" in needed:
                out["depth"] = object_depth_penalty(depth, o.mask, o.near, o.far)
        if "collision" in needed:
            out["collision"] = (penetration_sum(pc, d.sdf) / d.n_vertices) if d.sdf is not None else 0.0
        if "contact" in needed:
            v = object_contact_term(o.contacts, world, o.regions, R)
            out["contact"] = 0.0 if v is None else v / d.n_contact_objects
        return out

    def feet_term(self, pitch: float, roll: float, y_gp: float) -> float:
        pts = self.data.foot_points
        if len(pts) == 0:
            raise ValueError("the feet term needs foot-contact vertices")
        h = (pts @ camera_rotation(pitch, roll))[:, 1] - y_gp
        return geman_mcclure(h, SIGMA_FEET) / len(pts)

    # ---- assembly ---------------------------------------------------------
    def _needed(self, weights: dict) -> set:
        return {t for t, w in weights.items() if w != 0}

    def _all_object_terms(self, x, needed):
        L = self.layout
        pitch, roll = x[L.pitch], x[L.roll]
        obj_needed = needed & set(OBJECT_TERMS)
        if not obj_needed:
            return [{} for _ in range(L.n_objects)]
        return [self.object_terms(i, L.pose(x, i), pitch, roll, obj_needed) for i in range(L.n_objects)]

    def _assemble(self, per_object, feet, weights) -> Evaluation:
        terms = {}
        for t in OBJECT_TERMS:
            if t in weights and weights[t] != 0:
                s = 0.0
                for po in per_object:
                    s += po[t]
                terms[t] = s
        if feet is not None:
            terms["feet"] = feet
        total = 0.0
        for t in TERMS:
            if t in terms:
                v = terms[t]
                if not np.isfinite(v):
                    raise NonFiniteLossError(t, v)
                total += weights[t] * v
        return Evaluation(total, terms, tuple(per_object))

    def evaluate(self, x, weights: dict) -> Evaluation:
        x = np.asarray(x, dtype=np.float64)
        needed = self._needed(weights)
        unknown = needed - set(TERMS)
        if unknown:
            raise ValueError(f"unknown loss terms {sorted(unknown)}")
        per_object = self._all_object_terms(x, needed)
        L = self.layout
        feet = self.feet_term(x[L.pitch], x[L.roll], x[L.y_gp]) if "feet" in needed else None
        return self._assemble(per_object, feet, weights)

    def total_loss(self, x, weights: dict) -> float:
        return self.evaluate(x, weights).total

    def gradient(self, x, weights: dict, mask=None, steps=None, base: Evaluation | None = None,
                 threads: int | None = None) -> np.ndarray:
        """Central-difference gradient over the unmasked coordinates.

        Probing object i's parameters recomputes only object i's terms; the
        remaining contributions are taken from ``base``.
        """
        x = np.asarray(x, dtype=np.float64)
        L = self.layout
        needed = self._needed(weights)
        base = base or self.evaluate(x, weights)
        steps = L.fd_steps() if steps is None else steps
        idx = np.flatnonzero(np.ones(L.dim, bool) if mask is None else mask)
        obj_needed = needed & set(OBJECT_TERMS)

        def probe(xs, k):
            i = L.owner(k)
            try:
                if i < 0:
                    return self.evaluate(xs, weights).total
                per_object = list(base.per_object)
                per_object[i] = self.object_terms(i, L.pose(xs, i), xs[L.pitch], xs[L.roll], obj_needed)
                return self._assemble(per_object, base.terms.get("feet"), weights).total
            except NonFiniteLossError:
                return np.nan

        return central_gradient(probe, x, steps, idx, threads)
