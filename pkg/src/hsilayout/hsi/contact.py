"""Object contact regions, body-to-object contact assignment and the contact term."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation

from ..geometry.distance import nearest_distances
from ..geometry.mesh import TriMesh
from ..raster.camera import PinholeCamera

CATEGORIES = ("chair", "sofa", "bed", "table")
SEATED = ("chair", "sofa")
# body vertices whose normal is within 45 degrees of vertical press on a seat or top
VERTICAL_NORMAL_COS = np.cos(np.deg2rad(45.0))


@dataclass(frozen=True)
class ContactParams:
    angle_deg: float = 30.0
    seat_height: float = 0.6  # seat vertices lie below this fraction of object height
    back_height: float = 0.5  # back vertices lie at or above this fraction
    radius: float = 0.5  # metres, body vertex to object box
    dilation: int = 5  # pixels


@dataclass(frozen=True, eq=False)
class ContactRegions:
    seat: np.ndarray
    back: np.ndarray

    def __post_init__(self):
        for name in ("seat", "back"):
            a = np.array(getattr(self, name), dtype=np.int64).reshape(-1)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if np.intersect1d(self.seat, self.back).size:
            raise ValueError("seat and back regions must be disjoint")


def extract_contact_regions(mesh: TriMesh, category: str, params: ContactParams = ContactParams()) -> ContactRegions:
    """Vertices a body may rest on, chosen from canonical-frame vertex normals.

    Canonical objects stand on +y and face +z, so a chair's backrest surface
    has +z normals. Seats and tops face +y.
    """
    if category not in CATEGORIES:
        raise ValueError(f"unknown object category {category!r}; expected one of {CATEGORIES}")
    n = mesh.vertex_normals
    cos = np.cos(np.deg2rad(params.angle_deg))
    lo, hi = mesh.bounds
    rel = (mesh.vertices[:, 1] - lo[1]) / max(hi[1] - lo[1], 1e-12)
    up = n[:, 1] >= cos
    if category in SEATED:
        seat = np.flatnonzero(up & (rel < params.seat_height))
        back = np.flatnonzero((n[:, 2] >= cos) & (rel >= params.back_height))
    else:
        seat = np.flatnonzero(up)
        back = np.zeros(0, dtype=np.int64)
    return ContactRegions(seat, back)


def disk(radius: int) -> np.ndarray:
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return (xx * xx + yy * yy) <= r * r


def dilate_masks(masks, radius: int) -> np.ndarray:
    masks = np.asarray(masks).astype(bool)
    if radius <= 0:
        return masks.copy()
    se = disk(radius)
    return np.stack([binary_dilation(m, structure=se) for m in masks])


def _aabb_distance(points: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    gap = np.maximum(np.maximum(lo - points, points - hi), 0.0)
    return np.linalg.norm(gap, axis=1)


@dataclass(frozen=True, eq=False)
class ContactAssignment:
    """For each frame, the object index of every body-contact vertex (-1 when unassigned)."""

    per_frame: tuple

    def counts(self, n_objects: int) -> np.ndarray:
        c = np.zeros(n_objects, dtype=np.int64)
        for a in self.per_frame:
            a = a[a >= 0]
            c += np.bincount(a, minlength=n_objects)[:n_objects]
        return c


def assign_contacts(frames, cam: PinholeCamera, object_masks, posed_objects,
                    params: ContactParams = ContactParams()) -> ContactAssignment:
    """Assign labelled body-contact vertices to objects.

    A vertex is a candidate for object i when it projects into M_i dilated by
    ``params.dilation`` pixels and lies within ``params.radius`` of the posed
    object's bounding box. Among candidates the object with the closest surface wins.
    Bodies are in camera coordinates; ``posed_objects`` are world-frame meshes.
    """
    dil = dilate_masks(object_masks, params.dilation)
    boxes = [m.bounds for m in posed_objects]
    H, W = cam.shape
    out = []
    for f in frames:
        pc = f.mesh.vertices[f.body_contacts]
        res = np.full(len(pc), -1, dtype=np.int64)
        if len(pc) == 0 or not posed_objects:
            out.append(res)
            continue
        uv, _, ok = cam.project_camera(pc)
        col = np.floor(np.nan_to_num(uv[:, 0], nan=-1)).astype(np.int64)
        row = np.floor(np.nan_to_num(uv[:, 1], nan=-1)).astype(np.int64)
        ok &= (col >= 0) & (col < W) & (row >= 0) & (row < H)
        pw = cam.camera_to_world(pc)
        best = np.full(len(pc), np.inf)
        for i, mesh in enumerate(posed_objects):
            cand = ok.copy()
            cand[ok] = dil[i][row[ok], col[ok]]
            cand &= _aabb_distance(pw, boxes[i][0], boxes[i][1]) < params.radius
            if not cand.any():
                continue
            d = np.full(len(pc), np.inf)
            d[cand] = mesh.bvh.distance(pw[cand])
            win = d < best
            best[win] = d[win]
            res[win] = i
        out.append(res)
    return ContactAssignment(tuple(out))


@dataclass(frozen=True, eq=False)
class ObjectContacts:
    """Assigned body vertices of one object, split by which region they press on."""

    seat_points: np.ndarray  # camera coordinates
    back_points: np.ndarray


def split_contacts(assignment: ContactAssignment, frames, cam: PinholeCamera, n_objects: int,
                   regions=None) -> list[ObjectContacts]:
    """Group assigned vertices per object and route each to the seat or back term.

    A vertex whose world-frame normal is within 45 degrees of vertical goes to the
    seat term; the rest go to the back term. Objects without a back region take
    every vertex in the seat term.
    """
    R = cam.rotation
    seat = [[] for _ in range(n_objects)]
    back = [[] for _ in range(n_objects)]
    for f, a in zip(frames, assignment.per_frame):
        if not np.any(a >= 0):
            continue
        idx = f.body_contacts
        pc = f.mesh.vertices[idx]
        nw = f.mesh.vertex_normals[idx] @ R
        vertical = np.abs(nw[:, 1]) >= VERTICAL_NORMAL_COS
        for i in np.unique(a[a >= 0]):
            sel = a == i
            has_back = regions is None or len(regions[i].back) > 0
            s = sel & (vertical | (not has_back))
            seat[i].append(pc[s])
            back[i].append(pc[sel & ~s])
    stack = lambda lst: np.concatenate(lst) if lst else np.zeros((0, 3))  # noqa: E731
    return [ObjectContacts(stack(seat[i]), stack(back[i])) for i in range(n_objects)]


def object_contact_term(contacts: ObjectContacts, posed_vertices: np.ndarray, regions: ContactRegions,
                        R: np.ndarray) -> float | None:
    """Seat (y-only) plus back (xz-only) one-sided Chamfer for one object; None if unassigned."""
    ns, nb = len(contacts.seat_points), len(contacts.back_points)
    if ns + nb == 0:
        return None
    total = 0.0
    if ns and len(regions.seat):
        total += float(nearest_distances(contacts.seat_points @ R, posed_vertices[regions.seat], "y-only").mean())
    if nb and len(regions.back):
        total += float(nearest_distances(contacts.back_points @ R, posed_vertices[regions.back], "xz-only").mean())
    return total


def contact_loss(per_object: list[ObjectContacts], posed_objects, regions, cam: PinholeCamera) -> float:
    """Mean over objects that received contacts of their Chamfer terms."""
    R = cam.rotation
    vals = []
    for c, mesh, reg in zip(per_object, posed_objects, regions):
        v = object_contact_term(c, mesh.vertices, reg, R)
        if v is not None:
            vals.append(v)
    return float(np.mean(vals)) if vals else 0.0
