"""Yaw-only oriented boxes and axis-aligned image rectangles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriMesh
from .pose import PoseParams, rotation_y


@dataclass(frozen=True)
class OrientedBox:
    center: np.ndarray
    half_extents: np.ndarray
    yaw: float = 0.0

    def __post_init__(self):
        c = np.array(self.center, dtype=np.float64).reshape(3)
        h = np.array(self.half_extents, dtype=np.float64).reshape(3)
        if np.any(h <= 0):
            raise ValueError("half extents must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_extents", h)
        object.__setattr__(self, "yaw", float(self.yaw))

    @property
    def volume(self) -> float:
        return float(8.0 * np.prod(self.half_extents))

    def corners(self) -> np.ndarray:
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], float)
        return (signs * self.half_extents) @ rotation_y(self.yaw).T + self.center

    def footprint(self) -> np.ndarray:
        """Counter-clockwise (x, z) polygon of the box seen from above."""
        hx, hz = self.half_extents[0], self.half_extents[2]
        local = np.array([[-hx, 0, -hz], [-hx, 0, hz], [hx, 0, hz], [hx, 0, -hz]])
        world = local @ rotation_y(self.yaw).T + self.center
        return _ccw(world[:, [0, 2]])

    def y_interval(self) -> tuple[float, float]:
        return self.center[1] - self.half_extents[1], self.center[1] + self.half_extents[1]

    def contains(self, points: np.ndarray) -> np.ndarray:
        local = (np.asarray(points, float) - self.center) @ rotation_y(self.yaw)
        return np.all(np.abs(local) <= self.half_extents, axis=-1)


def box_from_mesh(mesh: TriMesh, pose: PoseParams | None = None) -> OrientedBox:
    """Oriented box of a canonical-frame mesh placed with ``pose``."""
    lo, hi = mesh.bounds
    c0 = 0.5 * (lo + hi)
    h0 = np.maximum(0.5 * (hi - lo), 1e-9)
    if pose is None:
        return OrientedBox(c0, h0, 0.0)
    center = pose.rotation @ (pose.scale * c0) + pose.translation
    return OrientedBox(center, pose.scale * h0, pose.yaw)


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _ccw(poly: np.ndarray) -> np.ndarray:
    return poly if _signed_area(poly) >= 0 else poly[::-1].copy()


def clip_convex(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman intersection of two counter-clockwise convex polygons."""
    out = [p for p in subject]
    n = len(clipper)
    for i in range(n):
        if not out:
            break
        a, b = clipper[i], clipper[(i + 1) % n]
        edge = b - a
        inp, out = out, []

        def side(p):
            return edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0])

        for j in range(len(inp)):
            p, q = inp[j], inp[(j + 1) % len(inp)]
            sp, sq = side(p), side(q)
            if sp >= 0:
                out.append(p)
            if (sp >= 0) != (sq >= 0):
                t = sp / (sp - sq)
                out.append(p + t * (q - p))
    return np.array(out).reshape(-1, 2)


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    return abs(_signed_area(poly))


def oriented_iou3d(a: OrientedBox, b: OrientedBox) -> float:
    ya0, ya1 = a.y_interval()
    yb0, yb1 = b.y_interval()
    dy = min(ya1, yb1) - max(ya0, yb0)
    if dy <= 0:
        return 0.0
    area = polygon_area(clip_convex(a.footprint(), b.footprint()))
    inter = area * dy
    union = a.volume + b.volume - inter
    if inter <= 0 or union <= 0:
        return 0.0
    return float(min(1.0, inter / union))


def iou2d(a, b) -> float:
    """IoU of axis-aligned rectangles given as (x_min, y_min, width, height)."""
    ax0, ay0, aw, ah = map(float, a[:4])
    bx0, by0, bw, bh = map(float, b[:4])
    iw = min(ax0 + aw, bx0 + bw) - max(ax0, bx0)
    ih = min(ay0 + ah, by0 + bh) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    return float(inter / union) if union > 0 else 0.0
