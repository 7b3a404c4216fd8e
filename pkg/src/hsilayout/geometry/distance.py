"""Point-to-mesh and point-set distances."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .mesh import TriMesh

AXIS_FILTERS = {"all": [0, 1, 2], "y-only": [1], "xz-only": [0, 2]}


def point_to_surface(points, mesh: TriMesh, reduce: bool = True):
    """Exact distance from each point to the closest triangle of ``mesh``.

    Returns the mean by default, or the per-point distances with ``reduce=False``.
    """
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(p) == 0:
        raise ValueError("point_to_surface needs at least one query point")
    if mesh.n_faces == 0:
        raise ValueError("point_to_surface needs a mesh with faces")
    d = mesh.bvh.distance(p)
    return float(d.mean()) if reduce else d


def nearest_distances(src, dst, axis_filter: str = "all") -> np.ndarray:
    try:
        cols = AXIS_FILTERS[axis_filter]
    except KeyError:
        raise ValueError(f"unknown axis filter {axis_filter!r}") from None
    a = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("chamfer distance needs non-empty point sets")
    if len(cols) == 1:
        return _nearest_1d(a[:, cols[0]], b[:, cols[0]])
    d, _ = cKDTree(b[:, cols]).query(a[:, cols])
    return d


def _nearest_1d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    s = np.sort(b)
    k = np.clip(np.searchsorted(s, a), 1, len(s) - 1) if len(s) > 1 else np.zeros(len(a), dtype=np.int64)
    lo = np.abs(a - s[k - 1]) if len(s) > 1 else np.abs(a - s[0])
    return np.minimum(lo, np.abs(a - s[k]))


def one_sided_chamfer(src, dst, axis_filter: str = "all") -> float:
    """Mean Euclidean nearest-neighbour distance from ``src`` into ``dst``.

    ``axis_filter`` restricts both the search and the distance to the chosen
    coordinates, so ``"y-only"`` measures pure vertical gaps.
    """
    return float(nearest_distances(src, dst, axis_filter).mean())
