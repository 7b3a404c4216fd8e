from __future__ import annotations

import numpy as np

from ..sdf import SdfVolume, sample


def penetration_sum(points, sdf: SdfVolume) -> float:
    """Sum of squared negative SDF values at ``points`` (given in the SDF frame)."""
    v = sample(sdf, points, smooth=True)
    neg = np.minimum(v, 0.0)
    return float(np.dot(neg, neg))


def collision_loss(object_points, sdf: SdfVolume) -> float:
    """Squared body penetration over all object vertices, divided by the vertex count.

    ``object_points`` is a list of (V_i, 3) arrays already expressed in the
    frame the SDF was built in.
    """
    pts = [np.asarray(p, dtype=np.float64).reshape(-1, 3) for p in object_points]
    n = sum(len(p) for p in pts)
    if n == 0:
        return 0.0
    return sum(penetration_sum(p, sdf) for p in pts) / n
