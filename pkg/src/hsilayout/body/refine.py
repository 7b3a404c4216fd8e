"""Per-frame rigid translation of a body against the final scene."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..geometry.mesh import TriMesh
from ..sdf import GridSpec, SdfVolume, build_body_sdf, sample

MAX_SHIFT = 0.3
OBJECT_SDF_RESOLUTION = 64
OBJECT_SDF_PADDING = 0.3


@dataclass(frozen=True)
class RefineWeights:
    penetration: float = 1e3
    contact: float = 1e3
    shift: float = 1.0


def object_sdfs(posed_objects, resolution: int = OBJECT_SDF_RESOLUTION,
                padding: float = OBJECT_SDF_PADDING, threads: int | None = None) -> list[SdfVolume]:
    """A signed distance volume around each posed (world-frame) object."""
    out = []
    for mesh in posed_objects:
        lo, hi = mesh.bounds
        lo, hi = lo - padding, hi + padding
        voxel = float((hi - lo).max()) / (resolution - 1)
        shape = tuple(int(n) for n in np.ceil((hi - lo) / voxel - 1e-9).astype(int) + 1)
        out.append(build_body_sdf(mesh, GridSpec(tuple(lo), voxel, shape), threads))
    return out


def _energy(delta, verts, contact_verts, contact_obj, sdfs, w: RefineWeights) -> float:
    p = verts + delta
    phi = np.full(len(p), np.inf)
    for s in sdfs:
        phi = np.minimum(phi, sample(s, p))
    e = w.penetration * float(np.mean(np.minimum(phi, 0.0) ** 2)) if len(p) else 0.0
    if len(contact_verts):
        q = contact_verts + delta
        c = np.empty(len(q))
        for i, s in enumerate(sdfs):
            sel = contact_obj == i
            if sel.any():
                c[sel] = sample(s, q[sel])
        e += w.contact * float(np.mean(c ** 2))
    return e + w.shift * float(delta @ delta)


def refine_body_placement(body: TriMesh, contact_idx, contact_obj, sdfs, max_shift: float = MAX_SHIFT,
                          weights: RefineWeights = RefineWeights()) -> np.ndarray:
    """Translation that reduces penetration and closes assigned contacts.

    ``body`` is in the same (world) frame as ``sdfs``; ``contact_obj[k]`` names
    the object that contact vertex ``contact_idx[k]`` was assigned to (-1 skips it).
    Each coordinate of the returned translation is bounded by ``max_shift``.
    """
    verts = body.vertices
    idx = np.asarray(contact_idx, dtype=np.int64)
    obj = np.asarray(contact_obj, dtype=np.int64)
    keep = obj >= 0
    cverts, cobj = verts[idx[keep]], obj[keep]
    if not sdfs:
        return np.zeros(3)

    def f(d):
        return _energy(d, verts, cverts, cobj, sdfs, weights)

    def grad(d, h=1e-4):
        g = np.empty(3)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            g[k] = (f(d + e) - f(d - e)) / (2 * h)
        return g

    x0 = np.zeros(3)
    if not np.any(grad(x0)):
        return x0
    res = minimize(f, x0, jac=grad, method="L-BFGS-B", bounds=[(-max_shift, max_shift)] * 3,
                   options={"maxiter": 50})
    # never accept a worse placement than doing nothing
    return res.x if res.fun <= f(x0) else x0
