"""Z-buffer rasterization of depth and silhouettes, plus a soft silhouette."""

from __future__ import annotations

import numba as nb
import numpy as np

from ..geometry.mesh import TriMesh
from .camera import NEAR_EPS, PinholeCamera

SOFT_TAU = 1.0  # pixels
SOFT_BAND = 8.0  # beyond this distance from a contour the soft value equals the hard one


@nb.njit(cache=True, nogil=True, inline="always")
def _owns_edge(dx, dy):
    # half-open fill rule: of the two opposite traversals of a shared edge exactly one owns it
    return dy > 0.0 or (dy == 0.0 and dx > 0.0)


@nb.njit(cache=True, nogil=True)
def _rasterize(uv, z, faces, height, width, back):
    out = np.full((height, width), -np.inf if back else np.inf)
    for f in range(faces.shape[0]):
        ia, ib, ic = faces[f, 0], faces[f, 1], faces[f, 2]
        if z[ia] <= NEAR_EPS or z[ib] <= NEAR_EPS or z[ic] <= NEAR_EPS:
            continue
        ax, ay = uv[ia, 0], uv[ia, 1]
        bx, by = uv[ib, 0], uv[ib, 1]
        cx, cy = uv[ic, 0], uv[ic, 1]
        za, zb, zc = z[ia], z[ib], z[ic]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0:
            continue
        if area < 0.0:
            bx, by, cx, cy = cx, cy, bx, by
            zb, zc = zc, zb
            area = -area
        j0 = max(0, int(np.ceil(min(ax, bx, cx) - 0.5)))
        j1 = min(width - 1, int(np.floor(max(ax, bx, cx) - 0.5)))
        i0 = max(0, int(np.ceil(min(ay, by, cy) - 0.5)))
        i1 = min(height - 1, int(np.floor(max(ay, by, cy) - 0.5)))
        own0 = _owns_edge(cx - bx, cy - by)
        own1 = _owns_edge(ax - cx, ay - cy)
        own2 = _owns_edge(bx - ax, by - ay)
        for i in range(i0, i1 + 1):
            py = i + 0.5
            for j in range(j0, j1 + 1):
                px = j + 0.5
                w0 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
                if w0 < 0.0 or (w0 == 0.0 and not own0):
                    continue
                w1 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
                if w1 < 0.0 or (w1 == 0.0 and not own1):
                    continue
                w2 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
                if w2 < 0.0 or (w2 == 0.0 and not own2):
                    continue
                inv = (w0 / za + w1 / zb + w2 / zc) / area
                d = 1.0 / inv
                if back:
                    if d > out[i, j]:
                        out[i, j] = d
                elif d < out[i, j]:
                    out[i, j] = d
    if back:
        for i in range(height):
            for j in range(width):
                if out[i, j] == -np.inf:
                    out[i, j] = np.inf
    return out


@nb.njit(cache=True, nogil=True)
def _contour_distance(uv, z, faces, edges, height, width, band):
    n_faces = faces.shape[0]
    facing = np.zeros(n_faces, dtype=np.int8)
    for f in range(n_faces):
        ia, ib, ic = faces[f, 0], faces[f, 1], faces[f, 2]
        if z[ia] <= NEAR_EPS or z[ib] <= NEAR_EPS or z[ic] <= NEAR_EPS:
            facing[f] = 2
            continue
        area = ((uv[ib, 0] - uv[ia, 0]) * (uv[ic, 1] - uv[ia, 1])
                - (uv[ib, 1] - uv[ia, 1]) * (uv[ic, 0] - uv[ia, 0]))
        facing[f] = 1 if area > 0.0 else 0
    dist = np.full((height, width), np.inf)
    for e in range(edges.shape[0]):
        fa, fb = edges[e, 2], edges[e, 3]
        if facing[fa] == 2 or (fb >= 0 and facing[fb] == 2):
            continue
        if fb >= 0 and facing[fa] == facing[fb]:
            continue
        x0, y0 = uv[edges[e, 0], 0], uv[edges[e, 0], 1]
        x1, y1 = uv[edges[e, 1], 0], uv[edges[e, 1], 1]
        dx, dy = x1 - x0, y1 - y0
        ll = dx * dx + dy * dy
        j0 = max(0, int(np.floor(min(x0, x1) - band)))
        j1 = min(width - 1, int(np.ceil(max(x0, x1) + band)))
        i0 = max(0, int(np.floor(min(y0, y1) - band)))
        i1 = min(height - 1, int(np.ceil(max(y0, y1) + band)))
        for i in range(i0, i1 + 1):
            py = i + 0.5
            for j in range(j0, j1 + 1):
                px = j + 0.5
                t = 0.0
                if ll > 0.0:
                    t = ((px - x0) * dx + (py - y0) * dy) / ll
                    t = min(1.0, max(0.0, t))
                qx = x0 + t * dx - px
                qy = y0 + t * dy - py
                d = np.sqrt(qx * qx + qy * qy)
                if d < dist[i, j]:
                    dist[i, j] = d
    return dist


def _screen(cam: PinholeCamera, pc: np.ndarray):
    uv, z, _ = cam.project_camera(pc)
    uv = np.nan_to_num(uv, nan=0.0)
    return np.ascontiguousarray(uv), np.ascontiguousarray(z)


def depth_from_camera_vertices(cam: PinholeCamera, pc: np.ndarray, faces: np.ndarray, side: str = "front") -> np.ndarray:
    """Depth raster of camera-frame vertices; the building block behind ``render_depth``."""
    if len(faces) == 0:
        return np.full(cam.shape, np.inf)
    uv, z = _screen(cam, pc)
    return _rasterize(uv, z, faces, cam.height, cam.width, side == "back")


def soft_from_camera_vertices(cam: PinholeCamera, pc: np.ndarray, faces: np.ndarray, edges: np.ndarray,
                              depth: np.ndarray, tau: float = SOFT_TAU, band: float = SOFT_BAND) -> np.ndarray:
    hard = np.isfinite(depth)
    if len(faces) == 0:
        return hard.astype(np.float64)
    uv, z = _screen(cam, pc)
    d = _contour_distance(uv, z, faces, edges, cam.height, cam.width, band)
    signed = np.where(hard, d, -d)
    return np.where(d < band, 0.5 * (1.0 + np.tanh(0.5 * signed / tau)), hard.astype(np.float64))


def render_depth(cam: PinholeCamera, mesh: TriMesh, side: str = "front", camera_frame: bool = False) -> np.ndarray:
    """Per-pixel nearest (``front``) or farthest (``back``) surface depth; +inf where empty.

    Triangles with any vertex behind the near plane are skipped rather than clipped.
    ``camera_frame`` declares the mesh already expressed in camera coordinates.
    """
    if side not in ("front", "back"):
        raise ValueError(f"side must be 'front' or 'back', got {side!r}")
    pc = mesh.vertices if camera_frame else cam.world_to_camera(mesh.vertices)
    return depth_from_camera_vertices(cam, pc, mesh.faces, side)


def render_silhouette(cam: PinholeCamera, mesh: TriMesh, camera_frame: bool = False) -> np.ndarray:
    return np.isfinite(render_depth(cam, mesh, "front", camera_frame)).astype(np.uint8)


def soft_from_depth(cam: PinholeCamera, mesh: TriMesh, depth: np.ndarray, tau: float = SOFT_TAU,
                    band: float = SOFT_BAND, camera_frame: bool = False) -> np.ndarray:
    """Soft coverage given an already rendered front depth map of the same mesh."""
    pc = mesh.vertices if camera_frame else cam.world_to_camera(mesh.vertices)
    return soft_from_camera_vertices(cam, pc, mesh.faces, mesh.edge_faces, depth, tau, band)


def render_soft_silhouette(cam: PinholeCamera, mesh: TriMesh, tau: float = SOFT_TAU, band: float = SOFT_BAND,
                           camera_frame: bool = False) -> np.ndarray:
    """Coverage in [0, 1]: a sigmoid of the signed pixel distance to the nearest contour edge.

    Contour edges are mesh edges between a front- and a back-facing triangle, or
    open edges. Thresholding at 0.5 reproduces the hard silhouette.
    """
    depth = render_depth(cam, mesh, "front", camera_frame)
    return soft_from_depth(cam, mesh, depth, tau, band, camera_frame)


def occ_sil_loss(rendered: np.ndarray, target: np.ndarray, ignore: np.ndarray | None = None) -> float:
    """Mean squared silhouette error over pixels outside ``ignore``."""
    r = np.asarray(rendered, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if r.shape != t.shape or (ignore is not None and np.shape(ignore) != r.shape):
        raise ValueError(f"silhouette shapes differ: {r.shape} vs {t.shape}")
    valid = np.ones(r.shape, bool) if ignore is None else ~np.asarray(ignore, bool)
    n = int(valid.sum())
    if n == 0:
        return 0.0
    diff = (r - t)[valid]
    return float(np.dot(diff, diff) / n)
