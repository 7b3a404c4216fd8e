"""Bounding-volume hierarchy over triangles for exact closest-point queries."""

from __future__ import annotations

import numba as nb
import numpy as np

LEAF_SIZE = 4


@nb.njit(cache=True, nogil=True, inline="always")
def _closest_scalar(px, py, pz, ax, ay, az, bx, by, bz, cx, cy, cz):
    # Ericson, Real-Time Collision Detection, 5.1.5; scalar form avoids temporaries
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return ax, ay, az
    bpx, bpy, bpz = px - bx, py - by, pz - bz
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bx, by, bz
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        return ax + v * abx, ay + v * aby, az + v * abz
    cpx, cpy, cpz = px - cx, py - cy, pz - cz
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cx, cy, cz
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return ax + w * acx, ay + w * acy, az + w * acz
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return bx + w * (cx - bx), by + w * (cy - by), bz + w * (cz - bz)
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return ax + abx * v + acx * w, ay + aby * v + acy * w, az + abz * v + acz * w


@nb.njit(cache=True, nogil=True)
def closest_point_on_triangle(p, a, b, c):
    qx, qy, qz = _closest_scalar(p[0], p[1], p[2], a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2])
    return np.array([qx, qy, qz])


@nb.njit(cache=True, nogil=True)
def _build(tri_lo, tri_hi, centroid, leaf_size):
    n = centroid.shape[0]
    order = np.arange(n)
    max_nodes = max(1, 2 * n)
    node_lo = np.empty((max_nodes, 3))
    node_hi = np.empty((max_nodes, 3))
    left = -np.ones(max_nodes, dtype=np.int64)
    right = -np.ones(max_nodes, dtype=np.int64)
    start = np.zeros(max_nodes, dtype=np.int64)
    count = np.zeros(max_nodes, dtype=np.int64)
    st_node = np.empty(max_nodes, dtype=np.int64)
    st_s = np.empty(max_nodes, dtype=np.int64)
    st_e = np.empty(max_nodes, dtype=np.int64)
    sp = 0
    st_node[0] = 0
    st_s[0] = 0
    st_e[0] = n
    sp = 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        node = st_node[sp]
        s = st_s[sp]
        e = st_e[sp]
        lo = np.full(3, np.inf)
        hi = np.full(3, -np.inf)
        clo = np.full(3, np.inf)
        chi = np.full(3, -np.inf)
        for k in range(s, e):
            t = order[k]
            for a in range(3):
                lo[a] = min(lo[a], tri_lo[t, a])
                hi[a] = max(hi[a], tri_hi[t, a])
                clo[a] = min(clo[a], centroid[t, a])
                chi[a] = max(chi[a], centroid[t, a])
        node_lo[node] = lo
        node_hi[node] = hi
        if e - s <= leaf_size:
            start[node] = s
            count[node] = e - s
            continue
        axis = 0
        ext = chi - clo
        if ext[1] > ext[axis]:
            axis = 1
        if ext[2] > ext[axis]:
            axis = 2
        sub = order[s:e].copy()
        keys = np.empty(e - s)
        for k in range(e - s):
            keys[k] = centroid[sub[k], axis]
        idx = np.argsort(keys, kind="mergesort")
        for k in range(e - s):
            order[s + k] = sub[idx[k]]
        mid = (s + e) // 2
        l = n_nodes
        r = n_nodes + 1
        n_nodes += 2
        left[node] = l
        right[node] = r
        st_node[sp] = l
        st_s[sp] = s
        st_e[sp] = mid
        sp += 1
        st_node[sp] = r
        st_s[sp] = mid
        st_e[sp] = e
        sp += 1
    return order, node_lo[:n_nodes], node_hi[:n_nodes], left[:n_nodes], right[:n_nodes], start[:n_nodes], count[:n_nodes]


@nb.njit(cache=True, nogil=True)
def _box_dist2(p, lo, hi):
    d = 0.0
    for a in range(3):
        if p[a] < lo[a]:
            d += (lo[a] - p[a]) ** 2
        elif p[a] > hi[a]:
            d += (p[a] - hi[a]) ** 2
    return d


@nb.njit(cache=True, nogil=True)
def _query(points, tris, order, node_lo, node_hi, left, right, start, count, max_dist):
    m = points.shape[0]
    dist = np.empty(m)
    closest = np.empty((m, 3))
    tri_id = np.empty(m, dtype=np.int64)
    stack = np.empty(128, dtype=np.int64)
    for i in range(m):
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        p = points[i]
        best = max_dist * max_dist
        best_t = -1
        bqx, bqy, bqz = np.nan, np.nan, np.nan
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _box_dist2(p, node_lo[node], node_hi[node]) >= best:
                continue
            if left[node] < 0:
                for k in range(start[node], start[node] + count[node]):
                    t = order[k]
                    qx, qy, qz = _closest_scalar(px, py, pz, tris[t, 0, 0], tris[t, 0, 1], tris[t, 0, 2],
                                                 tris[t, 1, 0], tris[t, 1, 1], tris[t, 1, 2],
                                                 tris[t, 2, 0], tris[t, 2, 1], tris[t, 2, 2])
                    d2 = (qx - px) ** 2 + (qy - py) ** 2 + (qz - pz) ** 2
                    if d2 < best or (d2 == best and t < best_t):
                        best = d2
                        best_t = t
                        bqx, bqy, bqz = qx, qy, qz
            else:
                l = left[node]
                r = right[node]
                dl = _box_dist2(p, node_lo[l], node_hi[l])
                dr = _box_dist2(p, node_lo[r], node_hi[r])
                # push the farther child first so the nearer one is visited next
                if dl <= dr:
                    stack[sp] = r
                    stack[sp + 1] = l
                else:
                    stack[sp] = l
                    stack[sp + 1] = r
                sp += 2
        dist[i] = np.sqrt(best) if best_t >= 0 else np.inf
        closest[i, 0] = bqx
        closest[i, 1] = bqy
        closest[i, 2] = bqz
        tri_id[i] = best_t
    return dist, closest, tri_id


class BVH:
    """Median-split BVH; queries return exact closest points."""

    def __init__(self, triangles: np.ndarray, leaf_size: int = LEAF_SIZE):
        tris = np.ascontiguousarray(triangles, dtype=np.float64).reshape(-1, 3, 3)
        if len(tris) == 0:
            raise ValueError("cannot build a BVH over zero triangles")
        self.triangles = tris
        (self.order, self.node_lo, self.node_hi, self.left, self.right,
         self.start, self.count) = _build(tris.min(axis=1), tris.max(axis=1), tris.mean(axis=1), leaf_size)

    def closest(self, points, max_dist: float = np.inf):
        """Distance, closest point and triangle index for every query point.

        Points farther than ``max_dist`` report ``inf`` and triangle -1.
        """
        p = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
        return _query(p, self.triangles, self.order, self.node_lo, self.node_hi,
                      self.left, self.right, self.start, self.count, float(max_dist))

    def distance(self, points) -> np.ndarray:
        return self.closest(points)[0]
