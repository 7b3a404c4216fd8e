"""Triangle meshes, watertightness checks and ASCII OBJ I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class InvalidMeshError(ValueError):
    pass


class NotWatertightError(InvalidMeshError):
    def __init__(self, report: "WatertightReport", name: str | None = None):
        self.report = report
        label = f"mesh {name!r}" if name else "mesh"
        super().__init__(
            f"{label} is not watertight: {len(report.boundary_edges)} boundary edges, "
            f"{len(report.nonmanifold_edges)} non-manifold edges"
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Indexed triangle mesh. Units are meters, y is up."""

    vertices: np.ndarray
    faces: np.ndarray
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise InvalidMeshError("face index out of range")
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "faces", _frozen(f))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def triangles(self) -> np.ndarray:
        return _frozen(self.vertices[self.faces])

    @cached_property
    def face_normals(self) -> np.ndarray:
        """Unit face normals; zero for degenerate faces."""
        t = self.triangles
        n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        ln = np.linalg.norm(n, axis=1, keepdims=True)
        return _frozen(np.divide(n, ln, out=np.zeros_like(n), where=ln > 0))

    @cached_property
    def vertex_normals(self) -> np.ndarray:
        # area-weighted: the unnormalised cross product is twice the face area
        t = self.triangles
        n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        acc = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(acc, self.faces[:, k], n)
        ln = np.linalg.norm(acc, axis=1, keepdims=True)
        return _frozen(np.divide(acc, ln, out=np.zeros_like(acc), where=ln > 0))

    @cached_property
    def edge_faces(self) -> np.ndarray:
        """(E, 4) rows of (v0, v1, face_a, face_b); face_b is -1 on boundary edges.

        Only meaningful for manifold meshes; extra faces on non-manifold edges are dropped.
        """
        f = self.faces
        nf = len(f)
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        owner = np.tile(np.arange(nf), 3)
        key = np.sort(e, axis=1)
        order = np.lexsort((owner, key[:, 1], key[:, 0]))
        key, owner = key[order], owner[order]
        if len(key) == 0:
            return _frozen(np.zeros((0, 4), dtype=np.int64))
        first = np.ones(len(key), dtype=bool)
        first[1:] = np.any(key[1:] != key[:-1], axis=1)
        starts = np.flatnonzero(first)
        counts = np.diff(np.append(starts, len(key)))
        second = np.where(counts >= 2, owner[np.minimum(starts + 1, len(key) - 1)], -1)
        rows = np.column_stack([key[starts], owner[starts], second])
        return _frozen(rows.astype(np.int64))

    @cached_property
    def bounds(self) -> np.ndarray:
        return _frozen(np.stack([self.vertices.min(axis=0), self.vertices.max(axis=0)]))

    @cached_property
    def bvh(self):
        from .bvh import BVH

        return BVH(self.triangles)

    def with_vertices(self, vertices: np.ndarray) -> "TriMesh":
        return TriMesh(vertices, self.faces, name=self.name)

    def translated(self, offset) -> "TriMesh":
        return self.with_vertices(self.vertices + np.asarray(offset, dtype=np.float64))


@dataclass(frozen=True)
class WatertightReport:
    boundary_edges: np.ndarray
    nonmanifold_edges: np.ndarray

    @property
    def is_watertight(self) -> bool:
        return len(self.boundary_edges) == 0 and len(self.nonmanifold_edges) == 0


def validate_watertight(mesh: TriMesh) -> WatertightReport:
    """List edges used by one face (boundary) or by more than two faces."""
    f = mesh.faces
    if len(f) == 0:
        empty = np.zeros((0, 2), dtype=np.int64)
        return WatertightReport(empty, empty)
    e = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    return WatertightReport(uniq[counts == 1], uniq[counts > 2])


def require_watertight(mesh: TriMesh, name: str | None = None) -> None:
    report = validate_watertight(mesh)
    if not report.is_watertight:
        raise NotWatertightError(report, name or mesh.name)


def merge_meshes(meshes) -> TriMesh:
    verts, faces, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += m.n_vertices
    if not verts:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    return TriMesh(np.concatenate(verts), np.concatenate(faces))


def read_obj(path) -> TriMesh:
    verts, faces = [], []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) for tok in parts[1:]]
                if len(idx) != 3:
                    raise InvalidMeshError(f"{path}:{lineno}: only triangular faces are supported")
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    return TriMesh(np.array(verts, dtype=np.float64).reshape(-1, 3),
                   np.array(faces, dtype=np.int64).reshape(-1, 3),
                   name=Path(path).stem)


def write_obj(mesh: TriMesh, path) -> None:
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def box_mesh(half_extents, center=(0.0, 0.0, 0.0), spacing=None) -> TriMesh:
    """Closed axis-aligned box, outward-facing triangles.

    ``spacing`` (scalar or per-axis) subdivides each face into a grid so that
    interior face vertices carry the exact face normal.
    """
    h = np.asarray(half_extents, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    if spacing is None:
        counts = np.ones(3, dtype=int)
    else:
        sp = np.broadcast_to(np.asarray(spacing, dtype=np.float64), (3,))
        counts = np.maximum(1, np.ceil(2 * h / sp - 1e-9).astype(int))
    grids = [np.linspace(-h[a], h[a], counts[a] + 1) for a in range(3)]

    index: dict[tuple, int] = {}
    verts: list[tuple] = []

    def vid(ix, iy, iz):
        key = (ix, iy, iz)
        if key not in index:
            index[key] = len(verts)
            verts.append((grids[0][ix], grids[1][iy], grids[2][iz]))
        return index[key]

    faces = []
    for axis in range(3):
        u, w = [a for a in range(3) if a != axis]
        for side in (0, counts[axis]):
            for i in range(counts[u]):
                for j in range(counts[w]):
                    quad = []
                    for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
                        ijk = [0, 0, 0]
                        ijk[axis], ijk[u], ijk[w] = side, i + di, j + dj
                        quad.append(vid(*ijk))
                    a, b, cc, d = quad
                    faces.append((a, b, cc))
                    faces.append((a, cc, d))
    v = np.array(verts) + c
    f = np.array(faces, dtype=np.int64)
    # a box is convex, so orienting away from the centroid is exact
    return orient_outward(TriMesh(v, f))


def orient_outward(mesh: TriMesh) -> TriMesh:
    """Flip faces of each convex-ish closed component so normals point away from its centroid."""
    f = mesh.faces.copy()
    t = mesh.triangles
    centroid = mesh.vertices.mean(axis=0)
    n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
    fc = t.mean(axis=1)
    bad = np.einsum("ij,ij->i", n, fc - centroid) < 0
    f[bad] = f[bad][:, [0, 2, 1]]
    return TriMesh(mesh.vertices, f, name=mesh.name)


def icosphere(radius: float = 1.0, subdivisions: int = 3, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Closed sphere from a subdivided icosahedron; 20 * 4**subdivisions faces."""
    g = (1.0 + 5 ** 0.5) / 2.0
    v = [(-1, g, 0), (1, g, 0), (-1, -g, 0), (1, -g, 0), (0, -1, g), (0, 1, g),
         (0, -1, -g), (0, 1, -g), (g, 0, -1), (g, 0, 1), (-g, 0, -1), (-g, 0, 1)]
    verts = [np.array(p, float) / np.linalg.norm(p) for p in v]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(subdivisions):
        cache: dict[tuple, int] = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        nxt = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nxt += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = nxt
    return orient_outward(TriMesh(np.array(verts) * radius + np.asarray(center, float), np.array(faces)))
