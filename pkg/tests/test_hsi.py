import itertools

import numpy as np
import pytest

from hsilayout.body import BodyFrame
from hsilayout.geometry import OrientedBox, PoseParams, TriMesh, apply_pose, box_mesh, icosphere, merge_meshes
from hsilayout.hsi import (
    ContactParams,
    ContactRegions,
    DepthRangeMaps,
    ObjectContacts,
    accumulate_depth_ranges,
    assign_contacts,
    bbox_loss,
    collision_loss,
    contact_loss,
    depth_order_loss,
    extract_contact_regions,
    frame_depth_ranges,
    object_contact_term,
    projected_box,
    scale_loss,
    split_contacts,
)
from hsilayout.raster import PinholeCamera, render_silhouette
from hsilayout.sdf import build_body_sdf, grid_from_bodies

CAM = PinholeCamera(100.0, 100.0, 50.0, 40.0, 100, 80)


def cv_sphere(z=3.0, r=1.0):
    return icosphere(r, 4, center=(0, 0, z))


class TestDepthRanges:
    def test_fully_visible_person(self):
        body = cv_sphere()
        sil = render_silhouette(CAM, body, camera_frame=True)
        obj = np.ones((1, 80, 100), np.uint8)
        m = frame_depth_ranges(CAM, body, sil, obj)
        assert np.all(np.isinf(m.far))
        assert m.near[0, 40, 50] == pytest.approx(4.0, abs=0.01)
        assert np.array_equal(np.isfinite(m.near[0]), sil.astype(bool))

    def test_hidden_person_sets_far(self):
        body = cv_sphere()
        person = np.zeros((80, 100), np.uint8)
        obj = np.ones((1, 80, 100), np.uint8)
        m = frame_depth_ranges(CAM, body, person, obj)
        assert m.far[0, 40, 50] == pytest.approx(2.0, abs=0.01)
        assert np.all(np.isinf(m.near))

    def test_resolution_mismatch(self):
        with pytest.raises(ValueError):
            frame_depth_ranges(CAM, cv_sphere(), np.zeros((10, 10)), np.zeros((1, 80, 100)))

    def test_accumulate(self):
        a = DepthRangeMaps.empty(1, (2, 2))
        b = DepthRangeMaps(np.full((1, 2, 2), 2.0), np.full((1, 2, 2), 5.0))
        c = DepthRangeMaps(np.full((1, 2, 2), 3.0), np.full((1, 2, 2), 4.0))
        assert np.array_equal(accumulate_depth_ranges([b]).near, b.near)
        acc = accumulate_depth_ranges([a, b, c])
        assert np.all(acc.near == 3.0) and np.all(acc.far == 4.0)

    def test_order_free_and_monotone(self):
        rng = np.random.default_rng(0)
        frames = []
        for _ in range(4):
            near = np.where(rng.random((2, 5, 6)) < 0.5, rng.uniform(1, 5, (2, 5, 6)), -np.inf)
            far = np.where(rng.random((2, 5, 6)) < 0.5, rng.uniform(1, 5, (2, 5, 6)), np.inf)
            frames.append(DepthRangeMaps(near, far))
        ref = accumulate_depth_ranges(frames)
        for perm in itertools.permutations(frames):
            acc = accumulate_depth_ranges(perm)
            assert np.array_equal(acc.near, ref.near) and np.array_equal(acc.far, ref.far)
        for k in range(1, 4):
            a, b = accumulate_depth_ranges(frames[:k]), accumulate_depth_ranges(frames[:k + 1])
            assert np.all(b.near >= a.near) and np.all(b.far <= a.far)


class TestDepthLoss:
    def _setup(self, near, far):
        quad = TriMesh([[-5, -5, -5.0], [5, -5, -5], [5, 5, -5], [-5, 5, -5]], [[0, 1, 2], [0, 2, 3]])
        mask = np.ones((1, 80, 100), np.uint8)
        maps = DepthRangeMaps(np.full((1, 80, 100), near), np.full((1, 80, 100), far))
        return quad, mask, maps

    def test_within(self):
        q, m, maps = self._setup(4.0, 6.0)
        assert depth_order_loss(CAM, [q], maps, m) == 0.0

    def test_far_violation(self):
        q, m, maps = self._setup(-np.inf, 4.0)
        assert depth_order_loss(CAM, [q], maps, m) == pytest.approx(1.0)

    def test_near_violation(self):
        q, m, maps = self._setup(6.0, np.inf)
        assert depth_order_loss(CAM, [q], maps, m) == pytest.approx(1.0)

    def test_no_constraints(self):
        q, m, maps = self._setup(-np.inf, np.inf)
        assert depth_order_loss(CAM, [q], maps, m) == 0.0


class TestCollision:
    @pytest.fixture(scope="class")
    @staticmethod
    def sdf():
        s = icosphere(0.5, 4)
        return build_body_sdf(s, grid_from_bodies([s], 64, 0.2))

    def test_outside(self, sdf):
        assert collision_loss([np.array([[3.0, 0, 0], [0, 0.9, 0]])], sdf) == 0.0

    def test_center_vertex(self, sdf):
        pts = np.array([[0, 0, 0.0], [3, 0, 0], [0, 3, 0], [0, 0, 3]])
        v = collision_loss([pts], sdf)
        assert v == pytest.approx(0.25 / 4, abs=2 * 0.5 * sdf.spec.diagonal / 4)

    def test_quadratic(self, sdf):
        a = collision_loss([np.array([[0.45, 0, 0]])], sdf)
        b = collision_loss([np.array([[0.40, 0, 0]])], sdf)
        assert b / a == pytest.approx(4.0, rel=0.2)


def chair_mesh():
    base = box_mesh([0.25, 0.225, 0.25], (0, 0.225, 0), spacing=0.05)
    back = box_mesh([0.25, 0.3, 0.05], (0, 0.75, -0.2), spacing=0.05)
    return merge_meshes([base, back])


class TestRegions:
    def test_table_top_only(self):
        m = box_mesh([0.5, 0.4, 0.3], spacing=0.1)
        r = extract_contact_regions(m, "table")
        assert len(r.seat) and np.allclose(m.vertices[r.seat, 1], 0.4) and len(r.back) == 0

    def test_bed(self):
        assert len(extract_contact_regions(box_mesh([1, 0.3, 1], spacing=0.2), "bed").back) == 0

    def test_chair(self):
        m = chair_mesh()
        r = extract_contact_regions(m, "chair")
        assert np.allclose(m.vertices[r.seat, 1], 0.45)
        assert np.allclose(m.vertices[r.back, 2], -0.15)
        assert m.vertices[r.back, 1].min() >= 0.5 * 1.05

    def test_unknown(self):
        with pytest.raises(ValueError):
            extract_contact_regions(box_mesh([1, 1, 1]), "lamp")


def body_frame(points, normals_up=True, t=0):
    # a tiny closed body made of small boxes; contact vertices are each box's bottom centre
    parts = [box_mesh([0.02, 0.02, 0.02], p, spacing=0.02) for p in points]
    mesh = merge_meshes(parts)
    idx = []
    off = 0
    for p, part in zip(points, parts):
        d = part.vertices - p
        target = [0, -0.02, 0] if normals_up else [0, 0, -0.02]
        idx.append(off + int(np.argmin(np.linalg.norm(d - target, axis=1))))
        off += part.n_vertices
    return BodyFrame(t, mesh, np.asarray(points).reshape(-1, 3), [], idx)


class TestAssign:
    def _world_objects(self):
        a = box_mesh([0.4, 0.2, 0.4], (-0.6, -1.0, -3.0), spacing=0.1)
        b = box_mesh([0.4, 0.2, 0.4], (0.6, -1.0, -3.0), spacing=0.1)
        return [a, b]

    def test_examples(self):
        objs = self._world_objects()
        masks = np.stack([render_silhouette(CAM, o) for o in objs])
        R = CAM.rotation
        pts_w = np.array([[-0.6, -0.78, -3.0], [0.0, 2.0, -3.0]])
        f = body_frame(pts_w @ R.T)
        a = assign_contacts([f], CAM, masks, objs)
        assert a.per_frame[0].tolist() == [0, -1]

    def test_tie_break_by_surface_distance(self):
        objs = self._world_objects()
        full = np.ones((2, 80, 100), np.uint8)
        R = CAM.rotation
        f = body_frame(np.array([[0.25, -0.78, -3.0]]) @ R.T)
        a = assign_contacts([f], CAM, full, objs, ContactParams(radius=1.0))
        assert a.per_frame[0].tolist() == [1]


class TestContactLoss:
    def _table(self, top=0.0):
        m = box_mesh([0.5, 0.2, 0.5], (0, top - 0.2, 0), spacing=0.1)
        return m, extract_contact_regions(m, "table")

    def test_coincident_and_gap(self):
        m, reg = self._table()
        R = CAM.rotation
        pts = m.vertices[reg.seat][:5]
        c = ObjectContacts(pts @ R.T, np.zeros((0, 3)))
        assert object_contact_term(c, m.vertices, reg, R) == pytest.approx(0.0, abs=1e-12)
        c2 = ObjectContacts((pts + [0, 0.1, 0]) @ R.T, np.zeros((0, 3)))
        assert object_contact_term(c2, m.vertices, reg, R) == pytest.approx(0.1)

    def test_back_term(self):
        m = chair_mesh()
        reg = extract_contact_regions(m, "chair")
        R = CAM.rotation
        back_pts = m.vertices[reg.back][:4] + [0, 0, 0.03]
        seat_pts = m.vertices[reg.seat][:4] + [0, 0.02, 0]
        c = ObjectContacts(seat_pts @ R.T, back_pts @ R.T)
        assert object_contact_term(c, m.vertices, reg, R) == pytest.approx(0.05)

    def test_unassigned_zero(self):
        m, reg = self._table()
        e = ObjectContacts(np.zeros((0, 3)), np.zeros((0, 3)))
        assert contact_loss([e], [m], [reg], CAM) == 0.0

    def test_translation_equivariance(self):
        m = chair_mesh()
        reg = extract_contact_regions(m, "chair")
        rng = np.random.default_rng(5)
        seat = m.vertices[reg.seat][:6] + rng.normal(scale=0.02, size=(6, 3))
        back = m.vertices[reg.back][:6] + rng.normal(scale=0.02, size=(6, 3))
        R = CAM.rotation
        base = contact_loss([ObjectContacts(seat @ R.T, back @ R.T)], [m], [reg], CAM)
        d = np.array([0.3, -0.2, 0.7])
        moved = contact_loss([ObjectContacts((seat + d) @ R.T, (back + d) @ R.T)], [m.translated(d)], [reg], CAM)
        assert abs(base - moved) < 1e-9

    def test_split_routes_by_normal(self):
        R = CAM.rotation
        f_seat = body_frame(np.array([[0, 0.3, -3.0]]) @ R.T, normals_up=True)
        f_back = body_frame(np.array([[0, 0.8, -3.0]]) @ R.T, normals_up=False, t=1)
        from hsilayout.hsi import ContactAssignment
        a = ContactAssignment((np.array([0]), np.array([0])))
        reg = extract_contact_regions(chair_mesh(), "chair")
        out = split_contacts(a, [f_seat, f_back], CAM, 1, [reg])
        assert len(out[0].seat_points) == 1 and len(out[0].back_points) == 1
        table = [ContactRegions([0], [])]
        out = split_contacts(a, [f_seat, f_back], CAM, 1, table)
        assert len(out[0].seat_points) == 2 and len(out[0].back_points) == 0


class TestSceneTerms:
    def test_bbox(self):
        assert bbox_loss([[10, 20, 30, 40]], [[10, 20, 30, 40]], 640) == 0.0
        assert bbox_loss([[20, 20, 30, 40]], [[10, 20, 30, 40]], 640) == pytest.approx(10 / 640)
        assert bbox_loss([[0, 0, 40, 5], [0, 0, 40, 5]], [[0, 0, 30, 5], [0, 0, 30, 5]], 640) == pytest.approx(20 / 640)

    def test_projected_box_centered(self):
        b = OrientedBox([0, 0, -4], [0.5, 0.5, 0.5])
        x, y, w, h = projected_box(CAM, b)
        assert x + w / 2 == pytest.approx(50) and y + h / 2 == pytest.approx(40)
        assert w == pytest.approx(2 * 100 * 0.5 / 3.5)

    def test_scale(self):
        assert scale_loss([[1, 2, 3]], [[1, 2, 3]]) == 0.0
        assert scale_loss([[1.1, 1, 1]], [[1, 1, 1]]) == pytest.approx(0.1)
        assert scale_loss([[1.1, 2.2, 3.3]], [[1, 2, 3]]) == pytest.approx(np.sqrt(3) * 0.1)
