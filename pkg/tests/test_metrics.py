import numpy as np
import pytest

from hsilayout.geometry import OrientedBox, PoseParams, TriMesh, apply_pose, box_mesh, icosphere
from hsilayout.metrics import (
    SceneEstimate,
    camera_orientation_error,
    contact_score,
    evaluate,
    ground_penetration,
    inside_any,
    iou2d,
    iou3d,
    match_objects,
    non_collision_score,
    point_to_surface_error,
)
from hsilayout.pipeline import initial_layout, load_run
from hsilayout.pipeline.run import estimate_of, ground_truth_of
from hsilayout.raster import PinholeCamera

import oracles

SLAB = box_mesh([1.0, 0.25, 1.0])  # top face at y = 0.25


def test_iou2d_examples():
    assert iou2d([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
    assert iou2d([0, 0, 1, 1], [3, 3, 1, 1]) == 0.0
    assert iou2d([0, 0, 1, 1], [0.5, 0, 1, 1]) == pytest.approx(1 / 3)


def test_iou3d_matches_monte_carlo_for_rotated_boxes():
    a = OrientedBox([0, 0, 0], [0.5, 0.4, 0.3], 0.3)
    b = OrientedBox([0.2, 0.1, -0.1], [0.4, 0.5, 0.35], -0.5)
    mc = oracles.mc_iou3d((a.center, a.half_extents, a.yaw), (b.center, b.half_extents, b.yaw), 400_000)
    assert iou3d(a, b) == pytest.approx(mc, abs=0.004)


def test_non_collision_examples():
    far = icosphere(0.2, 2, center=[5, 5, 5]).vertices
    inside = icosphere(0.1, 2).vertices
    assert non_collision_score([far], [SLAB]) == 1.0
    assert non_collision_score([inside], [SLAB]) == 0.0
    # half the points strictly inside the slab, half above it
    xs = np.linspace(-0.5, 0.5, 11)
    below = np.array([[x, 0.0, z] for x in xs for z in xs])
    half = np.concatenate([below, below + [0, 1.0, 0]])
    assert non_collision_score([half], [SLAB]) == pytest.approx(0.5, abs=1 / len(half))


def test_non_collision_complements_penetrating_fraction():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1.5, 1.5, size=(3000, 3))
    frac = inside_any(pts, [SLAB]).mean()
    assert non_collision_score([pts], [SLAB]) + frac == 1.0


def test_contact_score_one_of_four():
    inside = np.array([[0.0, 0.0, 0.0], [0.0, 3.0, 0.0]])
    out = np.array([[0.0, 3.0, 0.0]])
    assert contact_score([inside, out, out, out], [SLAB]) == 0.25
    assert contact_score([out], [SLAB]) == 0.0
    assert contact_score([inside], [SLAB]) == 1.0


def test_contact_score_never_drops_when_objects_grow():
    rng = np.random.default_rng(2)
    bodies = [rng.normal(size=(40, 3)) * 0.4 + rng.uniform(-1.5, 1.5, 3) for _ in range(30)]
    obj = box_mesh([0.5, 0.3, 0.4])
    scores = [contact_score(bodies, [apply_pose(obj, PoseParams([s] * 3, 0.2, [0, 0, 0]))])
              for s in (0.5, 1.0, 1.5, 2.0)]
    assert scores == sorted(scores)


def test_ground_penetration_examples():
    R = np.eye(3)
    on = np.array([[0, -1.0, 0], [1, -1.0, 2]])
    assert ground_penetration(on, -1.0, R) == (0.0, 0.0)
    f, d = ground_penetration(on - [0, 0.02, 0], -1.0, R)
    assert f == 1.0 and d == pytest.approx(0.02)
    f, d = ground_penetration(np.concatenate([on, on - [0, 0.04, 0]]), -1.0, R)
    assert f == 0.5 and d == pytest.approx(0.04)
    with pytest.raises(ValueError):
        ground_penetration(np.zeros((0, 3)), -1.0, R)


def test_ground_penetration_counts_on_plane_points_in_the_denominator():
    rng = np.random.default_rng(3)
    S = np.column_stack([rng.normal(size=50), rng.normal(size=50) * 0.05 - 1.0, rng.normal(size=50)])
    P = np.column_stack([rng.normal(size=30), np.full(30, -1.0), rng.normal(size=30)])
    pen = int((S[:, 1] + 1.0 < 0).sum())
    assert ground_penetration(np.concatenate([S, P]), -1.0, np.eye(3))[0] == pen / 80


def test_ground_penetration_uses_world_heights():
    # camera-frame points of a world floor seen with pitch; heights come out exact
    cam = PinholeCamera(100, 100, 50, 50, 100, 100, pitch=0.1, roll=-0.05)
    world = np.array([[0.3, -1.2, -3.0], [-0.4, -1.2, -5.0]])
    pc = cam.world_to_camera(world)
    assert ground_penetration(pc, -1.2 - 1e-9, cam.rotation)[0] == 0.0
    assert ground_penetration(pc, -1.2 + 1e-9, cam.rotation)[0] == 1.0


def test_camera_orientation_error_examples():
    assert camera_orientation_error((0.1, 0.2), (0.1, 0.2)) == (0.0, 0.0, 0.0)
    dp, dr, m = camera_orientation_error((0.14, 0.18), (0.1, 0.2))
    assert (dp, dr, m) == pytest.approx((0.04, 0.02, 0.03))
    assert camera_orientation_error((-0.1, 0), (0.1, 0))[0] == pytest.approx(0.2)


def test_point_to_surface_is_zero_for_identical_meshes_and_directional():
    a = box_mesh([0.5, 0.5, 0.5], spacing=0.25)
    assert point_to_surface_error(a, a) == 0.0
    big = box_mesh([1.0, 0.5, 0.5])
    # every vertex of the small box lies on the big one's y/z planes or inside
    assert point_to_surface_error(a, big) != point_to_surface_error(big, a)


def test_matching_is_greedy_by_iou_within_category():
    b = [OrientedBox([0, 0, 0], [1, 1, 1]), OrientedBox([0.5, 0, 0], [1, 1, 1]), OrientedBox([5, 0, 0], [1, 1, 1])]
    pairs = match_objects(["chair", "chair", "table"], [b[1], b[0], b[2]], ["chair", "chair", "sofa"], b)
    assert pairs == [(1, 0), (0, 1)]


def _estimate(meshes, poses, cats=None):
    cam = PinholeCamera(144, 144, 96, 72, 192, 144, pitch=0.05)
    return SceneEstimate([f"o{i}" for i in range(len(meshes))], cats or ["chair"] * len(meshes), meshes, poses,
                         cam, -1.3)


def test_evaluate_ground_truth_as_estimate_is_the_identity_row():
    meshes = [box_mesh([0.3, 0.4, 0.3], spacing=0.2), box_mesh([0.6, 0.4, 0.4], spacing=0.2)]
    poses = [PoseParams([1, 1, 1], 0.4, [0.5, -0.9, -4]), PoseParams([1.1, 0.9, 1], -0.3, [-0.8, -0.9, -5])]
    gt = _estimate(meshes, poses)
    r = evaluate(_estimate(meshes, poses), gt=gt)
    assert r.ground_truth_available
    assert abs(r.mean_iou3d - 1) < 1e-9 and abs(r.mean_iou2d - 1) < 1e-9 and r.mean_p2s < 1e-9
    assert r.orientation_error == 0.0
    assert r.metadata["p2s_queries"] == "ground-truth mesh vertices"


def test_evaluate_empty_estimate_and_missing_ground_truth():
    meshes = [box_mesh([0.3, 0.4, 0.3])]
    gt = _estimate(meshes, [PoseParams([1, 1, 1], 0, [0, -0.9, -4])])
    r = evaluate(_estimate([], []), gt=gt)
    assert r.mean_iou3d == 0.0 and r.objects[0].matched is None and r.objects[0].flags
    r = evaluate(gt)
    assert not r.ground_truth_available and r.mean_iou3d is None and r.flags


def test_evaluate_scores_category_mismatch_as_zero():
    meshes = [box_mesh([0.3, 0.4, 0.3])]
    pose = [PoseParams([1, 1, 1], 0, [0, -0.9, -4])]
    r = evaluate(_estimate(meshes, pose, ["sofa"]), gt=_estimate(meshes, pose, ["chair"]))
    assert r.objects[0].iou3d == 0.0 and r.objects[0].p2s is None
    assert any("unmatched" in f for f in r.flags)


def test_report_serialisation_round_trip():
    meshes = [box_mesh([0.3, 0.4, 0.3])]
    pose = [PoseParams([1, 1, 1], 0, [0, -0.9, -4])]
    r = evaluate(_estimate(meshes, pose), gt=_estimate(meshes, pose))
    assert type(r).model_validate_json(r.to_json()) == r
    header, row = r.to_csv().splitlines()
    assert header.split(",")[0] == "schema_version" and len(row.split(",")) == len(header.split(","))


def test_evaluate_matches_brute_force_on_a_fixture(fixture_factory):
    ctx = load_run(fixture_factory(4))
    rep = evaluate(estimate_of(ctx, initial_layout(ctx)), gt=ground_truth_of(ctx))
    for gt_id, metric, ours, ref in oracles.report_vs_oracle(ctx.manifest_path, rep.model_dump(), 300_000):
        tol = 1e-9 if metric == "p2s" else 0.004
        assert ours == pytest.approx(ref, abs=tol), (gt_id, metric)
