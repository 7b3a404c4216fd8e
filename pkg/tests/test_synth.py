import filecmp
import json

import numpy as np
import pytest

from hsilayout.geometry import apply_pose, validate_watertight
from hsilayout.geometry.boxes import box_from_mesh
from hsilayout.raster.render import render_depth
from hsilayout.synth import SynthesisError, SynthOptions, furniture_mesh, generate_scene, sample_spec, write_fixture


def _same_tree(a, b, ignore=("out",)):
    cmp = filecmp.dircmp(a, b, ignore=list(ignore))
    assert not cmp.left_only and not cmp.right_only and not cmp.diff_files
    for sub in cmp.common_dirs:
        _same_tree(a / sub, b / sub, ignore)
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    assert not mismatch and not errors


def test_same_seed_writes_identical_bytes(tmp_path):
    for name in ("a", "b"):
        write_fixture(generate_scene(11, SynthOptions()), tmp_path / name, SynthOptions())
    _same_tree(tmp_path / "a", tmp_path / "b")


def test_different_seeds_differ():
    a, b = generate_scene(1), generate_scene(2)
    assert a.gt_poses[0].translation.tolist() != b.gt_poses[0].translation.tolist()


@pytest.mark.parametrize("category", ["chair", "sofa", "bed", "table"])
def test_furniture_is_watertight(category):
    rng = np.random.default_rng(0)
    m = furniture_mesh(sample_spec(category, rng))
    assert validate_watertight(m).is_watertight
    assert m.bounds[0][1] == pytest.approx(0.0)


def test_zero_perturbation_initial_equals_ground_truth():
    opts = SynthOptions(translation_noise=0.0, yaw_noise_deg=0.0, scale_noise=0.0)
    s = generate_scene(5, opts)
    for g, i in zip(s.gt_poses, s.init_poses):
        assert np.array_equal(g.scale, i.scale) and g.yaw == i.yaw
        assert np.array_equal(g.translation, i.translation)


def test_perturbation_stays_in_range():
    s = generate_scene(6, SynthOptions())
    for g, i in zip(s.gt_poses, s.init_poses):
        assert np.all(np.abs(i.translation - g.translation) <= 0.2 + 1e-12)
        assert abs(i.yaw - g.yaw) <= np.radians(15) + 1e-12
        assert np.all(np.abs(i.scale - 1) <= 0.1 + 1e-12)


def test_layout_rules():
    for seed in range(8):
        s = generate_scene(seed)
        assert 3 <= len(s.meshes) <= 5 and s.categories[0] == "chair"
        assert len(s.frames) == 60
        boxes = [box_from_mesh(m, p) for m, p in zip(s.meshes, s.gt_poses)]
        for b in boxes:
            assert b.y_interval()[0] == pytest.approx(s.y_gp)


def test_object_masks_are_the_rerendered_visible_silhouettes():
    s = generate_scene(3)
    depths = np.stack([render_depth(s.camera, apply_pose(m, p)) for m, p in zip(s.meshes, s.gt_poses)])
    front = np.argmin(np.where(np.isfinite(depths), depths, np.inf), axis=0)
    any_hit = np.isfinite(depths).any(axis=0)
    for i, mask in enumerate(s.object_masks):
        assert np.array_equal(mask, any_hit & (front == i))


def test_teleports_are_recorded(tmp_path):
    opts = SynthOptions(teleports=2)
    s = generate_scene(4, opts)
    assert len(s.teleported) == 2
    write_fixture(s, tmp_path, opts)
    gt = json.loads((tmp_path / "gt.json").read_text())
    assert gt["teleported_frames"] == sorted(s.teleported)


def test_impossible_request_raises():
    with pytest.raises(SynthesisError):
        generate_scene(0, SynthOptions(n_objects=40, max_attempts=3))
