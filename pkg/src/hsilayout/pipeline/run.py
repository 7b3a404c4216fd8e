"""Stage orchestration, body refinement, evaluation and artifact writing."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..body.refine import object_sdfs, refine_body_placement
from ..geometry.mesh import write_obj
from ..geometry.pose import apply_pose
from ..metrics import SceneEstimate, SceneReport, evaluate
from ..optim.params import SceneLayout
from ..optim.problem import LayoutProblem, ObjectData, ProblemData
from ..optim.stages import DivergenceError, StageResult, run_stage
from .load import RunContext
from .precompute import Precomputed, precompute

log = logging.getLogger(__name__)


def initial_layout(ctx: RunContext) -> SceneLayout:
    return SceneLayout(tuple(o.init_pose for o in ctx.objects), ctx.cam.pitch, ctx.cam.roll, ctx.y_gp)


def build_problem(ctx: RunContext, pre: Precomputed) -> LayoutProblem:
    masks = ctx.object_masks
    objects = []
    for i, o in enumerate(ctx.objects):
        others = np.zeros(ctx.cam.shape, dtype=bool)
        for j in range(len(ctx.objects)):
            if j != i:
                others |= masks[j]
        objects.append(ObjectData(
            mesh=o.mesh, category=o.category, regions=pre.regions[i], init_scale=o.init_pose.scale.copy(),
            detected_box=o.detected_box, mask=masks[i], ignore=others | ctx.init_person_mask,
            near=pre.maps.near[i], far=pre.maps.far[i], contacts=pre.contacts[i]))
    data = ProblemData(ctx.cam, objects, pre.sdf, pre.foot_points, ctx.config.soft_silhouette)
    return LayoutProblem(data)


def estimate_of(ctx: RunContext, layout: SceneLayout) -> SceneEstimate:
    return SceneEstimate([o.id for o in ctx.objects], [o.category for o in ctx.objects],
                         [o.mesh for o in ctx.objects], list(layout.poses),
                         ctx.cam.with_orientation(layout.pitch, layout.roll), layout.y_gp)


def ground_truth_of(ctx: RunContext) -> SceneEstimate | None:
    g = ctx.gt
    if g is None:
        return None
    return SceneEstimate(g.ids, g.categories, g.meshes, g.poses, g.cam, g.y_gp)


def refine_bodies(ctx: RunContext, pre: Precomputed, layout: SceneLayout, threads=None) -> np.ndarray:
    """World-frame translation of every retained frame against the final layout."""
    posed = [apply_pose(o.mesh, p) for o, p in zip(ctx.objects, layout.poses)]
    sdfs = object_sdfs(posed, threads=threads)
    R = ctx.cam.with_orientation(layout.pitch, layout.roll).rotation
    memo: dict = {}

    def one(k):
        f = pre.frames[k]
        world = f.mesh.with_vertices(f.mesh.vertices @ R)
        key = (world.vertices.tobytes(), pre.assignment.per_frame[k].tobytes())
        if key not in memo:
            memo[key] = refine_body_placement(world, f.body_contacts, pre.assignment.per_frame[k], sdfs)
        return memo[key]

    # memoisation keeps repeated static frames cheap; run serially so it stays deterministic
    return np.array([one(k) for k in range(len(pre.frames))]).reshape(-1, 3)


def world_bodies(pre: Precomputed, layout_cam_R: np.ndarray, deltas=None) -> list:
    out = []
    for k, f in enumerate(pre.frames):
        v = f.mesh.vertices @ layout_cam_R
        out.append(v if deltas is None else v + deltas[k])
    return out


@dataclass
class RunResult:
    layout: SceneLayout
    initial: SceneLayout
    stages: list
    body_shifts: np.ndarray
    report: SceneReport
    initial_report: SceneReport
    precomputed: Precomputed
    output_dir: Path
    extra: dict = field(default_factory=dict)


def _score(ctx, pre, layout, deltas):
    est = estimate_of(ctx, layout)
    bodies = world_bodies(pre, est.cam.rotation, deltas)
    return evaluate(est, bodies, pre.foot_points, ground_truth_of(ctx), ctx.config.thresholds.ground_threshold)


def _write_layout(out: Path, name: str, layout: SceneLayout) -> None:
    (out / name).write_text(json.dumps(layout.to_dict(), indent=2, sort_keys=True) + "\n")


def _stage_summary(res: StageResult, cfg) -> dict:
    return {"stage": res.stage, "iterations": cfg.iterations, "step": cfg.step, "weights": cfg.weights,
            "groups": list(cfg.groups), "best_loss": res.best_loss, "best_iteration": res.best_iteration}


def run_pipeline(ctx: RunContext, threads: int | None = None, only_stage: str | None = None,
                 output_dir=None, progress_every: int = 0) -> RunResult:
    """Precompute, run the stages, refine bodies, evaluate and write artifacts.

    If a stage diverges, its trace and the layout reached before it are written
    before the error propagates.
    """
    cfg = ctx.config
    out = Path(output_dir) if output_dir is not None else cfg.path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    pre = precompute(ctx, threads)
    problem = build_problem(ctx, pre)
    L = problem.layout
    init = initial_layout(ctx)
    _write_layout(out, "layout_initial.json", init)
    x = L.pack(init)
    summaries, results = [], []
    for sc in cfg.stage_configs(only_stage):
        log.info("stage %s: %d iterations", sc.stage, sc.iterations)
        try:
            res = run_stage(problem, x, sc, threads, progress_every)
        except DivergenceError as e:
            (out / f"trace_{sc.stage}.csv").write_text(e.trace.to_csv())
            _write_layout(out, "layout_partial.json", L.unpack(x))
            raise
        (out / f"trace_{sc.stage}.csv").write_text(res.trace.to_csv())
        x = res.x
        results.append(res)
        summaries.append(_stage_summary(res, sc))
    layout = L.unpack(x)
    _write_layout(out, "layout.json", layout)
    (out / "stages.json").write_text(json.dumps(summaries, indent=2, sort_keys=True) + "\n")

    obj_dir = out / "objects"
    obj_dir.mkdir(exist_ok=True)
    for o, p in zip(ctx.objects, layout.poses):
        write_obj(apply_pose(o.mesh, p), obj_dir / f"{o.id}.obj")

    deltas = refine_bodies(ctx, pre, layout, threads) if cfg.refine_bodies else np.zeros((len(pre.frames), 3))
    bodies = [{"frame": int(i), "timestamp": f.timestamp, "shift": d.tolist()}
              for i, f, d in zip(pre.retained, pre.frames, deltas)]
    dropped = sorted(set(range(len(ctx.frames))) - set(pre.retained.tolist()))
    (out / "bodies.json").write_text(json.dumps({"dropped_frames": dropped, "frames": bodies},
                                                indent=2, sort_keys=True) + "\n")

    initial_report = _score(ctx, pre, init, None)
    report = _score(ctx, pre, layout, deltas)
    (out / "report_initial.json").write_text(initial_report.to_json())
    (out / "report.json").write_text(report.to_json())
    (out / "report.csv").write_text(report.to_csv())
    return RunResult(layout, init, results, deltas, report, initial_report, pre, out)
