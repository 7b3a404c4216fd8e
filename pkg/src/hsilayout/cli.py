"""Command-line entry point: synth, optimize, eval, render, validate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hsilayout", description="Refine a 3D scene layout from human-scene interaction cues.")
    p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a synthetic fixture with ground truth")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--objects", type=int, default=None, help="object count (default: 3 to 5)")
    s.add_argument("--frames", type=int, default=60)
    s.add_argument("--teleports", type=int, default=0, help="inject isolated teleport frames")
    s.add_argument("--pitch-range", type=float, nargs=2, default=(0.0, 8.0), metavar=("LO", "HI"))
    s.add_argument("--roll-range", type=float, nargs=2, default=(-3.0, 3.0), metavar=("LO", "HI"))
    s.add_argument("--ground-offset", type=float, default=0.0, help="initial ground-height error (m)")
    s.add_argument("--level-camera", action="store_true", help="start at zero pitch and roll")
    s.add_argument("--no-perturb", action="store_true", help="initial layout equals ground truth")
    s.add_argument("--sdf-resolution", type=int, default=None, help="written into the fixture config")

    for name, text in (("optimize", "run the staged optimisation"), ("eval", "score a layout against ground truth"),
                       ("render", "dump depth, silhouette and depth-range maps"),
                       ("validate", "check a config, its manifest and every referenced file")):
        c = sub.add_parser(name, help=text)
        c.add_argument("--config", required=True)
        if name != "validate":
            c.add_argument("--out", default=None, help="output directory (default: from the config)")
        if name == "optimize":
            c.add_argument("--stage", choices=("scene-init", "cam-ground", "full-hsi"), default=None,
                           help="run only this stage")
            c.add_argument("--seed", type=int, default=None)
        if name in ("eval", "render"):
            c.add_argument("--layout", default=None, help="layout JSON (default: the initial layout)")
    return p


def _cmd_synth(a) -> int:
    from .pipeline.config import RunConfig
    from .synth import SynthOptions, generate_scene, write_fixture

    opts = SynthOptions(n_objects=a.objects, n_frames=a.frames, teleports=a.teleports,
                        pitch_deg=tuple(a.pitch_range), roll_deg=tuple(a.roll_range),
                        ground_offset=a.ground_offset, init_level_camera=a.level_camera)
    if a.no_perturb:
        opts.translation_noise = opts.yaw_noise_deg = opts.scale_noise = 0.0
    scene = generate_scene(a.seed, opts)
    root = write_fixture(scene, a.out, opts)
    cfg = {"manifest": "manifest.json", "gt": "gt.json", "output_dir": "out", "seed": a.seed}
    if a.sdf_resolution:
        cfg["sdf"] = {"resolution": a.sdf_resolution}
    RunConfig.model_validate(cfg)
    (root / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    print(f"wrote fixture to {root}")
    return EXIT_OK


def _layout(ctx, path):
    from .optim.params import SceneLayout
    from .pipeline.run import initial_layout

    if path is None:
        return initial_layout(ctx)
    layout = SceneLayout.from_dict(json.loads(Path(path).read_text()))
    if len(layout.poses) != len(ctx.objects):
        raise ValueError(f"{path}: layout has {len(layout.poses)} objects, manifest has {len(ctx.objects)}")
    return layout


def _cmd_optimize(a, threads) -> int:
    from .pipeline import load_run, run_pipeline

    ctx = load_run(a.config)
    if a.seed is not None:
        ctx.config.seed = a.seed
    res = run_pipeline(ctx, threads, only_stage=a.stage, output_dir=a.out)
    r = res.report
    line = f"report written to {res.output_dir / 'report.json'}"
    if r.ground_truth_available:
        line += f" (mean IoU3D {res.initial_report.mean_iou3d:.3f} -> {r.mean_iou3d:.3f})"
    print(line)
    return EXIT_OK


def _cmd_eval(a, threads) -> int:
    from .metrics import evaluate
    from .pipeline import load_run
    from .pipeline.run import estimate_of, ground_truth_of, world_bodies
    from .pipeline.precompute import precompute

    ctx = load_run(a.config)
    layout = _layout(ctx, a.layout)
    pre = precompute(ctx, threads)
    est = estimate_of(ctx, layout)
    rep = evaluate(est, world_bodies(pre, est.cam.rotation), pre.foot_points, ground_truth_of(ctx),
                   ctx.config.thresholds.ground_threshold)
    out = Path(a.out) if a.out else ctx.config.path(ctx.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "eval_report.json").write_text(rep.to_json())
    (out / "eval_report.csv").write_text(rep.to_csv())
    sys.stdout.write(rep.to_json())
    return EXIT_OK


def _cmd_render(a, threads) -> int:
    from .geometry.pose import apply_pose
    from .pipeline import load_run
    from .pipeline.precompute import precompute
    from .raster.imageio import write_pfm, write_pgm
    from .raster.render import render_depth

    ctx = load_run(a.config)
    layout = _layout(ctx, a.layout)
    pre = precompute(ctx, threads)
    cam = ctx.cam.with_orientation(layout.pitch, layout.roll)
    out = Path(a.out) if a.out else ctx.config.path(ctx.config.output_dir) / "render"
    out.mkdir(parents=True, exist_ok=True)
    for i, (o, p) in enumerate(zip(ctx.objects, layout.poses)):
        d = render_depth(cam, apply_pose(o.mesh, p))
        write_pfm(np.where(np.isfinite(d), d, 0.0).astype(np.float32), out / f"{o.id}_depth.pfm")
        write_pgm(np.isfinite(d), out / f"{o.id}_silhouette.pgm")
        for name, m in (("near", pre.maps.near[i]), ("far", pre.maps.far[i])):
            write_pfm(np.where(np.isfinite(m), m, 0.0).astype(np.float32), out / f"{o.id}_{name}.pfm")
    print(f"wrote maps for {len(ctx.objects)} objects to {out}")
    return EXIT_OK


def _cmd_validate(a) -> int:
    from .pipeline import load_run

    ctx = load_run(a.config)
    print(f"ok: {len(ctx.objects)} objects, {len(ctx.frames)} frames")
    return EXIT_OK


def main(argv=None) -> int:
    from pydantic import ValidationError

    from .pipeline.load import RunValidationError

    try:
        a = _parser().parse_args(argv)
    except _UsageError:
        return EXIT_INVALID
    except SystemExit as e:  # --help
        return EXIT_OK if e.code in (0, None) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    threads = a.threads
    if threads is not None:
        if threads < 1:
            print("error: --threads must be at least 1", file=sys.stderr)
            return EXIT_INVALID
        from ._parallel import set_threads

        set_threads(threads)
    try:
        if a.command == "synth":
            return _cmd_synth(a)
        if a.command == "validate":
            return _cmd_validate(a)
        return {"optimize": _cmd_optimize, "eval": _cmd_eval, "render": _cmd_render}[a.command](a, threads)
    except RunValidationError as e:
        for f, reason in e.problems:
            print(f"invalid: {f}: {reason}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as e:
        print(f"invalid: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001 - the CLI maps every failure to an exit code
        logging.getLogger(__name__).debug("runtime failure", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
