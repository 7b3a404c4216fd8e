"""Everything derived from the bodies before optimisation, cached by content hash."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .._parallel import pmap
from ..body.frames import BodyFrame
from ..body.trajectory import TrajectoryFilterConfig, filter_outlier_frames, smooth_trajectories
from ..geometry.pose import apply_pose
from ..hsi.contact import (ContactAssignment, ContactParams, ContactRegions, assign_contacts,
                           extract_contact_regions, split_contacts)
from ..hsi.depth import DepthRangeMaps, accumulate_depth_ranges, frame_depth_ranges
from ..sdf import GridSpec, SdfVolume, build_global_sdf, grid_from_bodies
from .load import RunContext

log = logging.getLogger(__name__)

CACHE_ENV = "HSILAYOUT_CACHE_DIR"
CACHE_VERSION = "precompute-v1"


class PrecomputeError(RuntimeError):
    pass


@dataclass(eq=False)
class Precomputed:
    retained: np.ndarray  # indices into the loaded frames
    frames: list  # retained, smoothed, camera coordinates
    maps: DepthRangeMaps
    sdf: SdfVolume
    assignment: ContactAssignment
    regions: list
    contacts: list  # ObjectContacts per object
    foot_points: np.ndarray  # camera coordinates
    key: str
    from_cache: bool = False


def contact_params(ctx: RunContext) -> ContactParams:
    t = ctx.config.thresholds
    return ContactParams(t.region_angle_deg, t.seat_height, t.back_height, t.r_3d, t.dilation_px)


def cache_key(ctx: RunContext) -> str:
    h = hashlib.sha256()
    h.update(CACHE_VERSION.encode())
    h.update(json.dumps(ctx.config.fingerprint(), sort_keys=True).encode())
    for p in ctx.input_files:
        h.update(Path(p).name.encode())
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def cache_dir(ctx: RunContext) -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return ctx.config.path(ctx.config.output_dir) / "cache"


def _unique_meshes(frames) -> list:
    seen, out = set(), []
    for f in frames:
        k = hashlib.sha1(f.mesh.vertices.tobytes()).hexdigest()
        if k not in seen:
            seen.add(k)
            out.append(f.mesh)
    return out


def _compute(ctx: RunContext, threads):
    t = ctx.config.thresholds
    kept = filter_outlier_frames(ctx.frames, TrajectoryFilterConfig(t.tau_pelvis, t.tau_local))
    if not kept:
        raise PrecomputeError("no frames survive outlier filtering")
    dropped = sorted(set(range(len(ctx.frames))) - set(kept))
    if dropped:
        log.info("dropping %d outlier frames: %s", len(dropped), dropped)
    raw = [ctx.frames[i] for i in kept]
    smooth = smooth_trajectories(raw, t.smoothing_lambda)
    deltas = np.stack([s.pelvis - r.pelvis for s, r in zip(smooth, raw)])
    joints = np.stack([s.joints for s in smooth])

    masks = ctx.object_masks
    per_frame = pmap(lambda k: frame_depth_ranges(ctx.cam, smooth[k].mesh, ctx.person_masks[kept[k]], masks),
                     range(len(smooth)), threads)
    maps = accumulate_depth_ranges(per_frame)

    bodies = _unique_meshes(smooth)
    spec = grid_from_bodies(bodies, ctx.config.sdf.resolution, ctx.config.sdf.padding)
    sdf = build_global_sdf(bodies, spec, threads)

    posed = [apply_pose(o.mesh, o.init_pose) for o in ctx.objects]
    assignment = assign_contacts(smooth, ctx.cam, masks, posed, contact_params(ctx))
    arrays = {
        "retained": np.asarray(kept, dtype=np.int64),
        "deltas": deltas,
        "joints": joints,
        "near": maps.near,
        "far": maps.far,
        "sdf": sdf.values,
        "sdf_origin": np.asarray(spec.origin),
        "sdf_voxel": np.asarray(spec.voxel),
        "sdf_shape": np.asarray(spec.shape),
        "assign": np.concatenate(assignment.per_frame) if assignment.per_frame else np.zeros(0, np.int64),
        "assign_len": np.array([len(a) for a in assignment.per_frame], dtype=np.int64),
    }
    return arrays


def _restore(ctx: RunContext, arrays, key: str, from_cache: bool) -> Precomputed:
    kept = arrays["retained"].tolist()
    frames = []
    for k, i in enumerate(kept):
        f = ctx.frames[i]
        frames.append(BodyFrame(f.timestamp, f.mesh.translated(arrays["deltas"][k]), arrays["joints"][k],
                                f.feet_contacts, f.body_contacts))
    maps = DepthRangeMaps(arrays["near"], arrays["far"])
    spec = GridSpec(tuple(arrays["sdf_origin"].tolist()), float(arrays["sdf_voxel"]),
                    tuple(int(s) for s in arrays["sdf_shape"]))
    sdf = SdfVolume(spec, arrays["sdf"])
    bounds = np.cumsum(np.concatenate([[0], arrays["assign_len"]]))
    assignment = ContactAssignment(tuple(arrays["assign"][bounds[k]:bounds[k + 1]] for k in range(len(kept))))
    params = contact_params(ctx)
    regions = [extract_contact_regions(o.mesh, o.category, params) for o in ctx.objects]
    contacts = split_contacts(assignment, frames, ctx.cam, len(ctx.objects), regions)
    feet = [f.mesh.vertices[f.feet_contacts] for f in frames]
    foot_points = np.concatenate(feet) if feet else np.zeros((0, 3))
    return Precomputed(np.asarray(kept), frames, maps, sdf, assignment, regions, contacts, foot_points, key,
                       from_cache)


def precompute(ctx: RunContext, threads: int | None = None, use_cache: bool = True) -> Precomputed:
    """Filter, smooth, accumulate depth ranges, build the SDF and assign contacts.

    Results are stored as ``<cache>/<sha256>.npz`` where the hash covers every
    input file and the settings that affect them; a warm cache skips the work.
    """
    key = cache_key(ctx)
    path = cache_dir(ctx) / f"{key}.npz"
    if use_cache and path.exists():
        with np.load(path) as z:
            arrays = {k: z[k] for k in z.files}
        log.info("precompute cache hit %s", path)
        return _restore(ctx, arrays, key, True)
    arrays = _compute(ctx, threads)
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, **arrays)
        os.replace(tmp, path)
    return _restore(ctx, arrays, key, False)
