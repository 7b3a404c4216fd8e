"""Randomised synthetic scenes with exactly known ground truth."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..body.frames import BodyFrame, save_frame
from ..geometry.boxes import OrientedBox, box_from_mesh, clip_convex, polygon_area
from ..geometry.mesh import TriMesh, write_obj
from ..geometry.pose import PoseParams, apply_pose
from ..hsi.scene_terms import projected_box
from ..raster.camera import PinholeCamera
from ..raster.imageio import write_pgm
from ..raster.render import render_depth
from . import bodies as B
from .furniture import FurnitureSpec, furniture_mesh, sample_spec

CATEGORY_WEIGHTS = {"chair": 0.45, "sofa": 0.2, "bed": 0.1, "table": 0.25}
SEGMENT_SPACING = 10  # timestamp jump between scripted segments
FRONT_LANE_Z = -2.1
BACK_LANE_Z = -6.8
FREE_MARGIN = 0.45  # clearance kept around furniture for the interacting body
LANE_CLEARANCE = 0.35
MIN_MASK_PIXELS = 30


@dataclass
class SynthOptions:
    n_objects: int | None = None  # None draws 3 to 5
    n_frames: int = 60
    width: int = 192
    height: int = 144
    focal: float = 144.0
    camera_height: float = 1.3
    pitch_deg: tuple = (0.0, 8.0)
    roll_deg: tuple = (-3.0, 3.0)
    translation_noise: float = 0.2
    yaw_noise_deg: float = 15.0
    scale_noise: float = 0.1
    init_level_camera: bool = False  # start the camera at zero pitch and roll
    ground_offset: float = 0.0  # magnitude of the initial ground-height error
    teleports: int = 0
    max_attempts: int = 100

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pitch_deg"] = list(self.pitch_deg)
        d["roll_deg"] = list(self.roll_deg)
        return d


class SynthesisError(RuntimeError):
    pass


@dataclass
class SyntheticScene:
    camera: PinholeCamera  # ground-truth camera
    y_gp: float
    specs: list
    meshes: list  # canonical
    gt_poses: list
    init_poses: list
    init_pitch: float
    init_roll: float
    init_y_gp: float
    frames: list  # BodyFrame, camera coordinates
    person_masks: list
    object_masks: np.ndarray
    detected_boxes: np.ndarray
    teleported: list = field(default_factory=list)
    seed: int = 0
    attempt: int = 0

    @property
    def categories(self) -> list:
        return [s.category for s in self.specs]


def _footprint(spec: FurnitureSpec, pose: PoseParams, margin: float) -> np.ndarray:
    box = OrientedBox(pose.translation + [0, spec.height / 2, 0],
                      [spec.width / 2 + margin, spec.height / 2, spec.depth / 2 + margin], pose.yaw)
    return box.footprint()


def _sample_layout(rng, n: int):
    cats = list(CATEGORY_WEIGHTS)
    p = np.array(list(CATEGORY_WEIGHTS.values()))
    chosen = ["chair"] + list(rng.choice(cats, size=n - 1, p=p / p.sum()))
    specs, poses, prints = [], [], []
    for cat in chosen:
        spec = sample_spec(str(cat), rng)
        for _ in range(60):
            z = rng.uniform(-6.0, -3.0)
            x = rng.uniform(-0.45, 0.45) * abs(z)
            yaw = np.arctan2(-x, -z) + np.deg2rad(rng.uniform(-40, 40))
            pose = PoseParams(np.ones(3), yaw, [x, 0.0, z])
            fp = _footprint(spec, pose, FREE_MARGIN)
            if fp[:, 1].max() > FRONT_LANE_Z - LANE_CLEARANCE or fp[:, 1].min() < BACK_LANE_Z + LANE_CLEARANCE:
                continue
            if any(polygon_area(clip_convex(fp, q)) > 0 for q in prints):
                continue
            specs.append(spec)
            poses.append(pose)
            prints.append(fp)
            break
        else:
            return None
    return specs, poses


def _interaction(spec: FurnitureSpec, rng) -> tuple[list, np.ndarray, callable]:
    hw = spec.width / 2
    if spec.category == "table":
        x = rng.uniform(-1, 1) * max(0.0, hw - 0.35)
        parts, joints = B.touching_table(spec, x)
    else:
        # sofa offsets snap to the 5 mm backrest column grid
        x = round(rng.uniform(-1, 1) * max(0.0, hw - 0.3) / 0.005) * 0.005 if spec.category == "sofa" else 0.0
        parts, joints = B.seated(spec, x)
    edge = 0.03

    def keep(p, role):
        ok = np.abs(p[:, 0]) <= hw - edge
        if role == "back":
            ok &= p[:, 1] <= spec.height - edge
        else:
            ok &= (p[:, 2] <= spec.seat_front - edge) & (p[:, 2] >= -spec.depth / 2 + edge)
        return ok

    return parts, joints, keep


def _walk(lane_z: float, x0: float, x1: float, count: int, floor_y: float) -> list:
    parts, joints = B.standing(0.0)
    yaw = np.pi / 2 if x1 > x0 else -np.pi / 2
    return [B.place(parts, joints, yaw, [x, floor_y, lane_z]) for x in np.linspace(x0, x1, count)]


def _split_frames(n_frames: int, n_objects: int) -> tuple[int, list]:
    walk = max(4, n_frames // 5)
    rest = n_frames - 2 * walk
    if rest < n_objects:
        raise SynthesisError(f"{n_frames} frames are too few for {n_objects} interactions")
    per = [rest // n_objects + (1 if i < rest % n_objects else 0) for i in range(n_objects)]
    return walk, per


def _perturb(rng, pose: PoseParams, opts: SynthOptions) -> PoseParams:
    t = pose.translation + rng.uniform(-opts.translation_noise, opts.translation_noise, 3)
    yaw = pose.yaw + np.deg2rad(rng.uniform(-opts.yaw_noise_deg, opts.yaw_noise_deg))
    s = pose.scale * rng.uniform(1 - opts.scale_noise, 1 + opts.scale_noise, 3)
    return PoseParams(s, yaw, t)


def _visible(cam: PinholeCamera, box: OrientedBox) -> bool:
    uv, _, ok = cam.project(box.corners())
    if not ok.all():
        return False
    return bool(np.all(uv[:, 0] >= 1) and np.all(uv[:, 0] <= cam.width - 1)
                and np.all(uv[:, 1] >= 1) and np.all(uv[:, 1] <= cam.height - 1))


def _attempt(rng, opts: SynthOptions, seed: int, attempt: int) -> SyntheticScene | None:
    n = opts.n_objects if opts.n_objects is not None else int(rng.integers(3, 6))
    pitch = np.deg2rad(rng.uniform(*opts.pitch_deg))
    roll = np.deg2rad(rng.uniform(*opts.roll_deg))
    cam = PinholeCamera(opts.focal, opts.focal, opts.width / 2, opts.height / 2, opts.width, opts.height, pitch, roll)
    y_gp = -opts.camera_height
    layout = _sample_layout(rng, n)
    if layout is None:
        return None
    specs, poses = layout
    poses = [PoseParams(p.scale, p.yaw, p.translation + [0, y_gp, 0]) for p in poses]
    meshes = [furniture_mesh(s) for s in specs]
    posed = [apply_pose(m, p) for m, p in zip(meshes, poses)]
    if not all(_visible(cam, box_from_mesh(m, p)) for m, p in zip(meshes, poses)):
        return None

    walk, per = _split_frames(opts.n_frames, n)
    half_front = 0.5 * abs(FRONT_LANE_Z) * opts.width / opts.focal - 0.4
    half_back = 0.5 * abs(BACK_LANE_Z) * opts.width / opts.focal - 0.6
    bodies = []
    bodies.append(_walk(FRONT_LANE_Z, -half_front, half_front, walk, y_gp))
    bodies.append(_walk(BACK_LANE_Z, half_back, -half_back, walk, y_gp))
    for spec, pose, count in zip(specs, poses, per):
        parts, joints, keep = _interaction(spec, rng)
        body = B.place(parts, joints, pose.yaw, pose.translation, keep)
        bodies.append([body] * count)

    teleported = []
    if opts.teleports:
        # isolated interior frames of the front walk, at least two apart
        candidates = list(range(2, walk - 2, 3))
        if opts.teleports > len(candidates):
            raise SynthesisError(f"cannot place {opts.teleports} isolated teleports in a {walk}-frame walk")
        picks = sorted(rng.choice(candidates, size=opts.teleports, replace=False).tolist())
        for k in picks:
            b = bodies[0][k]
            jump = np.array([0.0, 0.0, 1.0])
            bodies[0][k] = B.PosedBody(b.mesh.translated(jump), b.joints + jump, b.feet, b.contacts)
        teleported = picks

    R = cam.rotation
    frames = []
    t = 0
    for seg in bodies:
        for b in seg:
            c = b.transformed(R)
            frames.append(BodyFrame(t, c.mesh, c.joints, c.feet, c.contacts))
            t += 1
        t += SEGMENT_SPACING

    depths = np.stack([render_depth(cam, m) for m in posed])
    scene = depths.min(axis=0)
    owner = np.where(np.isfinite(scene), depths.argmin(axis=0), -1)
    masks = np.stack([owner == i for i in range(n)])
    if masks.reshape(n, -1).sum(axis=1).min() < MIN_MASK_PIXELS:
        return None
    person = []
    for f in frames:
        d = render_depth(cam, f.mesh, "front", camera_frame=True)
        person.append(np.isfinite(d) & (d < scene))
    boxes = np.stack([projected_box(cam, box_from_mesh(m, p)) for m, p in zip(meshes, poses)])

    init = [_perturb(rng, p, opts) for p in poses]
    if opts.init_level_camera:
        p0, r0 = 0.0, 0.0
    else:
        p0, r0 = pitch, roll
    y0 = y_gp + (rng.choice([-1.0, 1.0]) * opts.ground_offset if opts.ground_offset else 0.0)
    return SyntheticScene(cam, y_gp, specs, meshes, poses, init, p0, r0, y0, frames, person, masks, boxes,
                          teleported, seed, attempt)


def generate_scene(seed: int, opts: SynthOptions | None = None, start_attempt: int = 0) -> SyntheticScene:
    """Draw a scene; failed layouts are redrawn from a derived seed."""
    opts = opts or SynthOptions()
    for attempt in range(start_attempt, opts.max_attempts):
        rng = np.random.default_rng([seed, attempt])
        scene = _attempt(rng, opts, seed, attempt)
        if scene is not None:
            return scene
    raise SynthesisError(f"no valid layout for seed {seed} after {opts.max_attempts} attempts")


def write_fixture(scene: SyntheticScene, directory, opts: SynthOptions | None = None) -> Path:
    """Write a scene as manifest + meshes + masks + frames, plus ground truth in ``gt.json``."""
    root = Path(directory)
    for sub in ("objects", "masks", "frames"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    cam = scene.camera
    objects = []
    for i, (mesh, cat) in enumerate(zip(scene.meshes, scene.categories)):
        write_obj(mesh, root / "objects" / f"obj_{i:02d}.obj")
        write_pgm(scene.object_masks[i], root / "masks" / f"obj_{i:02d}.pgm")
        x, y, w, h = scene.detected_boxes[i].tolist()
        objects.append({
            "id": f"obj_{i:02d}", "category": cat, "mesh": f"objects/obj_{i:02d}.obj",
            "mask": f"masks/obj_{i:02d}.pgm", "pose": scene.init_poses[i].to_dict(),
            "detected_box": {"x_min": x, "y_min": y, "width": w, "height": h},
        })
    frames = []
    for k, (f, pm) in enumerate(zip(scene.frames, scene.person_masks)):
        entry = save_frame(f, root / "frames", f"f_{k:04d}")
        write_pgm(pm, root / "frames" / f"f_{k:04d}_person.pgm")
        frames.append({"mesh": f"frames/{entry['mesh']}", "data": f"frames/{entry['data']}",
                       "person_mask": f"frames/f_{k:04d}_person.pgm"})
    intr = {k: getattr(cam, k) for k in ("fx", "fy", "cx", "cy", "width", "height")}
    manifest = {
        "schema_version": 1,
        "camera": {**intr, "pitch": scene.init_pitch, "roll": scene.init_roll},
        "y_gp": scene.init_y_gp,
        "objects": objects,
        "frames": frames,
    }
    gt = {
        "schema_version": 1,
        "seed": scene.seed,
        "attempt": scene.attempt,
        "camera": cam.to_dict(),
        "y_gp": scene.y_gp,
        "objects": [{"id": o["id"], "category": o["category"], "mesh": o["mesh"], "pose": p.to_dict()}
                    for o, p in zip(objects, scene.gt_poses)],
        "teleported_frames": scene.teleported,
    }
    if opts is not None:
        gt["options"] = opts.to_dict()
    (root / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    (root / "gt.json").write_text(json.dumps(gt, indent=1) + "\n")
    return root
