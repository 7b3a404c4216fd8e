"""Load and validate a run: config, manifest, meshes, masks and frames."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from ..body.frames import BodyFrame, load_frame
from ..geometry.mesh import InvalidMeshError, TriMesh, read_obj, validate_watertight
from ..geometry.pose import PoseParams
from ..raster.camera import PinholeCamera
from ..raster.imageio import read_pgm
from .config import RunConfig, SceneManifest, load_config


class RunValidationError(ValueError):
    """Every problem found while loading, each as (file, reason)."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("\n".join(f"{f}: {r}" for f, r in problems))


@dataclass(eq=False)
class ObjectInput:
    id: str
    category: str
    mesh: TriMesh
    init_pose: PoseParams
    detected_box: np.ndarray
    mask: np.ndarray


@dataclass(eq=False)
class GroundTruth:
    cam: PinholeCamera
    y_gp: float
    ids: list
    categories: list
    meshes: list
    poses: list
    extra: dict = field(default_factory=dict)


@dataclass(eq=False)
class RunContext:
    config: RunConfig
    manifest: SceneManifest
    manifest_path: Path
    cam: PinholeCamera  # initial pitch and roll
    y_gp: float
    objects: list
    frames: list
    person_masks: list
    init_person_mask: np.ndarray
    input_files: list  # every file the run reads, for cache keys
    gt: GroundTruth | None = None

    @property
    def object_masks(self) -> np.ndarray:
        return np.stack([o.mask for o in self.objects])


def _read_manifest(path: Path, problems) -> SceneManifest | None:
    try:
        return SceneManifest.model_validate(json.loads(path.read_text()))
    except FileNotFoundError:
        problems.append((str(path), "manifest file not found"))
    except json.JSONDecodeError as e:
        problems.append((str(path), f"invalid JSON: {e}"))
    except PydanticValidationError as e:
        for err in e.errors():
            loc = ".".join(str(x) for x in err["loc"])
            problems.append((str(path), f"{loc}: {err['msg']}"))
    return None


def _mesh(path: Path, label: str, problems) -> TriMesh | None:
    try:
        mesh = read_obj(path)
    except FileNotFoundError:
        problems.append((str(path), f"{label}: mesh file not found"))
        return None
    except (InvalidMeshError, ValueError, UnicodeDecodeError) as e:
        problems.append((str(path), f"{label}: {e}"))
        return None
    rep = validate_watertight(mesh)
    if not rep.is_watertight:
        problems.append((str(path), f"{label} is not watertight: {len(rep.boundary_edges)} boundary edges, "
                                    f"{len(rep.nonmanifold_edges)} non-manifold edges"))
        return None
    return mesh


def _mask(path: Path, shape, label: str, problems) -> np.ndarray | None:
    try:
        m = read_pgm(path).astype(bool)
    except FileNotFoundError:
        problems.append((str(path), f"{label}: mask file not found"))
        return None
    except ValueError as e:
        problems.append((str(path), f"{label}: {e}"))
        return None
    if m.shape != tuple(shape):
        problems.append((str(path), f"{label}: mask is {m.shape[1]}x{m.shape[0]}, camera is {shape[1]}x{shape[0]}"))
        return None
    return m


def load_ground_truth(path: Path) -> GroundTruth:
    data = json.loads(path.read_text())
    c = data["camera"]
    cam = PinholeCamera(c["fx"], c["fy"], c["cx"], c["cy"], c["width"], c["height"], c["pitch"], c["roll"])
    meshes, poses, ids, cats = [], [], [], []
    for o in data["objects"]:
        meshes.append(read_obj(path.parent / o["mesh"]))
        poses.append(PoseParams.from_dict(o["pose"]))
        ids.append(o["id"])
        cats.append(o["category"])
    extra = {k: v for k, v in data.items() if k not in ("camera", "objects", "y_gp")}
    return GroundTruth(cam, float(data["y_gp"]), ids, cats, meshes, poses, extra)


def load_run(config) -> RunContext:
    """Parse the config and manifest and validate every referenced file.

    All problems are collected and raised together as a ``RunValidationError``.
    """
    problems: list[tuple[str, str]] = []
    if isinstance(config, (str, Path)):
        try:
            config = load_config(config)
        except FileNotFoundError:
            raise RunValidationError([(str(config), "config file not found")]) from None
        except (json.JSONDecodeError, PydanticValidationError) as e:
            raise RunValidationError([(str(config), str(e))]) from None
    mpath = config.path(config.manifest)
    man = _read_manifest(mpath, problems)
    if man is None:
        raise RunValidationError(problems)
    root = mpath.parent
    frames_root = config.path(config.frames_dir) or root
    masks_root = config.path(config.masks_dir) or root
    c = man.camera
    cam = PinholeCamera(c.fx, c.fy, c.cx, c.cy, c.width, c.height, c.pitch, c.roll)
    files = [mpath]

    objects = []
    for o in man.objects:
        mesh_path, mask_path = root / o.mesh, masks_root / o.mask
        files += [mesh_path, mask_path]
        mesh = _mesh(mesh_path, f"object {o.id!r}", problems)
        mask = _mask(mask_path, cam.shape, f"object {o.id!r}", problems)
        try:
            pose = PoseParams(o.pose.scale, o.pose.yaw, o.pose.translation)
        except ValueError as e:
            problems.append((str(mpath), f"object {o.id!r}: {e}"))
            pose = None
        if mesh is not None and mask is not None and pose is not None:
            box = o.detected_box
            objects.append(ObjectInput(o.id, o.category, TriMesh(mesh.vertices, mesh.faces, name=o.id), pose,
                                       np.array([box.x_min, box.y_min, box.width, box.height]), mask))

    frames, person = [], []
    for k, fe in enumerate(man.frames):
        mp, dp, pp = frames_root / fe.mesh, frames_root / fe.data, frames_root / fe.person_mask
        files += [mp, dp, pp]
        label = f"frame {k}"
        mask = _mask(pp, cam.shape, label, problems)
        if not mp.exists():
            problems.append((str(mp), f"{label}: mesh file not found"))
            continue
        if not dp.exists():
            problems.append((str(dp), f"{label}: frame data file not found"))
            continue
        try:
            frame = load_frame(mp, dp)
        except (InvalidMeshError, ValueError, KeyError) as e:
            problems.append((str(dp), f"{label}: {e}"))
            continue
        rep = validate_watertight(frame.mesh)
        if not rep.is_watertight:
            problems.append((str(mp), f"{label}: body mesh is not watertight"))
            continue
        if frames and frame.timestamp <= frames[-1].timestamp:
            problems.append((str(dp), f"{label}: timestamp {frame.timestamp} does not increase"))
        if mask is not None:
            frames.append(frame)
            person.append(mask)

    init_person = np.zeros(cam.shape, dtype=bool)
    if man.init_person_mask is not None:
        p = masks_root / man.init_person_mask
        files.append(p)
        m = _mask(p, cam.shape, "init person mask", problems)
        if m is not None:
            init_person = m

    gt = None
    if config.gt is not None:
        gp = config.path(config.gt)
        if not gp.exists():
            problems.append((str(gp), "ground-truth file not found"))
        else:
            try:
                gt = load_ground_truth(gp)
            except (KeyError, ValueError, OSError) as e:
                problems.append((str(gp), f"invalid ground truth: {e}"))
    if problems:
        raise RunValidationError(problems)
    return RunContext(config, man, mpath, cam, float(man.y_gp), objects, frames, person, init_person, files, gt)
