"""Per-timestep body observations."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..geometry.mesh import InvalidMeshError, TriMesh, read_obj, write_obj

PELVIS = 0


def _index_array(x) -> np.ndarray:
    a = np.array(x if x is not None else [], dtype=np.int64).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BodyFrame:
    """One body observation.

    The mesh and joints are in camera coordinates (x right, y down, z forward),
    which is how a monocular body estimator reports them. Gravity-aligned
    world coordinates depend on the current camera pitch and roll.
    """

    timestamp: int
    mesh: TriMesh
    joints: np.ndarray
    feet_contacts: np.ndarray
    body_contacts: np.ndarray

    def __post_init__(self):
        j = np.array(self.joints, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(j)):
            raise ValueError(f"frame {self.timestamp}: joints must be finite")
        j.setflags(write=False)
        object.__setattr__(self, "joints", j)
        object.__setattr__(self, "timestamp", int(self.timestamp))
        for name in ("feet_contacts", "body_contacts"):
            idx = _index_array(getattr(self, name))
            if idx.size and (idx.min() < 0 or idx.max() >= self.mesh.n_vertices):
                raise InvalidMeshError(f"frame {self.timestamp}: {name} index out of range")
            object.__setattr__(self, name, idx)

    @property
    def pelvis(self) -> np.ndarray:
        return self.joints[PELVIS]

    def translated(self, delta) -> "BodyFrame":
        d = np.asarray(delta, dtype=np.float64)
        return replace(self, mesh=self.mesh.translated(d), joints=self.joints + d)


def save_frame(frame: BodyFrame, directory, stem: str) -> dict:
    directory = Path(directory)
    write_obj(frame.mesh, directory / f"{stem}.obj")
    meta = {
        "timestamp": frame.timestamp,
        "joints": frame.joints.tolist(),
        "feet_contacts": frame.feet_contacts.tolist(),
        "body_contacts": frame.body_contacts.tolist(),
    }
    (directory / f"{stem}.json").write_text(json.dumps(meta) + "\n")
    return {"mesh": f"{stem}.obj", "data": f"{stem}.json"}


def load_frame(mesh_path, data_path) -> BodyFrame:
    meta = json.loads(Path(data_path).read_text())
    return BodyFrame(meta["timestamp"], read_obj(mesh_path), meta["joints"],
                     meta.get("feet_contacts", []), meta.get("body_contacts", []))
