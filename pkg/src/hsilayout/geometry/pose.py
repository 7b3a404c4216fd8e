from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriMesh

TWO_PI = 2.0 * np.pi


class InvalidParameterError(ValueError):
    pass


def rotation_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


@dataclass(frozen=True)
class PoseParams:
    """Per-axis scale, yaw about +y and translation.

    Applied as ``v' = R_y(yaw) @ (scale * v) + translation``; this is the only
    pose convention used anywhere in the package.
    """

    scale: np.ndarray
    yaw: float
    translation: np.ndarray

    def __post_init__(self):
        s = np.array(self.scale, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(s)) or np.any(s <= 0):
            raise InvalidParameterError(f"scale must be positive, got {s.tolist()}")
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        s.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "yaw", float(np.mod(float(self.yaw), TWO_PI)))

    @classmethod
    def identity(cls) -> "PoseParams":
        return cls(np.ones(3), 0.0, np.zeros(3))

    @property
    def rotation(self) -> np.ndarray:
        return rotation_y(self.yaw)

    def to_dict(self) -> dict:
        return {"scale": self.scale.tolist(), "yaw": self.yaw, "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PoseParams":
        return cls(d["scale"], d["yaw"], d["translation"])


def pose_points(points: np.ndarray, pose: PoseParams) -> np.ndarray:
    p = np.asarray(points, dtype=np.float64)
    return (p * pose.scale) @ pose.rotation.T + pose.translation


def apply_pose(mesh: TriMesh, pose: PoseParams) -> TriMesh:
    return mesh.with_vertices(pose_points(mesh.vertices, pose))


def invert_rigid(pose: PoseParams) -> PoseParams:
    """Inverse of a unit-scale pose, as a pose."""
    if not np.allclose(pose.scale, 1.0):
        raise InvalidParameterError("only unit-scale poses have a pose inverse")
    t = -rotation_y(-pose.yaw) @ pose.translation
    return PoseParams(np.ones(3), -pose.yaw, t)
