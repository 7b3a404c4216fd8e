"""Pinhole camera at the world origin with pitch and roll."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..geometry.pose import InvalidParameterError

NEAR_EPS = 1e-4

# world is y-up and looks down -z; image space is x right, y down, z forward
_FLIP = np.diag([1.0, -1.0, -1.0])


def camera_rotation(pitch: float, roll: float) -> np.ndarray:
    """World-to-camera rotation. Positive pitch tilts the view downward."""
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
    rz = np.array([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]])
    return _FLIP @ rz @ rx


@dataclass(frozen=True)
class PinholeCamera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    pitch: float = 0.0
    roll: float = 0.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidParameterError("focal lengths must be positive")
        if abs(self.pitch) >= np.pi / 2 or abs(self.roll) >= np.pi / 2:
            raise InvalidParameterError("|pitch| and |roll| must be below pi/2")
        if self.width <= 0 or self.height <= 0:
            raise InvalidParameterError("image size must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def rotation(self) -> np.ndarray:
        return camera_rotation(self.pitch, self.roll)

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0, self.cx], [0, self.fy, self.cy], [0, 0, 1.0]])

    def with_orientation(self, pitch: float, roll: float) -> "PinholeCamera":
        return replace(self, pitch=float(pitch), roll=float(roll))

    def world_to_camera(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T

    def camera_to_world(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation

    def project_camera(self, pc: np.ndarray):
        """Project camera-frame points. Returns (uv, depth, valid)."""
        pc = np.asarray(pc, dtype=np.float64).reshape(-1, 3)
        z = pc[:, 2]
        valid = z > NEAR_EPS
        zs = np.where(valid, z, 1.0)
        uv = np.stack([self.fx * pc[:, 0] / zs + self.cx, self.fy * pc[:, 1] / zs + self.cy], axis=1)
        uv[~valid] = np.nan
        return uv, z, valid

    def project(self, points):
        """Project world points to pixels (u, v) plus camera depth and a validity flag."""
        return self.project_camera(self.world_to_camera(points))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("fx", "fy", "cx", "cy", "width", "height", "pitch", "roll")}
