"""Scene layout state and its flat parameter vector."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..geometry.pose import PoseParams

GROUPS = ("objects", "camera", "ground")
PER_OBJECT = 7  # log-scale x3, yaw, translation x3


@dataclass(frozen=True)
class SceneLayout:
    poses: tuple
    pitch: float = 0.0
    roll: float = 0.0
    y_gp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        for k in ("pitch", "roll", "y_gp"):
            object.__setattr__(self, k, float(getattr(self, k)))

    def with_camera(self, pitch: float, roll: float, y_gp: float) -> "SceneLayout":
        return replace(self, pitch=pitch, roll=roll, y_gp=y_gp)

    def to_dict(self) -> dict:
        return {"objects": [p.to_dict() for p in self.poses], "pitch": self.pitch, "roll": self.roll, "y_gp": self.y_gp}

    @classmethod
    def from_dict(cls, d: dict) -> "SceneLayout":
        return cls(tuple(PoseParams.from_dict(o) for o in d["objects"]), d["pitch"], d["roll"], d["y_gp"])


@dataclass(frozen=True)
class ParamLayout:
    """Index map of the flat vector: 7 entries per object, then pitch, roll, y_gp."""

    n_objects: int

    @property
    def dim(self) -> int:
        return PER_OBJECT * self.n_objects + 3

    def object_slice(self, i: int) -> slice:
        return slice(PER_OBJECT * i, PER_OBJECT * (i + 1))

    @property
    def pitch(self) -> int:
        return PER_OBJECT * self.n_objects

    @property
    def roll(self) -> int:
        return self.pitch + 1

    @property
    def y_gp(self) -> int:
        return self.pitch + 2

    def owner(self, k: int) -> int:
        """Object index owning coordinate ``k``, or -1 for camera and ground entries."""
        return k // PER_OBJECT if k < PER_OBJECT * self.n_objects else -1

    def mask(self, groups) -> np.ndarray:
        m = np.zeros(self.dim, dtype=bool)
        for g in groups:
            if g not in GROUPS:
                raise ValueError(f"unknown parameter group {g!r}")
            if g == "objects":
                m[: PER_OBJECT * self.n_objects] = True
            elif g == "camera":
                m[[self.pitch, self.roll]] = True
            else:
                m[self.y_gp] = True
        return m

    def fd_steps(self, translation: float = 1e-3, angle: float = 1e-3, log_scale: float = 1e-4) -> np.ndarray:
        h = np.empty(self.dim)
        for i in range(self.n_objects):
            s = PER_OBJECT * i
            h[s:s + 3] = log_scale
            h[s + 3] = angle
            h[s + 4:s + 7] = translation
        h[[self.pitch, self.roll]] = angle
        h[self.y_gp] = translation
        return h

    def pack(self, layout: SceneLayout) -> np.ndarray:
        if len(layout.poses) != self.n_objects:
            raise ValueError("layout object count does not match the parameter layout")
        x = np.empty(self.dim)
        for i, p in enumerate(layout.poses):
            x[self.object_slice(i)] = np.concatenate([np.log(p.scale), [p.yaw], p.translation])
        x[self.pitch], x[self.roll], x[self.y_gp] = layout.pitch, layout.roll, layout.y_gp
        return x

    def pose(self, x: np.ndarray, i: int) -> PoseParams:
        b = x[self.object_slice(i)]
        return PoseParams(np.exp(b[:3]), b[3], b[4:7])

    def unpack(self, x: np.ndarray) -> SceneLayout:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a vector of length {self.dim}")
        poses = tuple(self.pose(x, i) for i in range(self.n_objects))
        return SceneLayout(poses, x[self.pitch], x[self.roll], x[self.y_gp])
