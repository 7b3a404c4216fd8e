"""Run configuration and scene manifest schemas."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..hsi.contact import CATEGORIES
from ..optim.problem import TERMS
from ..optim.stages import DEFAULT_STAGES, STAGE_ORDER, StageConfig

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class StageOverride(_Strict):
    stage: Literal["scene-init", "cam-ground", "full-hsi"]
    iterations: Optional[int] = Field(default=None, gt=0)
    step: Optional[float] = Field(default=None, gt=0)
    weights: Optional[dict[str, float]] = None

    @field_validator("weights")
    @classmethod
    def _weights(cls, w):
        if w is None:
            return w
        unknown = set(w) - set(TERMS)
        if unknown:
            raise ValueError(f"unknown loss terms {sorted(unknown)}")
        if any(v < 0 for v in w.values()):
            raise ValueError("loss weights must be non-negative")
        return w


class Thresholds(_Strict):
    tau_pelvis: float = Field(default=0.05, gt=0)
    tau_local: float = Field(default=0.08, gt=0)
    r_3d: float = Field(default=0.5, gt=0)
    dilation_px: int = Field(default=5, ge=0)
    region_angle_deg: float = Field(default=30.0, gt=0, lt=90)
    seat_height: float = Field(default=0.6, gt=0, le=1)
    back_height: float = Field(default=0.5, ge=0, lt=1)
    smoothing_lambda: float = Field(default=10.0, ge=0)
    ground_threshold: float = Field(default=0.0, ge=0)


class SdfSettings(_Strict):
    resolution: int = Field(default=256, ge=8)
    padding: float = Field(default=0.2, ge=0)


def _default_stages() -> list[StageOverride]:
    return [StageOverride(stage=s) for s in STAGE_ORDER]


class RunConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    manifest: str
    frames_dir: Optional[str] = None  # frame paths resolve here instead of the manifest directory
    masks_dir: Optional[str] = None
    gt: Optional[str] = None
    output_dir: str = "out"
    seed: int = 0
    stages: list[StageOverride] = Field(default_factory=_default_stages)
    weights: dict[str, float] = Field(default_factory=dict)  # overrides full-hsi weights
    thresholds: Thresholds = Field(default_factory=Thresholds)
    sdf: SdfSettings = Field(default_factory=SdfSettings)
    soft_silhouette: bool = True
    refine_bodies: bool = True

    # resolved at load time; not part of the file
    base_dir: Path = Field(default=Path("."), exclude=True)

    @field_validator("weights")
    @classmethod
    def _weights(cls, w):
        return StageOverride._weights(w)

    @model_validator(mode="after")
    def _stage_order(self):
        names = [s.stage for s in self.stages]
        if names != sorted(names, key=STAGE_ORDER.index) or len(set(names)) != len(names):
            raise ValueError(f"stages must be distinct and ordered as {list(STAGE_ORDER)}")
        return self

    def path(self, p: str | None) -> Path | None:
        if p is None:
            return None
        q = Path(p)
        return q if q.is_absolute() else self.base_dir / q

    def stage_configs(self, only: str | None = None) -> list[StageConfig]:
        out = []
        for s in self.stages:
            if only is not None and s.stage != only:
                continue
            base = DEFAULT_STAGES[s.stage]
            weights = dict(base.weights)
            if s.stage == "full-hsi" and self.weights:
                weights.update(self.weights)
            if s.weights is not None:
                weights.update(s.weights)
            out.append(StageConfig(s.stage, weights, base.groups, s.iterations or base.iterations,
                                   s.step or base.step))
        return out

    def fingerprint(self) -> dict:
        """Settings that change precomputed data."""
        return {"thresholds": self.thresholds.model_dump(), "sdf": self.sdf.model_dump()}


def load_config(path) -> RunConfig:
    path = Path(path)
    data = json.loads(path.read_text())
    cfg = RunConfig.model_validate(data)
    cfg.base_dir = path.resolve().parent
    return cfg


class CameraEntry(_Strict):
    fx: float = Field(gt=0)
    fy: float = Field(gt=0)
    cx: float
    cy: float
    width: int = Field(gt=0)
    height: int = Field(gt=0)
    pitch: float = 0.0
    roll: float = 0.0


class PoseEntry(_Strict):
    scale: list[float] = Field(min_length=3, max_length=3)
    yaw: float
    translation: list[float] = Field(min_length=3, max_length=3)


class BoxEntry(_Strict):
    x_min: float
    y_min: float
    width: float = Field(gt=0)
    height: float = Field(gt=0)


class ObjectEntry(_Strict):
    id: str
    category: str
    mesh: str
    mask: str
    pose: PoseEntry
    detected_box: BoxEntry

    @field_validator("category")
    @classmethod
    def _category(cls, c):
        if c not in CATEGORIES:
            raise ValueError(f"unknown category {c!r}; expected one of {list(CATEGORIES)}")
        return c


class FrameEntry(_Strict):
    mesh: str
    data: str
    person_mask: str


class SceneManifest(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    camera: CameraEntry
    y_gp: float
    objects: list[ObjectEntry] = Field(min_length=1)
    frames: list[FrameEntry] = Field(min_length=1)
    init_person_mask: Optional[str] = None  # people visible in the initialisation image

    @model_validator(mode="after")
    def _unique_ids(self):
        ids = [o.id for o in self.objects]
        dup = sorted({i for i in ids if ids.count(i) > 1})
        if dup:
            raise ValueError(f"duplicate object ids {dup}")
        return self
