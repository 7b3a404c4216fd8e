"""Stage definitions and the masked Adam loop."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .adam import AdamState, adam_step
from .problem import TERMS, LayoutProblem

log = logging.getLogger(__name__)

STAGE_ORDER = ("scene-init", "cam-ground", "full-hsi")
DIVERGENCE_FACTOR = 1e6
DIVERGENCE_FLOOR = 1.0  # absolute floor so a start at zero loss is not read as divergence


@dataclass(frozen=True)
class StageConfig:
    stage: str
    weights: dict
    groups: tuple
    iterations: int
    step: float = 0.002

    def __post_init__(self):
        if self.stage not in STAGE_ORDER:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.iterations <= 0:
            raise ValueError("iterations must be positive")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("loss weights must be non-negative")
        unknown = set(self.weights) - set(TERMS)
        if unknown:
            raise ValueError(f"unknown loss terms {sorted(unknown)}")
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "weights", dict(self.weights))


FULL_HSI_WEIGHTS = {"bbox": 1000.0, "occ_sil": 0.3, "scale": 1000.0, "depth": 8.0, "collision": 1000.0, "contact": 1e5}

DEFAULT_STAGES = {
    "scene-init": StageConfig("scene-init", {"occ_sil": 1.0, "bbox": 1000.0, "scale": 1000.0}, ("objects",), 500),
    "cam-ground": StageConfig("cam-ground", {"feet": 1.0}, ("camera", "ground"), 300),
    "full-hsi": StageConfig("full-hsi", FULL_HSI_WEIGHTS, ("objects",), 3000),
}


class DivergenceError(RuntimeError):
    def __init__(self, message: str, trace: "LossTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass
class LossTrace:
    terms: tuple
    rows: list = field(default_factory=list)

    def append(self, iteration: int, total: float, values: dict) -> None:
        self.rows.append((iteration, total, tuple(values.get(t, 0.0) for t in self.terms)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "total", *self.terms])
        for it, total, vals in self.rows:
            w.writerow([it, repr(float(total)), *(repr(float(v)) for v in vals)])
        return buf.getvalue()

    @property
    def totals(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])


@dataclass
class StageResult:
    stage: str
    x: np.ndarray
    best_loss: float
    best_iteration: int
    trace: LossTrace


def run_stage(problem: LayoutProblem, x0, cfg: StageConfig, threads: int | None = None,
              progress_every: int = 0) -> StageResult:
    """Adam over the stage's parameter groups; returns the best iterate seen.

    Iteration k records the loss at the k-th iterate before stepping; the final
    iterate is evaluated too, so the trace has ``iterations + 1`` rows.
    """
    mask = problem.layout.mask(cfg.groups)
    terms = tuple(t for t in TERMS if cfg.weights.get(t, 0) != 0)
    trace = LossTrace(terms)
    x = np.array(x0, dtype=np.float64, copy=True)
    state = AdamState.zeros(len(x))
    best_x, best_loss, best_it = x.copy(), np.inf, 0
    initial = None
    for it in range(cfg.iterations + 1):
        ev = problem.evaluate(x, cfg.weights)
        trace.append(it, ev.total, ev.terms)
        if initial is None:
            initial = ev.total
        if ev.total > DIVERGENCE_FACTOR * max(initial, DIVERGENCE_FLOOR):
            raise DivergenceError(f"{cfg.stage} diverged at iteration {it}: loss {ev.total:.6g}", trace)
        if ev.total < best_loss:
            best_x, best_loss, best_it = x.copy(), ev.total, it
        if progress_every and it % progress_every == 0:
            log.info("%s iter %d loss %.6g", cfg.stage, it, ev.total)
        if it == cfg.iterations:
            break
        g = problem.gradient(x, cfg.weights, mask=mask, base=ev, threads=threads)
        x, state = adam_step(x, g, state, cfg.step, mask=mask)
    return StageResult(cfg.stage, best_x, float(best_loss), best_it, trace)


def stage_with(cfg: StageConfig, **overrides) -> StageConfig:
    return replace(cfg, **overrides)
