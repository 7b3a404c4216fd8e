"""Configuration, loading, precomputation and stage orchestration."""

from .config import RunConfig, SceneManifest, load_config
from .load import GroundTruth, RunContext, RunValidationError, load_ground_truth, load_run
from .precompute import CACHE_ENV, Precomputed, PrecomputeError, precompute
from .run import RunResult, build_problem, initial_layout, run_pipeline

__all__ = [
    "RunConfig", "SceneManifest", "load_config", "GroundTruth", "RunContext", "RunValidationError",
    "load_ground_truth", "load_run", "CACHE_ENV", "Precomputed", "PrecomputeError", "precompute",
    "RunResult", "build_problem", "initial_layout", "run_pipeline",
]
