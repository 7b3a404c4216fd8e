from .adam import AdamState, adam_step
from .gradient import central_gradient, numeric_gradient, richardson
from .params import GROUPS, ParamLayout, SceneLayout
from .problem import OBJECT_TERMS, TERMS, Evaluation, LayoutProblem, NonFiniteLossError, ObjectData, ProblemData
from .stages import (
    DEFAULT_STAGES,
    FULL_HSI_WEIGHTS,
    STAGE_ORDER,
    DivergenceError,
    LossTrace,
    StageConfig,
    StageResult,
    run_stage,
    stage_with,
)

__all__ = [
    "AdamState", "DEFAULT_STAGES", "DivergenceError", "Evaluation", "FULL_HSI_WEIGHTS", "GROUPS", "LayoutProblem",
    "LossTrace", "NonFiniteLossError", "OBJECT_TERMS", "ObjectData", "ParamLayout", "ProblemData", "STAGE_ORDER",
    "SceneLayout", "StageConfig", "StageResult", "TERMS", "adam_step", "central_gradient", "numeric_gradient",
    "richardson", "run_stage", "stage_with",
]
