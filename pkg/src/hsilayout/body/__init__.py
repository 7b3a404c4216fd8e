from .frames import PELVIS, BodyFrame, load_frame, save_frame
from .refine import RefineWeights, object_sdfs, refine_body_placement
from .robust import (
    feet_loss,
    foot_heights,
    foot_points,
    geman_mcclure,
    second_differences,
    smoothness_loss,
    smoothness_terms,
)
from .trajectory import (
    TrajectoryFilterConfig,
    filter_outlier_frames,
    frame_accelerations,
    segments,
    smooth_trajectories,
)

__all__ = [
    "PELVIS", "BodyFrame", "RefineWeights", "TrajectoryFilterConfig", "feet_loss", "filter_outlier_frames", "foot_heights",
    "foot_points", "frame_accelerations", "geman_mcclure", "load_frame", "object_sdfs", "refine_body_placement", "save_frame", "second_differences",
    "segments", "smooth_trajectories", "smoothness_loss", "smoothness_terms",
]
