"""Joint-trajectory smoothing and acceleration-based frame rejection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .frames import PELVIS, BodyFrame
from .robust import second_differences

SEGMENT_GAP = 2  # timestamp jumps larger than this start a new trajectory segment


@dataclass(frozen=True)
class TrajectoryFilterConfig:
    tau_pelvis: float = 0.05
    tau_local: float = 0.08

    def __post_init__(self):
        if not (self.tau_pelvis > 0 and self.tau_local > 0):
            raise ValueError("filter thresholds must be positive")


def segments(timestamps, gap: int = SEGMENT_GAP) -> list[np.ndarray]:
    """Index runs whose consecutive timestamps differ by at most ``gap``."""
    t = np.asarray(timestamps)
    if len(t) == 0:
        return []
    if np.any(np.diff(t) <= 0):
        raise ValueError("frame timestamps must be strictly increasing")
    breaks = np.flatnonzero(np.diff(t) > gap) + 1
    return np.split(np.arange(len(t)), breaks)


def _second_difference_matrix(t: np.ndarray) -> np.ndarray:
    n = len(t)
    D = np.zeros((n - 2, n))
    for r in range(n - 2):
        h1, h2 = t[r + 1] - t[r], t[r + 2] - t[r + 1]
        s = 2.0 / (h1 + h2)
        D[r, r] = s / h1
        D[r, r + 1] = -s * (1.0 / h1 + 1.0 / h2)
        D[r, r + 2] = s / h2
    return D


def smooth_joint_run(joints: np.ndarray, timestamps, lam: float) -> np.ndarray:
    """argmin_J |J - J_obs|^2 + lam |D J|^2 for one run; (T, K, 3) in and out."""
    j = np.asarray(joints, dtype=np.float64)
    n = len(j)
    if lam == 0 or n < 3:
        return j.copy()
    D = _second_difference_matrix(np.asarray(timestamps, dtype=np.float64))
    A = np.eye(n) + lam * D.T @ D
    # A is symmetric pentadiagonal; store its upper bands for the banded Cholesky solve
    ab = np.zeros((3, n))
    for k in range(3):
        ab[2 - k, k:] = np.diagonal(A, k)
    return solveh_banded(ab, j.reshape(n, -1)).reshape(j.shape)


def smooth_trajectories(frames, lam: float = 10.0, gap: int = SEGMENT_GAP) -> list[BodyFrame]:
    """Smooth every joint trajectory; each mesh follows its frame's pelvis correction."""
    if lam < 0:
        raise ValueError("smoothing weight must be non-negative")
    frames = list(frames)
    out = list(frames)
    ts = [f.timestamp for f in frames]
    for run in segments(ts, gap):
        if len(run) < 3:
            continue
        obs = np.stack([frames[i].joints for i in run])
        sm = smooth_joint_run(obs, [ts[i] for i in run], lam)
        for k, i in enumerate(run):
            f = frames[i]
            delta = sm[k, PELVIS] - f.joints[PELVIS]
            out[i] = BodyFrame(f.timestamp, f.mesh.translated(delta), sm[k], f.feet_contacts, f.body_contacts)
    return out


def frame_accelerations(joints: np.ndarray, timestamps) -> tuple[np.ndarray, np.ndarray]:
    """Pelvis acceleration and max root-relative joint acceleration at interior frames."""
    j = np.asarray(joints, dtype=np.float64)
    pel = np.linalg.norm(second_differences(j[:, PELVIS], timestamps), axis=-1)
    local = j - j[:, PELVIS:PELVIS + 1]
    loc = np.linalg.norm(second_differences(local, timestamps), axis=-1)
    return pel, (loc.max(axis=1) if loc.size else np.zeros(len(pel)))


def filter_outlier_frames(frames, config: TrajectoryFilterConfig = TrajectoryFilterConfig(),
                          gap: int = SEGMENT_GAP) -> list[int]:
    """Indices of frames kept after rejecting acceleration spikes.

    Within each segment the interior frame with the largest combined
    acceleration is removed and accelerations are recomputed, until no
    interior frame reaches either threshold. Segment end frames are kept.
    Because the removal order does not depend on the thresholds, looser
    thresholds always keep a superset.
    """
    frames = list(frames)
    ts = np.array([f.timestamp for f in frames])
    keep: list[int] = []
    for run in segments(ts, gap):
        alive = list(run)
        while len(alive) >= 3:
            j = np.stack([frames[i].joints for i in alive])
            pel, loc = frame_accelerations(j, ts[alive])
            bad = (pel >= config.tau_pelvis) | (loc >= config.tau_local)
            if not bad.any():
                break
            worst = int(np.argmax(pel + loc))
            del alive[worst + 1]
        keep.extend(alive)
    return keep
