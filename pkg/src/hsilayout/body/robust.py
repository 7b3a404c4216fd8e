"""Geman-McClure robustifier and the robust body terms built on it."""

from __future__ import annotations

import logging

import numpy as np

from ..raster.camera import PinholeCamera, camera_rotation

log = logging.getLogger(__name__)

SIGMA_FEET = 0.1
SIGMA_SMOOTH_3D = 0.1
SIGMA_SMOOTH_2D = 100.0


def geman_mcclure(residual, sigma: float) -> float:
    """Sum over components of sigma^2 r^2 / (r^2 + sigma^2)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r2 = np.square(np.asarray(residual, dtype=np.float64))
    s2 = sigma * sigma
    return float(np.sum(s2 * r2 / (r2 + s2)))


def foot_points(frames) -> np.ndarray:
    pts = [f.mesh.vertices[f.feet_contacts] for f in frames if len(f.feet_contacts)]
    return np.concatenate(pts) if pts else np.zeros((0, 3))


def foot_heights(points: np.ndarray, pitch: float, roll: float, y_gp: float) -> np.ndarray:
    """Height above the ground plane of camera-frame points, in the gravity-aligned frame."""
    world = np.asarray(points, dtype=np.float64) @ camera_rotation(pitch, roll)
    return world[:, 1] - y_gp


def feet_loss(pitch: float, roll: float, y_gp: float, frames=None, points=None,
              sigma: float = SIGMA_FEET) -> float:
    """Mean robustified foot-to-ground height over every foot-contact vertex.

    Pass precollected camera-frame foot vertices as ``points`` to skip gathering them.
    """
    pts = foot_points(frames) if points is None else np.asarray(points, dtype=np.float64)
    if len(pts) == 0:
        raise ValueError("feet_loss needs at least one foot-contact vertex")
    return geman_mcclure(foot_heights(pts, pitch, roll, y_gp), sigma) / len(pts)


def second_differences(values: np.ndarray, timestamps=None) -> np.ndarray:
    """Central second differences along axis 0 in units of per-frame^2.

    Uneven timestamp spacing uses the three-point divided difference, which is
    exact (zero) on constant-velocity motion.
    """
    v = np.asarray(values, dtype=np.float64)
    t = np.arange(len(v), dtype=np.float64) if timestamps is None else np.asarray(timestamps, dtype=np.float64)
    if len(v) < 3:
        return np.zeros((0,) + v.shape[1:])
    h1 = (t[1:-1] - t[:-2]).reshape((-1,) + (1,) * (v.ndim - 1))
    h2 = (t[2:] - t[1:-1]).reshape((-1,) + (1,) * (v.ndim - 1))
    return 2.0 * ((v[2:] - v[1:-1]) / h2 - (v[1:-1] - v[:-2]) / h1) / (h1 + h2)


def smoothness_terms(joints, cam: PinholeCamera | None = None, timestamps=None,
                     sigma3d: float = SIGMA_SMOOTH_3D, sigma2d: float = SIGMA_SMOOTH_2D) -> tuple[float, float]:
    """Robust constant-velocity penalties on 3D joints and on their projections.

    ``joints`` is (T, K, 3) in camera coordinates. Each joint's
    second-difference magnitude is robustified separately.
    """
    j = np.asarray(joints, dtype=np.float64)
    if j.ndim != 3 or len(j) < 3:
        log.warning("smoothness needs at least 3 frames; returning 0")
        return 0.0, 0.0
    acc = np.linalg.norm(second_differences(j, timestamps), axis=-1)
    e3 = geman_mcclure(acc, sigma3d)
    e2 = 0.0
    if cam is not None:
        T, K, _ = j.shape
        # joints are already in camera coordinates, so only intrinsics apply
        uv, _, ok = cam.project_camera(j.reshape(-1, 3))
        uv = uv.reshape(T, K, 2)
        ok = ok.reshape(T, K)
        acc2 = np.linalg.norm(second_differences(np.nan_to_num(uv), timestamps), axis=-1)
        valid = ok[2:] & ok[1:-1] & ok[:-2]
        e2 = geman_mcclure(acc2[valid], sigma2d)
    return e3, e2


def smoothness_loss(joints, cam: PinholeCamera | None = None, timestamps=None) -> float:
    e3, e2 = smoothness_terms(joints, cam, timestamps)
    return e3 + e2
