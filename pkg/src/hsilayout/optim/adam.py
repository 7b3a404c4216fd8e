from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, dim: int) -> "AdamState":
        return cls(np.zeros(dim), np.zeros(dim), 0)


def adam_step(x, grad, state: AdamState, step: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8, mask=None):
    """One bias-corrected Adam update. Coordinates outside ``mask`` are left untouched."""
    g = np.asarray(grad, dtype=np.float64)
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * g
    v = beta2 * state.v + (1 - beta2) * g * g
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    delta = step * m_hat / (np.sqrt(v_hat) + eps)
    x_new = np.array(x, dtype=np.float64, copy=True)
    if mask is None:
        x_new -= delta
    else:
        x_new[mask] -= delta[mask]
    return x_new, AdamState(m, v, t)
