"""Central finite-difference gradients."""

from __future__ import annotations

import logging

import numpy as np

from .._parallel import pmap

log = logging.getLogger(__name__)


def central_gradient(probe, x, steps, indices=None, threads: int | None = None) -> np.ndarray:
    """Central differences (f(x + h e_k) - f(x - h e_k)) / 2h for the chosen coordinates.

    ``probe(x_shifted, k)`` returns the loss at a vector differing from ``x`` only
    in coordinate ``k``, so callers can reuse work for the untouched parts.
    Probes run on a thread pool; results are gathered in a fixed order.
    Non-finite probes zero that coordinate with a warning.
    """
    x = np.asarray(x, dtype=np.float64)
    h = np.broadcast_to(np.asarray(steps, dtype=np.float64), x.shape)
    idx = np.arange(len(x)) if indices is None else np.asarray(indices, dtype=np.int64)
    jobs = [(int(k), s) for k in idx for s in (1.0, -1.0)]

    def run(job):
        k, s = job
        xs = x.copy()
        xs[k] += s * h[k]
        return probe(xs, k)

    vals = pmap(run, jobs, threads)
    g = np.zeros_like(x)
    for n, k in enumerate(idx):
        fp, fm = vals[2 * n], vals[2 * n + 1]
        if not (np.isfinite(fp) and np.isfinite(fm)):
            log.warning("non-finite finite-difference probe for coordinate %d; derivative set to 0", k)
            continue
        g[k] = (fp - fm) / (2.0 * h[k])
    return g


def numeric_gradient(f, x, steps, threads: int | None = None) -> np.ndarray:
    return central_gradient(lambda xs, k: f(xs), x, steps, None, threads)


def richardson(g_h: np.ndarray, g_h2: np.ndarray) -> np.ndarray:
    """Extrapolate central differences at h and h/2 (error O(h^2)) to h -> 0."""
    return (4.0 * np.asarray(g_h2) - np.asarray(g_h)) / 3.0
