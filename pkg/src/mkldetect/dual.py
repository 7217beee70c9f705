"""Soft-margin SVM dual solver.

Deterministic pairwise ascent on the box-constrained dual with the usual
equality constraint. The working pair is always the most violating pair,
ties broken by the lowest index, so identical inputs give bit-identical
solutions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

_BOUND_EPS = 1e-10
_CURV_FLOOR = 1e-12


@dataclass
class DualSolution:
    alpha: np.ndarray
    bias: float
    objective: float
    n_iter: int
    converged: bool


def solve_dual(gram, labels, c: float, tol: float = 1e-6, max_iter: int = 200_000) -> DualSolution:
    """Maximize the soft-margin dual for a fixed kernel matrix.

    ``gram`` must be symmetric and positive semidefinite up to numerical
    tolerance, ``labels`` in {-1, +1} with both classes present, ``c`` > 0.
    The bias is averaged over unbounded support vectors; if every support
    vector sits on the box boundary it falls back to the midpoint of the
    feasible interval.
    """
    K = np.asarray(gram, dtype=float)
    y = np.asarray(labels, dtype=float).ravel()
    n = y.size
    if K.shape != (n, n):
        raise ValueError(f"gram must be {n}x{n}, got {K.shape}")
    if not np.allclose(K, K.T, atol=1e-8):
        raise ValueError("gram matrix must be symmetric")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +1 or -1")
    if np.all(y > 0) or np.all(y < 0):
        raise ValueError("labels must contain both classes")
    if c <= 0:
        raise ValueError("C must be positive")

    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a'Qa - sum(a)

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        up = ((y > 0) & (alpha < c - _BOUND_EPS)) | ((y < 0) & (alpha > _BOUND_EPS))
        low = ((y > 0) & (alpha > _BOUND_EPS)) | ((y < 0) & (alpha < c - _BOUND_EPS))
        s = -(y * grad)
        s_up = np.where(up, s, -np.inf)
        s_low = np.where(low, s, np.inf)
        i = int(np.argmax(s_up))
        j = int(np.argmin(s_low))
        gap = s_up[i] - s_low[j]
        if not np.isfinite(gap) or gap <= tol:
            converged = True
            break
        curv = max(K[i, i] + K[j, j] - 2.0 * K[i, j], _CURV_FLOOR)
        t = gap / curv
        # box caps along the direction (+y_i at i, -y_j at j)
        t = min(t, c - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else c - alpha[j])
        alpha[i] = min(max(alpha[i] + y[i] * t, 0.0), c)
        alpha[j] = min(max(alpha[j] - y[j] * t, 0.0), c)
        grad += t * (y[i] * Q[:, i] - y[j] * Q[:, j])
    if not converged:
        logger.warning("dual solver hit max_iter=%d with gap above tol", max_iter)

    objective = float(alpha.sum() - 0.5 * alpha @ Q @ alpha)
    bias = _compute_bias(K, y, alpha, c)
    return DualSolution(alpha=alpha, bias=bias, objective=objective, n_iter=it, converged=converged)


def _compute_bias(K, y, alpha, c):
    raw = (alpha * y) @ K  # scores without bias
    residual = y - raw     # the bias that puts each point exactly on the margin
    unbounded = (alpha > _BOUND_EPS) & (alpha < c - _BOUND_EPS)
    if np.any(unbounded):
        return float(residual[unbounded].mean())
    at_zero = alpha <= _BOUND_EPS
    at_c = alpha >= c - _BOUND_EPS
    lower_set = ((y > 0) & at_zero) | ((y < 0) & at_c)
    upper_set = ((y > 0) & at_c) | ((y < 0) & at_zero)
    lo = residual[lower_set].max() if np.any(lower_set) else -np.inf
    hi = residual[upper_set].min() if np.any(upper_set) else np.inf
    if not np.isfinite(lo):
        return float(hi)
    if not np.isfinite(hi):
        return float(lo)
    return float(0.5 * (lo + hi))
