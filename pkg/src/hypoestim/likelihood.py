"""Auxiliary log-densities and numerical-differentiation imputation.

Two discrete-time models approximate the transition density of a path
``x_n = (Q_n, P_n)`` with residuals ``r_n = x_{n+1} - x_n - dt * drift(x_n)``:

* Euler (``log_L_E``): only the rough residual carries noise,
  ``r2_n ~ N(0, sigma**2 dt)``.
* Ito-Taylor (``log_L_IT``): both residuals carry noise,
  ``r_n ~ N(0, sigma**2 dt R R^T)`` with ``R = noise_matrix(dt, 1)``.

Additive constants independent of ``(theta, sigma)`` are dropped.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InputError
from .model import DiffusionParam, DriftParams, ModelSpec, Path, rough_drift

__all__ = [
    "nd_impute",
    "residuals",
    "whitened_residuals",
    "sigma_Z",
    "log_L_E",
    "log_L_IT",
]

_SQRT12 = math.sqrt(12.0)


def nd_impute(Q, dt: float) -> np.ndarray:
    """Forward-difference estimate of the rough component.

    ``P_n = (Q_{n+1} - Q_n) / dt`` for ``n < N``; the last value is repeated so
    the output has the same length as ``Q``.
    """
    if not dt > 0:
        raise InputError("dt must be positive")
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 1 or Q.size < 2:
        raise InputError("Q needs at least two entries")
    P = np.empty_like(Q)
    P[:-1] = np.diff(Q) / dt
    P[-1] = P[-2]
    return P


def residuals(path: Path, spec: ModelSpec, theta: DriftParams) -> tuple[np.ndarray, np.ndarray]:
    """Smooth and rough one-step residuals, each of length ``N``."""
    P = path.require_P()
    Q, dt = path.Q, path.dt
    r1 = np.diff(Q) - dt * P[:-1]
    r2 = np.diff(P) - dt * rough_drift(spec, theta, Q[:-1], P[:-1])
    return r1, r2


def whitened_residuals(r1, r2, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """``R^{-1} r`` for ``R = noise_matrix(dt, 1)``."""
    return _SQRT12 * (r1 / dt - 0.5 * r2), r2


def sigma_Z(path: Path, spec: ModelSpec, theta: DriftParams) -> float:
    """``Z = (1/dt) sum_n ||r_n||_R^2``, the sufficient statistic for sigma under L_IT.

    The sigma-dependence of ``log_L_IT`` is ``-2N log(sigma) - Z / (2 sigma**2)``.
    """
    w1, w2 = whitened_residuals(*residuals(path, spec, theta), path.dt)
    return float((w1 @ w1 + w2 @ w2) / path.dt)


def _sigma(sigma) -> float:
    return DiffusionParam(getattr(sigma, "sigma", sigma)).sigma


def log_L_E(path: Path, spec: ModelSpec, theta: DriftParams, sigma) -> float:
    """Euler log-likelihood ``-N log(sigma) - sum_n r2_n**2 / (2 sigma**2 dt)``."""
    s = _sigma(sigma)
    _, r2 = residuals(path, spec, theta)
    return float(-path.N * math.log(s) - (r2 @ r2) / (2.0 * s * s * path.dt))


def log_L_IT(path: Path, spec: ModelSpec, theta: DriftParams, sigma) -> float:
    """Ito-Taylor log-likelihood ``-2N log(sigma) - Z / (2 sigma**2)``."""
    s = _sigma(sigma)
    Z = sigma_Z(path, spec, theta)
    return float(-2.0 * path.N * math.log(s) - Z / (2.0 * s * s))
