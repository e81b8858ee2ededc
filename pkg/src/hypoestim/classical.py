"""Classical fully-observed estimators, kept as cross-checks."""

from __future__ import annotations

import numpy as np

from .errors import IllConditionedDesignError, InputError
from .model import Path

__all__ = ["quadratic_variation", "lebreton_drift"]


def quadratic_variation(v, T: float) -> float:
    """``(1/T) sum_n (v_{n+1} - v_n)^2``."""
    v = np.asarray(v, dtype=float)
    if v.size < 2:
        raise InputError("need at least two values")
    if not T > 0:
        raise InputError("T must be positive")
    dv = np.diff(v)
    return float(dv @ dv) / T


def lebreton_drift(path: Path) -> np.ndarray:
    """Discretised drift-matrix estimate ``[sum dx x^T] [sum x x^T dt]^{-1}``.

    Full observation of a linear model is assumed; no sigma enters.
    """
    X = np.column_stack([path.Q, path.require_P()])
    Xn = X[:-1]
    dX = np.diff(X, axis=0)
    gram = path.dt * (Xn.T @ Xn)
    try:
        # Theta G = S  <=>  G^T Theta^T = S^T
        return np.linalg.solve(gram.T, (dX.T @ Xn).T).T
    except np.linalg.LinAlgError as exc:
        raise IllConditionedDesignError("singular Gram matrix") from exc
