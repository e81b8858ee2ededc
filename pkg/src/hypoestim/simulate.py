"""Ground-truth path generation.

Exact Gaussian transitions exist for the growth and harmonic models; the
trig model is simulated with Euler-Maruyama on a grid ``k`` times finer than
the observation spacing and subsampled.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg

from .errors import InputError, SimulationDivergedError
from .model import DriftParams, ModelKind, ModelSpec, Path

__all__ = [
    "SimConfig",
    "DIVERGENCE_BOUND",
    "exact_growth_path",
    "harmonic_transition",
    "exact_harmonic_step",
    "exact_harmonic_path",
    "euler_fine_path",
    "simulate",
]

DIVERGENCE_BOUND = 1e8

_KIND_CODE = {ModelKind.GROWTH: 0, ModelKind.HARMONIC: 1, ModelKind.TRIG: 2}


@dataclass
class SimConfig:
    spec: ModelSpec
    theta: DriftParams
    sigma: float
    dt: float
    N: int
    k: int = 1
    x0: tuple[float, float] = (1.0, 1.0)
    seed: int | None = None

    def __post_init__(self):
        self.sigma = float(getattr(self.sigma, "sigma", self.sigma))
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise InputError("sigma must be non-negative and finite")
        if not self.dt > 0:
            raise InputError("dt must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise InputError("N must be a positive integer")
        if int(self.k) != self.k or self.k < 1:
            raise InputError("k must be a positive integer")
        self.N, self.k = int(self.N), int(self.k)
        self.theta.check(self.spec)
        self.x0 = (float(self.x0[0]), float(self.x0[1]))


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def exact_growth_path(cfg: SimConfig) -> Path:
    """Exact discrete samples of ``dq = p dt, dp = sigma dB``."""
    if cfg.spec.kind is not ModelKind.GROWTH:
        raise InputError("exact_growth_path requires the growth model")
    dt, s = cfg.dt, cfg.sigma
    z = _rng(cfg.seed).standard_normal((cfg.N, 2))
    P = np.empty(cfg.N + 1)
    P[0] = cfg.x0[1]
    P[1:] = cfg.x0[1] + np.cumsum(s * math.sqrt(dt) * z[:, 1])
    dq = P[:-1] * dt + s * dt**1.5 * (z[:, 0] / math.sqrt(12.0) + z[:, 1] / 2.0)
    Q = np.empty(cfg.N + 1)
    Q[0] = cfg.x0[0]
    Q[1:] = cfg.x0[0] + np.cumsum(dq)
    return Path(dt, Q, P)


@functools.lru_cache(maxsize=64)
def _harmonic_transition(D: float, gamma: float, sigma: float, dt: float):
    M = np.array([[0.0, 1.0], [-D, -gamma]])
    CC = np.array([[0.0, 0.0], [0.0, sigma**2]])
    # Van Loan: expm([[-M, CC], [0, M^T]] dt) = [[., F^{-1} S], [0, F^T]]
    block = np.zeros((4, 4))
    block[:2, :2] = -M
    block[:2, 2:] = CC
    block[2:, 2:] = M.T
    G = scipy.linalg.expm(block * dt)
    F = G[2:, 2:].T
    S = F @ G[:2, 2:]
    S = 0.5 * (S + S.T)
    F.setflags(write=False)
    S.setflags(write=False)
    return F, S


def harmonic_transition(theta: DriftParams, sigma: float, dt: float):
    """Transition matrix ``exp(M dt)`` and covariance ``S`` of the harmonic model.

    ``M = [[0, 1], [-D, -gamma]]`` and
    ``S = int_0^dt exp(M s) C C^T exp(M^T s) ds``.  Cached per argument tuple.
    """
    theta.check(ModelSpec.harmonic())
    if not (math.isfinite(sigma) and math.isfinite(dt)):
        raise InputError("non-finite sigma or dt")
    return _harmonic_transition(float(theta.D[0]), theta.gamma, float(sigma), float(dt))


def _sqrt_cov(S: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        # sigma = 0 or dt = 0
        w, V = np.linalg.eigh(S)
        return V * np.sqrt(np.clip(w, 0.0, None))


def exact_harmonic_step(theta: DriftParams, sigma: float, dt: float, x, noise) -> np.ndarray:
    """One exact transition ``exp(M dt) x + S^{1/2} noise`` (batched over leading axes)."""
    x = np.asarray(x, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(noise))):
        raise InputError("non-finite state or noise")
    F, S = harmonic_transition(theta, sigma, dt)
    return x @ F.T + noise @ _sqrt_cov(S).T


def exact_harmonic_path(cfg: SimConfig) -> Path:
    if cfg.spec.kind is not ModelKind.HARMONIC:
        raise InputError("exact_harmonic_path requires the harmonic model")
    F, S = harmonic_transition(cfg.theta, cfg.sigma, cfg.dt)
    L = _sqrt_cov(S)
    z = _rng(cfg.seed).standard_normal((cfg.N, 2)) @ L.T
    X = _linear_recursion(F, z, np.array(cfg.x0))
    return Path(cfg.dt, X[:, 0], X[:, 1])


@numba.njit(cache=True)
def _linear_recursion(F, z, x0):
    n = z.shape[0]
    X = np.empty((n + 1, 2))
    X[0] = x0
    for i in range(n):
        q, p = X[i, 0], X[i, 1]
        X[i + 1, 0] = F[0, 0] * q + F[0, 1] * p + z[i, 0]
        X[i + 1, 1] = F[1, 0] * q + F[1, 1] * p + z[i, 1]
    return X


@numba.njit(cache=True)
def _euler_kernel(q, p, D, gamma, kind, sigma, h, n_obs, k, noise, bound):
    Q = np.empty(n_obs + 1)
    P = np.empty(n_obs + 1)
    Q[0] = q
    P[0] = p
    sh = sigma * math.sqrt(h)
    c = D.shape[0]
    j = 0
    for n in range(n_obs):
        for _ in range(k):
            force = 0.0
            if kind == 1:
                force = D[0] * q
            elif kind == 2:
                s = math.sin(q)
                co = math.cos(q)
                pw = 1.0
                for i in range(c):
                    force += D[i] * s * pw
                    pw *= co
            dp = (-gamma * p - force) * h + sh * noise[j]
            q = q + p * h
            p = p + dp
            j += 1
        Q[n + 1] = q
        P[n + 1] = p
        if not (abs(q) + abs(p) <= bound):
            return Q, P, n + 1
    return Q, P, -1


def euler_fine_path(cfg: SimConfig) -> Path:
    """Euler-Maruyama at step ``dt/k``, recording every ``k``-th state."""
    h = cfg.dt / cfg.k
    noise = _rng(cfg.seed).standard_normal(cfg.N * cfg.k)
    gamma = 0.0 if cfg.spec.kind is ModelKind.GROWTH else cfg.theta.gamma
    Q, P, bad = _euler_kernel(
        cfg.x0[0], cfg.x0[1], np.ascontiguousarray(cfg.theta.D, dtype=float), gamma,
        _KIND_CODE[cfg.spec.kind], cfg.sigma, h, cfg.N, cfg.k, noise, DIVERGENCE_BOUND,
    )
    if bad >= 0:
        raise SimulationDivergedError(
            f"path left |q|+|p| <= {DIVERGENCE_BOUND:g} at observation {bad}")
    return Path(cfg.dt, Q, P)


def simulate(cfg: SimConfig, method: str = "auto") -> Path:
    """Dispatch: ``exact`` where a closed form exists, otherwise fine-grid Euler.

    ``method`` is one of ``auto``, ``exact``, ``euler``.
    """
    if method not in ("auto", "exact", "euler"):
        raise InputError(f"unknown simulation method {method!r}")
    kind = cfg.spec.kind
    if method == "euler" or (method == "auto" and kind is ModelKind.TRIG):
        return euler_fine_path(cfg)
    if kind is ModelKind.GROWTH:
        return exact_growth_path(cfg)
    if kind is ModelKind.HARMONIC:
        return exact_harmonic_path(cfg)
    raise InputError("no exact sampler for the trig model")
