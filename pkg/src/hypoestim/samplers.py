"""Conditional samplers used by the Gibbs loop.

* drift | path      : exact Gaussian posterior of the Euler likelihood,
* sigma | path, drift : Langevin SDE on ``zeta = sigma**4`` (conjugate direct
  sampler kept as an oracle and alternative),
* path | drift, sigma : exact Gaussian conditional of the Ito-Taylor
  likelihood via a banded Cholesky factorisation.

Also hosts the two direct estimators used in the bias demonstrations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg

from .errors import (
    FactorizationError,
    IllConditionedDesignError,
    InputError,
    NumericalError,
    StepSizeTooLargeError,
)
from .likelihood import sigma_Z
from .model import DiffusionParam, DriftParams, ModelKind, ModelSpec, Path, design_matrix, rough_drift

__all__ = [
    "DriftPosterior",
    "PrecisionSystem",
    "drift_posterior",
    "sample_drift",
    "sigma_Z",
    "sigma_stationary_point",
    "langevin_step_size",
    "sample_sigma_langevin",
    "sigma_langevin_chains",
    "sample_sigma_direct",
    "path_precision",
    "sample_path_direct",
    "drift_mle_LIT",
    "mle_sigma_quadvar",
]

ZETA_FLOOR = 1e-12
ZETA_OVERFLOW = 1e300


# --------------------------------------------------------------------- drift


@dataclass(frozen=True)
class DriftPosterior:
    """Gaussian ``N(M^{-1} b, M^{-1})`` over ``phi = (D_1..D_c, gamma)``."""

    M: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if not np.allclose(self.M, self.M.T, rtol=1e-12, atol=0.0):
            raise NumericalError("posterior precision is not symmetric")

    def cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.M)
        except np.linalg.LinAlgError as exc:
            raise IllConditionedDesignError("drift posterior precision is not positive definite") from exc

    @property
    def mean(self) -> np.ndarray:
        L = self.cholesky()
        return scipy.linalg.cho_solve((L, True), self.b)

    @property
    def cov(self) -> np.ndarray:
        L = self.cholesky()
        return scipy.linalg.cho_solve((L, True), np.eye(self.b.size))


def drift_posterior(path: Path, spec: ModelSpec, sigma) -> DriftPosterior:
    """Posterior of the rough-row drift coefficients under L_E with a flat prior.

    With rows ``a_n = (f(Q_n), P_n)`` and ``dP_n = -dt a_n . phi + noise``:
    ``M = (dt/sigma^2) sum a_n a_n^T`` and ``b = -(1/sigma^2) sum a_n dP_n``.
    """
    s2 = DiffusionParam(getattr(sigma, "sigma", sigma)).sigma ** 2
    P = path.require_P()
    A = design_matrix(spec, path.Q[:-1], P[:-1])
    dP = np.diff(P)
    M = (path.dt / s2) * (A.T @ A)
    b = -(A.T @ dP) / s2
    post = DriftPosterior(M, b)
    if spec.n_params:
        post.cholesky()
        if np.linalg.cond(M) > 1e13:
            raise IllConditionedDesignError("degenerate design: drift posterior precision is near singular")
    return post


def sample_drift(posterior: DriftPosterior, seed=None, xi=None) -> DriftParams:
    """Draw ``M^{-1} b + L^{-T} xi`` with ``L L^T = M``; pass ``xi`` to fix the noise."""
    n = posterior.b.size
    if n == 0:
        return DriftParams(np.zeros(0), 0.0)
    L = posterior.cholesky()
    if xi is None:
        xi = np.random.default_rng(seed).standard_normal(n)
    mean = scipy.linalg.cho_solve((L, True), posterior.b)
    phi = mean + scipy.linalg.solve_triangular(L, np.asarray(xi, dtype=float), lower=True, trans="T")
    return DriftParams(phi[:-1], float(phi[-1]))


# --------------------------------------------------------------------- sigma


def sigma_stationary_point(Z: float, N: int) -> float:
    """Zero of the Langevin drift: ``sqrt(zeta) = 4Z / (8N - 12)``, returned as sigma."""
    return math.sqrt(4.0 * Z / (8.0 * N - 12.0))


def langevin_step_size(Z: float, N: int, fraction: float = 0.01) -> float:
    """``fraction`` of the linearised relaxation time ``8Z / (8N - 12)**2`` of the zeta SDE."""
    return fraction * 8.0 * Z / (8.0 * N - 12.0) ** 2


def _check_sigma_args(Z, N):
    if int(N) != N or N < 2:
        raise InputError("N must be an integer >= 2")
    if not (Z > 0 and math.isfinite(Z)):
        raise InputError("Z must be positive and finite")


@numba.njit(cache=True)
def _zeta_euler(zeta0, Z, N, ds, noise, floor, overflow):
    n_chains, n_steps = noise.shape
    out = np.empty(n_chains)
    a0 = 12.0 - 8.0 * N
    amp = 4.0 * math.sqrt(2.0) * math.sqrt(ds)
    for c in range(n_chains):
        z = zeta0[c]
        for i in range(n_steps):
            z = z + (a0 * math.sqrt(z) + 4.0 * Z) * ds + amp * z**0.75 * noise[c, i]
            if z < floor:
                z = 2.0 * floor - z
                if z < floor:
                    z = floor
            elif not z < overflow:
                z = np.inf
                break
        out[c] = z
    return out


def sigma_langevin_chains(Z, N, sigma_init, ds=None, n_steps=2000, seed=None, size=1, chunk=1000):
    """Run ``size`` independent zeta-Langevin chains and return their final sigmas.

    Integrates ``dzeta = ((12 - 8N) sqrt(zeta) + 4Z) ds + 4 sqrt(2) zeta^{3/4} dW``
    with explicit Euler-Maruyama, reflecting at ``ZETA_FLOOR``.
    """
    _check_sigma_args(Z, N)
    if ds is None:
        ds = langevin_step_size(Z, N)
    if not ds > 0:
        raise InputError("ds must be positive")
    sigma_init = np.broadcast_to(np.asarray(sigma_init, dtype=float), (size,))
    if np.any(sigma_init <= 0):
        raise InputError("sigma_init must be positive")
    rng = np.random.default_rng(seed)
    zeta = np.empty(size)
    for start in range(0, size, chunk):
        stop = min(size, start + chunk)
        noise = rng.standard_normal((stop - start, int(n_steps)))
        zeta[start:stop] = _zeta_euler(sigma_init[start:stop] ** 4, float(Z), float(N), float(ds),
                                       noise, ZETA_FLOOR, ZETA_OVERFLOW)
    if not np.all(np.isfinite(zeta)):
        raise StepSizeTooLargeError(f"zeta Langevin integration diverged with ds={ds:g}")
    return zeta**0.25


def sample_sigma_langevin(Z, N, sigma_init, ds=None, n_steps=2000, seed=None) -> DiffusionParam:
    """One draw from ``p(sigma) ~ sigma^{-2N} exp(-Z / (2 sigma^2))`` via the zeta-Langevin SDE."""
    return DiffusionParam(float(sigma_langevin_chains(Z, N, sigma_init, ds, n_steps, seed, size=1)[0]))


def sample_sigma_direct(Z, N, seed=None, size=None):
    """Exact draw from the same density: ``sigma^2 ~ InvGamma(N - 1/2, Z/2)``.

    Returns a :class:`DiffusionParam`, or an array when ``size`` is given.
    """
    _check_sigma_args(Z, N)
    g = np.random.default_rng(seed).gamma(N - 0.5, 1.0, size=size)
    s = np.sqrt(0.5 * Z / g)
    return s if size is not None else DiffusionParam(float(s))


# ---------------------------------------------------------------------- path


@dataclass(frozen=True)
class PrecisionSystem:
    """``grad_P log L_IT = Pmat @ P + Qvec`` with tridiagonal ``Pmat``.

    ``diag`` and ``off`` hold the main and first off-diagonal of ``Pmat``.
    """

    diag: np.ndarray
    off: np.ndarray
    Qvec: np.ndarray

    @property
    def size(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def matvec(self, P) -> np.ndarray:
        out = self.diag * P
        out[:-1] += self.off * P[1:]
        out[1:] += self.off * P[:-1]
        return out

    def gradient(self, P) -> np.ndarray:
        return self.matvec(np.asarray(P, dtype=float)) + self.Qvec

    def upper_cholesky(self) -> np.ndarray:
        """Banded ``U`` (LAPACK upper storage) with ``U^T U = -Pmat``."""
        ab = np.empty((2, self.size))
        ab[0, 0] = 0.0
        ab[0, 1:] = -self.off
        ab[1] = -self.diag
        try:
            return scipy.linalg.cholesky_banded(ab, lower=False)
        except np.linalg.LinAlgError as exc:
            raise FactorizationError("path precision is not negative definite") from exc

    def mode(self, U=None) -> np.ndarray:
        U = self.upper_cholesky() if U is None else U
        return scipy.linalg.cho_solve_banded((U, False), self.Qvec)


def path_precision(Q, spec: ModelSpec, theta: DriftParams, sigma, dt: float) -> PrecisionSystem:
    """Affine gradient of ``log_L_IT`` with respect to all of ``P_0..P_N``.

    Step ``n`` has residual ``r_n = (dQ_n - dt P_n, P_{n+1} - a P_n - dt g(Q_n))``
    with ``a = 1 - gamma dt`` and ``g`` the position part of the drift.  With
    ``W = (R R^T)^{-1} = [[12/dt^2, -6/dt], [-6/dt, 4]]`` each step contributes
    the 2x2 block ``[[12 - 12a + 4a^2, 6 - 4a], [6 - 4a, 4]]`` on
    ``(P_n, P_{n+1})``, scaled by ``-1 / (sigma^2 dt)``.
    """
    s = DiffusionParam(getattr(sigma, "sigma", sigma)).sigma
    if not dt > 0:
        raise InputError("dt must be positive")
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 1 or Q.size < 2:
        raise InputError("Q needs at least two entries")
    theta.check(spec)
    gamma = 0.0 if spec.kind is ModelKind.GROWTH else theta.gamma
    a = 1.0 - gamma * dt
    g = rough_drift(spec, theta, Q[:-1], 0.0)
    c1 = np.diff(Q)
    c2 = -dt * g
    # W c, with W as in the docstring
    Wc1 = 12.0 * c1 / dt**2 - 6.0 * c2 / dt
    Wc2 = -6.0 * c1 / dt + 4.0 * c2

    n = Q.size
    H_diag = np.zeros(n)
    H_diag[:-1] += 12.0 - 12.0 * a + 4.0 * a * a
    H_diag[1:] += 4.0
    H_off = np.full(n - 1, 6.0 - 4.0 * a)
    lin = np.zeros(n)
    lin[:-1] += -dt * Wc1 - a * Wc2
    lin[1:] += Wc2

    scale = -1.0 / (s * s * dt)
    return PrecisionSystem(scale * H_diag, scale * H_off, scale * lin)


def sample_path_direct(Q, spec: ModelSpec, theta: DriftParams, sigma, dt: float, seed=None, xi=None,
                       size: int | None = None) -> np.ndarray:
    """Exact draw ``P = -Pmat^{-1} Qvec + U^{-1} xi`` from the L_IT conditional of P given Q.

    O(N) via banded Cholesky; ``xi = 0`` returns the conditional mode.  With
    ``size`` (or a 2-d ``xi``) returns one path per row.
    """
    system = path_precision(Q, spec, theta, sigma, dt)
    U = system.upper_cholesky()
    mean = system.mode(U)
    if xi is None:
        shape = (system.size,) if size is None else (size, system.size)
        xi = np.random.default_rng(seed).standard_normal(shape)
    xi = np.asarray(xi, dtype=float)
    return mean + scipy.linalg.solve_banded((0, 1), U, xi.T, check_finite=False).T


# ------------------------------------------------------- direct estimators


def drift_mle_LIT(path: Path, dt: float | None = None) -> tuple[float, float]:
    """Maximiser of ``log_L_IT`` over ``(D, gamma)`` for the harmonic model.

    Solves

        [[sum Q^2 dt, sum PQ dt], [sum PQ dt, sum P^2 dt]] (D, gamma)
            = -(sum Q dP, sum P dP) + 3/2 (sum Q (dQ/dt - P), sum P (dQ/dt - P))

    (sums over ``n < N``).  The second right-hand term makes this estimator
    converge to a quarter of the true coefficients; it exists to show that.
    """
    dt = path.dt if dt is None else float(dt)
    P = path.require_P()
    Qn, Pn = path.Q[:-1], P[:-1]
    dP = np.diff(P)
    slip = np.diff(path.Q) / dt - Pn
    A = dt * np.array([[Qn @ Qn, Pn @ Qn], [Pn @ Qn, Pn @ Pn]])
    rhs = -np.array([Qn @ dP, Pn @ dP]) + 1.5 * np.array([Qn @ slip, Pn @ slip])
    try:
        D, gamma = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedDesignError("singular L_IT drift system") from exc
    return float(D), float(gamma)


def mle_sigma_quadvar(P, dt: float) -> DiffusionParam:
    """``sigma_hat^2 = (1 / (N dt)) sum_n (P_{n+1} - P_n)^2`` with ``N = len(P) - 1``."""
    P = np.asarray(P, dtype=float)
    if P.size < 2:
        raise InputError("need at least two values")
    dP = np.diff(P)
    return DiffusionParam(math.sqrt((dP @ dP) / (dP.size * dt)))
