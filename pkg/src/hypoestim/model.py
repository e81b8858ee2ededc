"""Second-order Langevin model family.

All models share the smooth row ``dq = p dt`` and differ in the rough row

    dp = (-gamma p - sum_j D_j f_j(q)) dt + sigma dB

with force basis

* ``growth``:   no drift at all (``dp = sigma dB``),
* ``harmonic``: ``f_1(q) = q`` (single coefficient ``D``),
* ``trig``:     ``f_j(q) = sin(q) cos(q)**(j-1)`` for ``j = 1..c``.

Only the rough row is parameterised.  Its coefficients are packed as the
vector ``phi = (D_1, ..., D_c, gamma)`` so that the rough drift is
``-design_matrix(spec, q, p) @ phi``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = [
    "ModelKind",
    "ModelSpec",
    "DriftParams",
    "DiffusionParam",
    "Path",
    "force_basis",
    "design_matrix",
    "rough_drift",
    "noise_matrix",
    "potential",
]


class ModelKind(str, enum.Enum):
    GROWTH = "growth"
    HARMONIC = "harmonic"
    TRIG = "trig"


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    c: int = 0

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ModelKind.GROWTH and self.c != 0:
            raise InputError("growth model has no force terms (c must be 0)")
        if kind is ModelKind.HARMONIC and self.c != 1:
            raise InputError("harmonic model has exactly one force term (c=1)")
        if kind is ModelKind.TRIG and self.c < 1:
            raise InputError("trig model needs c >= 1")

    @classmethod
    def growth(cls) -> ModelSpec:
        return cls(ModelKind.GROWTH, 0)

    @classmethod
    def harmonic(cls) -> ModelSpec:
        return cls(ModelKind.HARMONIC, 1)

    @classmethod
    def trig(cls, c: int) -> ModelSpec:
        return cls(ModelKind.TRIG, c)

    @classmethod
    def from_name(cls, name: str, c: int | None = None) -> ModelSpec:
        kind = ModelKind(name.lower())
        if kind is ModelKind.GROWTH:
            return cls.growth()
        if kind is ModelKind.HARMONIC:
            return cls.harmonic()
        if c is None:
            raise InputError("trig model requires c")
        return cls.trig(c)

    @property
    def n_params(self) -> int:
        """Length of the packed drift vector (0 for growth)."""
        return 0 if self.kind is ModelKind.GROWTH else self.c + 1


@dataclass(frozen=True)
class DriftParams:
    D: np.ndarray
    gamma: float = 0.0

    def __post_init__(self):
        D = np.atleast_1d(np.asarray(self.D, dtype=float))
        if D.ndim != 1:
            raise InputError("D must be a vector")
        if not (np.all(np.isfinite(D)) and math.isfinite(self.gamma)):
            raise InputError("drift parameters must be finite")
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "gamma", float(self.gamma))

    @classmethod
    def zeros(cls, spec: ModelSpec) -> DriftParams:
        return cls(np.zeros(spec.c), 0.0)

    @classmethod
    def from_vector(cls, spec: ModelSpec, phi) -> DriftParams:
        phi = np.asarray(phi, dtype=float)
        if spec.n_params == 0:
            return cls.zeros(spec)
        if phi.shape != (spec.n_params,):
            raise InputError(f"expected {spec.n_params} drift coefficients, got {phi.shape}")
        return cls(phi[:-1].copy(), float(phi[-1]))

    def as_vector(self) -> np.ndarray:
        return np.append(self.D, self.gamma)

    def check(self, spec: ModelSpec) -> None:
        if self.D.shape != (spec.c,):
            raise InputError(f"{spec.kind.value} model expects {spec.c} D coefficients, got {self.D.size}")
        if spec.kind is ModelKind.GROWTH and self.gamma != 0.0:
            raise InputError("growth model has no damping parameter")

    def __eq__(self, other):
        if not isinstance(other, DriftParams):
            return NotImplemented
        return np.array_equal(self.D, other.D) and self.gamma == other.gamma

    def __hash__(self):
        return hash((self.D.tobytes(), self.gamma))


@dataclass(frozen=True)
class DiffusionParam:
    sigma: float

    def __post_init__(self):
        sigma = float(self.sigma)
        if not (sigma > 0 and math.isfinite(sigma)):
            raise InputError(f"sigma must be positive and finite, got {self.sigma}")
        object.__setattr__(self, "sigma", sigma)

    def __float__(self):
        return self.sigma


@dataclass
class Path:
    """Trajectory sampled at spacing ``dt``: smooth ``Q`` and optional rough ``P``."""

    dt: float
    Q: np.ndarray
    P: np.ndarray | None = None
    t0: float = field(default=0.0)

    def __post_init__(self):
        self.dt = float(self.dt)
        if not self.dt > 0:
            raise InputError("dt must be positive")
        self.Q = np.asarray(self.Q, dtype=float)
        if self.Q.ndim != 1 or self.Q.size < 2:
            raise InputError("Q must be a vector with at least two entries")
        if not np.all(np.isfinite(self.Q)):
            raise InputError("Q contains non-finite values")
        if self.P is not None:
            self.P = np.asarray(self.P, dtype=float)
            if self.P.shape != self.Q.shape:
                raise InputError("P must have the same length as Q")

    @property
    def N(self) -> int:
        return self.Q.size - 1

    @property
    def T(self) -> float:
        return self.N * self.dt

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.Q.size)

    def require_P(self) -> np.ndarray:
        if self.P is None:
            raise InputError("this operation needs the rough component P")
        return self.P


def _forces(spec: ModelSpec, q) -> np.ndarray:
    """Force functions f_1..f_c stacked along the last axis."""
    q = np.asarray(q, dtype=float)
    if spec.kind is ModelKind.GROWTH:
        return np.zeros(q.shape + (0,))
    if spec.kind is ModelKind.HARMONIC:
        return q[..., None]
    s, co = np.sin(q), np.cos(q)
    powers = co[..., None] ** np.arange(spec.c)
    return s[..., None] * powers


def force_basis(spec: ModelSpec, q: float, p: float) -> np.ndarray:
    """The drift basis A(x) restricted to the rough row.

    Returns ``(f_1(q), ..., f_c(q), p)``; for growth only ``(p,)``.
    """
    return np.append(_forces(spec, q), p)


def design_matrix(spec: ModelSpec, Q, P) -> np.ndarray:
    """Rows ``a_n = (f_1(Q_n), ..., f_c(Q_n), P_n)``; zero columns for growth."""
    Q = np.asarray(Q, dtype=float)
    P = np.asarray(P, dtype=float)
    if spec.kind is ModelKind.GROWTH:
        return np.zeros(Q.shape + (0,))
    return np.concatenate([_forces(spec, Q), P[..., None]], axis=-1)


def rough_drift(spec: ModelSpec, theta: DriftParams, q, p):
    """``-gamma p - sum_j D_j f_j(q)``; vectorised over ``q`` and ``p``."""
    theta.check(spec)
    if spec.kind is ModelKind.GROWTH:
        out = np.zeros(np.broadcast(np.asarray(q), np.asarray(p)).shape)
    else:
        out = -(_forces(spec, q) @ theta.D) - theta.gamma * np.asarray(p, dtype=float)
    return out if np.ndim(out) else float(out)


def noise_matrix(dt: float, sigma: float) -> np.ndarray:
    """``sigma * [[dt/sqrt(12), dt/2], [0, 1]]``.

    The increment noise of the improved model is ``sqrt(dt) R xi``; at ``dt=0``
    this degenerates to the Euler noise matrix.
    """
    if dt < 0:
        raise InputError("dt must be non-negative")
    return sigma * np.array([[dt / math.sqrt(12.0), dt / 2.0], [0.0, 1.0]])


def potential(theta: DriftParams, q) -> np.ndarray:
    """Trig-model potential ``V(q) = -sum_j D_j cos(q)**j / j`` so that ``V' = sum_j D_j f_j``."""
    q = np.asarray(q, dtype=float)
    j = np.arange(1, theta.D.size + 1)
    return -(np.cos(q)[..., None] ** j / j) @ theta.D
