"""Reproduction experiments: bias sweeps, extrapolation, failure demos, series fitting.

Seeds
-----
Every experiment takes one master seed.  Per-repetition streams are derived with
:class:`numpy.random.SeedSequence`: ``SeedSequence(seed).spawn(n_cells)`` gives one
child per grid cell (a ``dt`` value or demo setting), each cell child is spawned
again into one grandchild per repetition, and every repetition spawns two final
streams, ``(simulation, inference)``.  Aggregation is in repetition order, so
results do not depend on the number of workers.
"""

from __future__ import annotations

import concurrent.futures
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .errors import IllConditionedDesignError, InputError
from .gibbs import GibbsConfig, posterior_means, run_gibbs
from .io import read_table
from .likelihood import nd_impute
from .model import DriftParams, ModelSpec, Path, potential
from .samplers import drift_mle_LIT, mle_sigma_quadvar
from .simulate import SimConfig, simulate

__all__ = [
    "repetition_seeds",
    "SweepRecord",
    "bias_sweep",
    "RegressionResult",
    "extrapolation_fit",
    "loglog_slope",
    "DemoResult",
    "nd_bias_demo",
    "lit_drift_demo",
    "ObservationSeries",
    "ingest_series",
    "wrap_angle",
    "invariant_density",
    "empirical_density",
]


def repetition_seeds(seed, n_cells: int, repetitions: int) -> list[list[tuple]]:
    """``[cell][rep] -> (sim_seed, inference_seed)`` following the module's splitting rule."""
    cells = np.random.SeedSequence(seed).spawn(n_cells)
    return [[tuple(rep.spawn(2)) for rep in cell.spawn(repetitions)] for cell in cells]


def _map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(*job) for job in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


# ------------------------------------------------------------------- sweeps


@dataclass
class SweepRecord:
    dt: float
    repetitions: int
    names: list[str]
    mean: np.ndarray  # repetition average of posterior means
    sd: np.ndarray  # spread of posterior means across repetitions
    deviation: np.ndarray  # mean - truth
    estimates: np.ndarray = field(repr=False)  # (repetitions, n_params + 1)

    @property
    def degenerate(self) -> bool:
        """A single repetition carries no Monte Carlo spread."""
        return self.repetitions < 2

    @property
    def alpha(self) -> np.ndarray:
        """Monte Carlo standard error of ``mean``; zero when degenerate."""
        return self.sd / math.sqrt(self.repetitions)

    def as_dict(self) -> dict:
        out = {"dt": self.dt, "repetitions": self.repetitions, "degenerate": int(self.degenerate)}
        for i, name in enumerate(self.names):
            out[f"mean_{name}"] = self.mean[i]
            out[f"dev_{name}"] = self.deviation[i]
            out[f"alpha_{name}"] = self.alpha[i]
        return out


def param_names(spec: ModelSpec) -> list[str]:
    return [f"D_{j}" for j in range(1, spec.c + 1)] + (["gamma"] if spec.n_params else []) + ["sigma"]


def _sweep_one(spec, theta, sigma, dt, N, k, x0, n_gibbs, burn_frac, sigma_sampler, sim_seed, gibbs_seed):
    path = simulate(SimConfig(spec, theta, sigma, dt, N, k=k, x0=x0, seed=sim_seed))
    cfg = GibbsConfig(spec, dt, n_gibbs, burn_frac, seed=gibbs_seed, sigma_sampler=sigma_sampler)
    th, s = posterior_means(run_gibbs(path.Q, cfg))
    vec = th.as_vector() if spec.n_params else np.zeros(0)
    return np.append(vec, s.sigma)


def bias_sweep(
    spec: ModelSpec,
    theta: DriftParams,
    sigma: float,
    T: float,
    dts: Sequence[float],
    repetitions: int,
    seed=None,
    *,
    k: int = 30,
    x0=(1.0, 1.0),
    n_gibbs: int = 50,
    burn_frac: float = 0.5,
    sigma_sampler: str = "langevin",
    workers: int = 1,
) -> list[SweepRecord]:
    """Repeated simulate-then-fit at each observation spacing in ``dts``.

    Data come from :func:`~hypoestim.simulate.simulate` (fine-grid Euler with
    factor ``k`` for the trig model, exact otherwise) over ``[0, T]``.
    """
    if repetitions < 1:
        raise InputError("repetitions must be >= 1")
    if not len(dts):
        raise InputError("empty dt grid")
    theta.check(spec)
    truth = np.append(theta.as_vector() if spec.n_params else np.zeros(0), sigma)
    seeds = repetition_seeds(seed, len(dts), repetitions)
    names = param_names(spec)
    records = []
    for dt, cell in zip(dts, seeds):
        N = int(round(T / dt))
        jobs = [(spec, theta, sigma, dt, N, k, x0, n_gibbs, burn_frac, sigma_sampler, s_sim, s_fit)
                for s_sim, s_fit in cell]
        est = np.array(_map(_sweep_one, jobs, workers))
        mean = est.mean(axis=0)
        sd = est.std(axis=0, ddof=1) if repetitions > 1 else np.zeros_like(mean)
        records.append(SweepRecord(float(dt), repetitions, names, mean, sd, mean - truth, est))
    return records


# -------------------------------------------------------------- extrapolation


@dataclass
class RegressionResult:
    """Fit of ``y_i = b + c dt_i + alpha_i xi_i`` with standard normal ``xi_i``."""

    b: float
    c: float
    se_b: float
    se_c: float
    cov: np.ndarray
    residuals: np.ndarray  # standardised xi_i
    chi2: float
    dof: int


def extrapolation_fit(dts, ys, alphas) -> RegressionResult:
    """Maximum-likelihood (weighted least squares) line in ``dt``; ``b`` is the ``dt -> 0`` value."""
    dts, ys, alphas = (np.asarray(a, dtype=float) for a in (dts, ys, alphas))
    if not (dts.shape == ys.shape == alphas.shape and dts.ndim == 1):
        raise InputError("dts, ys, alphas must be vectors of equal length")
    if dts.size < 2:
        raise InputError("need at least two points")
    if np.any(~(alphas > 0)):
        raise InputError("alphas must be positive")
    if np.ptp(dts) == 0:
        raise IllConditionedDesignError("all dt values coincide")
    X = np.column_stack([np.ones_like(dts), dts]) / alphas[:, None]
    y = ys / alphas
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    cov = np.linalg.inv(X.T @ X)
    xi = y - X @ coef
    return RegressionResult(
        b=float(coef[0]),
        c=float(coef[1]),
        se_b=float(math.sqrt(cov[0, 0])),
        se_c=float(math.sqrt(cov[1, 1])),
        cov=cov,
        residuals=xi,
        chi2=float(xi @ xi),
        dof=dts.size - 2,
    )


def loglog_slope(dts, deviations) -> float:
    """Ordinary least-squares slope of ``log|deviation|`` against ``log dt``."""
    x = np.log(np.asarray(dts, dtype=float))
    y = np.log(np.abs(np.asarray(deviations, dtype=float)))
    return float(np.polyfit(x, y, 1)[0])


# --------------------------------------------------------------------- demos


@dataclass
class DemoResult:
    summary: list[dict]
    histograms: list[dict]


def _histogram_rows(cell: str, name: str, values, bins: int) -> list[dict]:
    counts, edges = np.histogram(values, bins=bins)
    return [
        {"cell": cell, "param": name, "bin_left": edges[i], "bin_right": edges[i + 1], "count": int(counts[i])}
        for i in range(counts.size)
    ]


def _nd_cell(T, dt, sigma, sim_seed):
    N = int(round(T / dt))
    path = simulate(SimConfig(ModelSpec.growth(), DriftParams([]), sigma, dt, N, x0=(0.0, 0.0), seed=sim_seed))
    full = mle_sigma_quadvar(path.P, dt).sigma
    nd = mle_sigma_quadvar(nd_impute(path.Q, dt)[:-1], dt).sigma
    return full, nd


def nd_bias_demo(
    sigma: float = 1.0,
    settings: Sequence[tuple[float, float]] = ((10.0, 0.1), (100.0, 0.1), (10.0, 0.01)),
    repetitions: int = 1000,
    seed=None,
    bins: int = 30,
) -> DemoResult:
    """Euler quadratic-variation estimate of sigma on exact growth data.

    For each ``(T, dt)`` setting the estimator is applied to the true rough path
    ("full") and to the forward-difference reconstruction from ``Q`` alone ("nd").
    """
    seeds = repetition_seeds(seed, len(settings), repetitions)
    summary, hist = [], []
    for (T, dt), cell_seeds in zip(settings, seeds):
        est = np.array([_nd_cell(T, dt, sigma, s_sim) for s_sim, _ in cell_seeds])
        for j, obs in enumerate(("full", "nd")):
            label = f"{obs}_T{T:g}_dt{dt:g}"
            v = est[:, j]
            summary.append({
                "cell": label, "observation": obs, "T": T, "dt": dt, "N": int(round(T / dt)),
                "repetitions": repetitions, "mean_sigma": v.mean(), "sd_sigma": v.std(ddof=1) if v.size > 1 else 0.0,
                "mean_sigma2": (v**2).mean(),
            })
            hist += _histogram_rows(label, "sigma", v, bins)
    return DemoResult(summary, hist)


def _lit_cell(T, dt, theta, sigma, k, method, sim_seed):
    spec = ModelSpec.harmonic()
    path = simulate(SimConfig(spec, theta, sigma, dt, int(round(T / dt)), k=k, seed=sim_seed), method=method)
    return drift_mle_LIT(path)


def lit_drift_demo(
    D: float = 4.0,
    gamma: float = 0.5,
    sigma: float = 0.5,
    settings: Sequence[tuple[float, float]] = ((100.0, 0.02), (500.0, 0.02), (100.0, 0.002)),
    repetitions: int = 50,
    k: int = 30,
    method: str = "euler",
    seed=None,
    bins: int = 30,
) -> DemoResult:
    """Fully observed harmonic data fitted with the Ito-Taylor drift MLE."""
    theta = DriftParams([D], gamma)
    seeds = repetition_seeds(seed, len(settings), repetitions)
    summary, hist = [], []
    for (T, dt), cell_seeds in zip(settings, seeds):
        est = np.array([_lit_cell(T, dt, theta, sigma, k, method, s_sim) for s_sim, _ in cell_seeds])
        label = f"T{T:g}_dt{dt:g}"
        sd = est.std(axis=0, ddof=1) if repetitions > 1 else np.zeros(2)
        summary.append({
            "cell": label, "T": T, "dt": dt, "repetitions": repetitions,
            "mean_D": est[:, 0].mean(), "sd_D": sd[0], "ratio_D": est[:, 0].mean() / D,
            "mean_gamma": est[:, 1].mean(), "sd_gamma": sd[1], "ratio_gamma": est[:, 1].mean() / gamma,
        })
        hist += _histogram_rows(label, "D", est[:, 0], bins)
        hist += _histogram_rows(label, "gamma", est[:, 1], bins)
    return DemoResult(summary, hist)


# ------------------------------------------------------------ external series


@dataclass
class ObservationSeries:
    t: np.ndarray
    Q: np.ndarray
    dt: float

    def to_path(self) -> Path:
        return Path(self.dt, self.Q, t0=float(self.t[0]))


def wrap_angle(q):
    """Map angles to ``(-pi, pi]``."""
    w = np.mod(np.asarray(q, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    return np.where(w == -math.pi, math.pi, w)


def ingest_series(
    file,
    time_scale: float = 1.0,
    subsample_k: int = 1,
    *,
    final_time: float | None = None,
    angular: bool = False,
    column: str | None = None,
    rtol: float = 1e-6,
) -> ObservationSeries:
    """Load an equispaced ``(t, value)`` CSV for fitting.

    ``angular=True`` unwraps the values so the smooth component is continuous.
    Time is multiplied by ``time_scale``, or rescaled so the series spans
    ``final_time`` when that is given; then every ``subsample_k``-th sample is kept.
    """
    table = read_table(file)
    if "t" not in table:
        raise InputError(f"{file}: missing 't' column")
    if column is None:
        column = next((c for c in ("q", "value", "omega") if c in table), None)
        column = column or next(c for c in table if c != "t")
    t, Q = table["t"], table[column]
    if t.size < 2:
        raise InputError("need at least two samples")
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise InputError("time stamps must be strictly increasing")
    h = np.median(steps)
    if np.max(np.abs(steps - h)) > rtol * h:
        raise InputError(f"irregular spacing beyond relative tolerance {rtol:g}")
    if int(subsample_k) != subsample_k or subsample_k < 1:
        raise InputError("subsample_k must be a positive integer")
    if angular:
        Q = np.unwrap(Q)
    if final_time is not None:
        time_scale = final_time / (t[-1] - t[0])
    if not time_scale > 0:
        raise InputError("time scale must be positive")
    t = t * time_scale if time_scale != 1.0 else t
    t, Q = t[:: int(subsample_k)], Q[:: int(subsample_k)]
    if t.size < 2:
        raise InputError("subsampling left fewer than two samples")
    dt = float((t[-1] - t[0]) / (t.size - 1))
    return ObservationSeries(t, Q, dt)


# ------------------------------------------------------------ invariant law


def _as_param_rows(theta_samples) -> np.ndarray:
    if isinstance(theta_samples, np.ndarray) and theta_samples.ndim == 2:
        return theta_samples.astype(float)
    return np.array([th.as_vector() for th in theta_samples], dtype=float)


def invariant_density(theta_samples, sigma, grid) -> tuple[np.ndarray, np.ndarray]:
    """Stationary position density ``exp(-(2 gamma / sigma^2) V(q))`` per drift sample.

    ``theta_samples`` are trig-model drifts (``DriftParams`` or rows
    ``(D_1..D_c, gamma)``); ``sigma`` is a scalar or one value per sample.
    Each density is normalised on ``grid`` by the trapezoidal rule; the
    pointwise mean and standard deviation across samples are returned.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 16:
        raise InputError("grid needs at least 16 points")
    if np.any(np.diff(grid) <= 0):
        raise InputError("grid must be strictly increasing")
    rows = _as_param_rows(theta_samples)
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (rows.shape[0],))
    dens = np.empty((rows.shape[0], grid.size))
    for i, (row, s) in enumerate(zip(rows, sig)):
        th = DriftParams(row[:-1], row[-1])
        logp = -(2.0 * th.gamma / s**2) * potential(th, grid)
        w = np.exp(logp - logp.max())
        Z = trapezoid(w, grid)
        assert Z > 0 and math.isfinite(Z)
        dens[i] = w / Z
    sd = dens.std(axis=0, ddof=1) if dens.shape[0] > 1 else np.zeros(grid.size)
    return dens.mean(axis=0), sd


def empirical_density(q, grid) -> np.ndarray:
    """Histogram density of wrapped angles at bin centres ``grid`` (equispaced on [-pi, pi])."""
    grid = np.asarray(grid, dtype=float)
    h = grid[1] - grid[0]
    edges = np.append(grid - h / 2, grid[-1] + h / 2)
    counts, _ = np.histogram(wrap_angle(q), bins=edges)
    return counts / (counts.sum() * h)
