"""Command-line interface.

Subcommands: ``simulate``, ``fit``, ``sweep``, ``nd-demo``, ``lit-drift-demo``,
``density``.  Options may also come from a JSON file via ``--config``
(keys are option names, dashes or underscores); explicit flags win.  The
environment variable ``HYPOESTIM_SEED`` overrides ``--seed``.

Exit codes: 0 success, 2 usage, 3 bad input, 4 numerical failure,
5 simulation diverged, 6 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import io
from .errors import HypoEstimError, InputError
from .experiments import (
    bias_sweep,
    extrapolation_fit,
    ingest_series,
    invariant_density,
    lit_drift_demo,
    nd_bias_demo,
    param_names,
)
from .gibbs import GibbsConfig, posterior_means, run_gibbs
from .model import DriftParams, ModelSpec
from .simulate import SimConfig, simulate

log = logging.getLogger("hypoestim")

EXIT_IO = 6


def _floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    return [float(Fraction(x.strip())) for x in text.split(",")]


def _spec(model: str, c: int | None, n_params: int | None = None) -> ModelSpec:
    if model == "trig" and c is None and n_params is not None:
        c = n_params - 1
    return ModelSpec.from_name(model, c)


def _theta(spec: ModelSpec, params: list[float]) -> DriftParams:
    if spec.n_params == 0:
        if params:
            raise InputError("growth model takes no drift parameters")
        return DriftParams.zeros(spec)
    if len(params) != spec.n_params:
        raise InputError(f"--params needs {spec.n_params} values (D_1..D_{spec.c}, gamma)")
    return DriftParams.from_vector(spec, params)


def _seed(args):
    env = os.environ.get("HYPOESTIM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"HYPOESTIM_SEED must be an integer, got {env!r}") from exc
    return args.seed


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> None:
    params = _floats(args.params)
    spec = _spec(args.model, args.c, len(params))
    cfg = SimConfig(spec, _theta(spec, params), args.sigma, args.dt, args.N, k=args.k,
                    x0=tuple(_floats(args.x0)), seed=_seed(args))
    path = simulate(cfg, method=args.method)
    io.write_path(args.out, path)
    log.info("wrote %d samples to %s", path.Q.size, args.out)


def cmd_fit(args) -> None:
    spec = _spec(args.model, args.c)
    series = ingest_series(args.infile, args.time_scale, args.subsample, final_time=args.final_time,
                           angular=args.angular)
    dt = args.dt_override if args.dt_override is not None else series.dt
    cfg = GibbsConfig(spec, dt, args.ngibbs, args.burn, sigma_init=args.sigma_init, seed=_seed(args),
                      sigma_sampler=args.sigma_sampler)
    chain = run_gibbs(series.Q, cfg)
    names = param_names(spec)
    rows = (
        [k + 1, *chain.thetas[k], chain.sigmas[k]] for k in range(len(chain))
    )
    if args.out_chain:
        io.write_rows(args.out_chain, ["iter", *names], rows)
    theta, sigma = posterior_means(chain)
    kept = np.column_stack([chain.thetas[chain.kept()], chain.sigmas[chain.kept()]])
    sd = kept.std(axis=0, ddof=1) if kept.shape[0] > 1 else np.zeros(kept.shape[1])
    mean = np.append(theta.as_vector() if spec.n_params else [], sigma.sigma)
    summary = [{"param": n, "mean": m, "sd": s} for n, m, s in zip(names, mean, sd)]
    if args.out_summary:
        io.write_records(args.out_summary, summary)
    for row in summary:
        print(f"{row['param']:>8s} {row['mean']: .6g} +- {row['sd']:.3g}")


def cmd_sweep(args) -> None:
    params = _floats(args.params)
    spec = _spec(args.model, args.c, len(params))
    theta = _theta(spec, params)
    dts = _floats(args.dts)
    records = bias_sweep(spec, theta, args.sigma, args.T, dts, args.reps, _seed(args), k=args.k,
                         x0=tuple(_floats(args.x0)), n_gibbs=args.ngibbs, burn_frac=args.burn,
                         sigma_sampler=args.sigma_sampler, workers=args.workers)
    io.write_records(args.out, [r.as_dict() for r in records])
    if args.out_fit:
        fits = []
        for i, name in enumerate(records[0].names):
            alphas = np.array([r.alpha[i] for r in records])
            if len(records) < 2 or np.any(alphas <= 0):
                log.warning("skipping extrapolation for %s: degenerate Monte Carlo spread", name)
                continue
            fit = extrapolation_fit(dts, [r.mean[i] for r in records], alphas)
            fits.append({"param": name, "b": fit.b, "se_b": fit.se_b, "c": fit.c, "se_c": fit.se_c,
                         "chi2": fit.chi2, "dof": fit.dof})
        if fits:
            io.write_records(args.out_fit, fits)


def _write_demo(result, args) -> None:
    io.write_records(args.out, result.summary)
    if args.out_hist:
        io.write_records(args.out_hist, result.histograms)
    for row in result.summary:
        print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))


def _settings(text: str) -> list[tuple[float, float]]:
    out = []
    for item in text.split(";"):
        T, dt = _floats(item.replace(":", ","))
        out.append((T, dt))
    return out


def cmd_nd_demo(args) -> None:
    _write_demo(nd_bias_demo(args.sigma, _settings(args.settings), args.reps, _seed(args), args.bins), args)


def cmd_lit_drift_demo(args) -> None:
    D, gamma = _floats(args.params)
    _write_demo(lit_drift_demo(D, gamma, args.sigma, _settings(args.settings), args.reps, args.k,
                               args.method, _seed(args), args.bins), args)


def cmd_density(args) -> None:
    table = io.read_table(args.chain)
    d_cols = sorted((c for c in table if c.startswith("D_")), key=lambda c: int(c[2:]))
    if not d_cols or "gamma" not in table or "sigma" not in table:
        raise InputError(f"{args.chain}: expected columns D_1..D_c, gamma, sigma")
    n = table["sigma"].size
    start = int(math.floor(args.burn * n))
    rows = np.column_stack([table[c] for c in d_cols] + [table["gamma"]])[start:]
    grid = np.linspace(-math.pi, math.pi, args.grid_points)
    mean, sd = invariant_density(rows, table["sigma"][start:], grid)
    cols = [grid, mean, sd]
    header = ["q", "density_mean", "density_sd"]
    if args.reference:
        ref = io.read_table(args.reference)
        keys = list(ref)
        cols.append(np.interp(grid, ref[keys[0]], ref[keys[1]]))
        header.append("reference")
    io.write_rows(args.out, header, zip(*cols))


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypoestim", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file of option defaults")
        p.add_argument("--seed", type=int, default=None)
        return p

    def gibbs_opts(p):
        p.add_argument("--ngibbs", type=int, default=50)
        p.add_argument("--burn", type=float, default=0.5)
        p.add_argument("--sigma-sampler", choices=["langevin", "direct"], default="langevin")

    p = common(sub.add_parser("simulate", help="generate a synthetic path (CSV t,q,p)"))
    p.add_argument("--model", choices=["growth", "harmonic", "trig"], required=True)
    p.add_argument("--c", type=int, default=None)
    p.add_argument("--params", default="", help="D_1,...,D_c,gamma")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--x0", default="1,1")
    p.add_argument("--method", choices=["auto", "exact", "euler"], default="euler")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("fit", help="Gibbs fit to an observed smooth component"))
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--model", choices=["growth", "harmonic", "trig"], required=True)
    p.add_argument("--c", type=int, default=None)
    p.add_argument("--dt-override", type=float, default=None)
    p.add_argument("--time-scale", type=float, default=1.0)
    p.add_argument("--final-time", type=float, default=None)
    p.add_argument("--subsample", type=int, default=1)
    p.add_argument("--angular", action="store_true")
    p.add_argument("--sigma-init", type=float, default=None)
    gibbs_opts(p)
    p.add_argument("--out-chain")
    p.add_argument("--out-summary")
    p.set_defaults(func=cmd_fit)

    p = common(sub.add_parser("sweep", help="repeated simulate-and-fit over a dt grid"))
    p.add_argument("--model", choices=["growth", "harmonic", "trig"], default="trig")
    p.add_argument("--c", type=int, default=None)
    p.add_argument("--params", default="1,-8,8,0.5")
    p.add_argument("--sigma", type=float, default=0.7)
    p.add_argument("--T", type=float, default=500.0)
    p.add_argument("--dts", default="1/16,1/32,1/64")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--x0", default="1,1")
    p.add_argument("--workers", type=int, default=1)
    gibbs_opts(p)
    p.add_argument("--out", required=True)
    p.add_argument("--out-fit")
    p.set_defaults(func=cmd_sweep)

    p = common(sub.add_parser("nd-demo", help="sigma bias of numerical differentiation (growth model)"))
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--settings", default="10:0.1;100:0.1;10:0.01", help="T:dt pairs separated by ';'")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--out", required=True)
    p.add_argument("--out-hist")
    p.set_defaults(func=cmd_nd_demo)

    p = common(sub.add_parser("lit-drift-demo", help="quarter bias of the Ito-Taylor drift MLE"))
    p.add_argument("--params", default="4,0.5", help="D,gamma")
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--settings", default="100:0.02;500:0.02;100:0.002")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--method", choices=["exact", "euler"], default="euler")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--out", required=True)
    p.add_argument("--out-hist")
    p.set_defaults(func=cmd_lit_drift_demo)

    p = common(sub.add_parser("density", help="invariant densities induced by a trig-model chain"))
    p.add_argument("--chain", required=True, help="chain CSV written by 'fit --out-chain'")
    p.add_argument("--burn", type=float, default=0.5)
    p.add_argument("--grid-points", type=int, default=201)
    p.add_argument("--reference", help="optional CSV (q, density) carried along for overlay")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_density)
    return parser


def _apply_config(parser, argv):
    argv = sys.argv[1:] if argv is None else list(argv)
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in choices), None)
    if command is None:
        return parser.parse_args(argv)
    with open(known.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise InputError("config file must hold a JSON object")
    sub = choices[command]
    known_dests = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = {"in": "infile"}.get(key, key.replace("-", "_"))
        if dest not in known_dests:
            raise InputError(f"unknown config key {key!r} for '{command}'")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    for action in sub._actions:
        if action.dest in defaults:
            action.required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
        args.func(args)
    except HypoEstimError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_IO
    except (json.JSONDecodeError, ValueError) as exc:
        print(f"error[input]: {exc}", file=sys.stderr)
        return InputError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
