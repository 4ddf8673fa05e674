"""Command-line front end: ``lsa-lab validate | run | report``.

Exit codes
----------
0 success, 2 parse or missing input, 3 modelling assumption violated,
4 numerical failure, 5 work budget exceeded.
"""

import argparse
import csv
from dataclasses import dataclass, field, fields
import io
import json
import math
import os
from pathlib import Path
import platform
import sys
import time

import numpy as np

from . import __version__, bounds, chains, estimators, problem, recursion
from .errors import BudgetError, DomainError, LSAError, ParseError

CSV_COLUMNS = ["experiment", "quantity", "n", "p", "alpha", "estimate", "ci_low", "ci_high",
               "bound_total", "bound_leading", "bound_fluctuation", "bound_transient",
               "bound_bias", "eligible", "seed", "wall_time_ms"]
EXPERIMENTS = ("validate", "mse-sweep", "moment-sweep", "stability", "bias", "covariance",
               "bounds-only")
SEED_ENV = "LSA_LAB_SEED"


@dataclass
class ExperimentConfig:
    instance_path: str = None
    experiment: str = "validate"
    n_grid: list = field(default_factory=lambda: [1024])
    p_grid: list = field(default_factory=lambda: [2])
    alpha: object = "optimized"
    R: int = 1000
    master_seed: int = 0
    output_dir: str = "results"
    threads: int = 1
    budget_override: float = None
    theta0: object = "star"
    q: float = None
    delta_grid: list = field(default_factory=lambda: [0.05])
    c1M: float = 1.0
    literal_covariance: bool = False
    noise_mode: str = None
    path_length: int = 1_000_000
    batch_count: int = 100
    base_dir: Path = field(default=Path("."), repr=False)

    @property
    def budget(self):
        return estimators.DEFAULT_BUDGET if self.budget_override is None else float(self.budget_override)

    def echo(self):
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "base_dir"}
        return out


def load_config(path):
    """Parse a JSON config; unknown keys are rejected."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ParseError("config must be a JSON object")
    if "A" in data and "noise" in data:
        # a bare instance file is accepted as a validate config
        return ExperimentConfig(instance_path=str(path), base_dir=Path("."))
    known = {f.name for f in fields(ExperimentConfig)} - {"base_dir"}
    unknown = set(data) - known
    if unknown:
        raise ParseError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**data, base_dir=path.parent)
    _check_config(cfg)
    return cfg


def _check_config(cfg):
    if cfg.experiment not in EXPERIMENTS:
        raise ParseError(f"experiment must be one of {EXPERIMENTS}")
    if not cfg.instance_path:
        raise ParseError("config needs instance_path")
    try:
        cfg.n_grid = [int(n) for n in cfg.n_grid]
        cfg.p_grid = [float(p) for p in cfg.p_grid]
        cfg.R = int(cfg.R)
        cfg.master_seed = int(cfg.master_seed)
        cfg.threads = int(cfg.threads)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad config value: {exc}") from exc
    cfg.p_grid = [int(p) if p.is_integer() else p for p in cfg.p_grid]
    if cfg.experiment not in ("stability", "validate", "covariance"):
        if any(n % 2 or n < 2 for n in cfg.n_grid):
            raise ParseError("n_grid entries must be even integers >= 2")
    if cfg.R < 1:
        raise ParseError("R must be >= 1")
    if cfg.alpha != "optimized":
        if not isinstance(cfg.alpha, list) or not cfg.alpha or any(
                not isinstance(a, (int, float)) or a <= 0 for a in cfg.alpha):
            raise ParseError('alpha must be "optimized" or a list of positive numbers')
    if cfg.noise_mode not in (None, "bounded", "subgaussian"):
        raise ParseError("noise_mode must be bounded or subgaussian")


def _instance_path(cfg):
    p = Path(cfg.instance_path)
    return p if p.is_absolute() or p.exists() else cfg.base_dir / p


def _derive(cfg):
    model = problem.load_model(_instance_path(cfg))
    return problem.validate_and_derive(model)


def _theta0(cfg, inst):
    if cfg.theta0 == "star":
        return inst.theta_star.copy()
    if cfg.theta0 == "zero":
        return np.zeros(inst.d)
    try:
        th = np.asarray(cfg.theta0, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad theta0: {exc}") from exc
    if th.shape != (inst.d,):
        raise ParseError(f"theta0 must have length {inst.d}")
    return th


# ------------------------------------------------------------------- validate

def cmd_validate(cfg, out=None):
    """Validate the instance and print derived quantities; returns a diagnostics dict."""
    inst = _derive(cfg)
    inp = bounds.bound_inputs(inst)
    c = inp.consts
    diag = {
        "status": "ok",
        "d": inst.d, "S": inst.model.S, "noise": inst.noise.variant,
        "theta_star": inst.theta_star.tolist(),
        "Sigma_eps": inst.Sigma_eps.tolist(),
        "eps_sup": inst.eps_sup, "b_A": inst.b_A,
        "a": c.a, "alpha_inf": c.alpha_inf, "kappa_Q": c.kappa_Q, "c_A": c.c_A,
        "D1": inp.cset.D1, "D2": inp.cset.D2, "D3": inp.cset.D3, "D4": inp.cset.D4,
    }
    if inst.noise.is_markov:
        m = inp.mconsts
        diag.update(t_mix=inst.noise.t_mix, t_mix_min=inst.diagnostics.get("t_mix_min"),
                    alpha_inf_M=m.alpha_inf_M, C_Gamma=m.C_Gamma, c_A_M=m.c_A_M,
                    block_h=m.block_h, Sigma_M=chains.asymptotic_noise_covariance(inst).tolist())
    for k, v in diag.items():
        print(f"{k}: {v}", file=out)
    return diag


# ------------------------------------------------------------------------ run

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else format(x, ".17g")


class _Recorder:
    def __init__(self, experiment, seed):
        self.experiment = experiment
        self.seed = seed
        self.rows = []
        self.reports = []

    def add(self, quantity, n, p, alpha, est, lo, hi, rep, wall_ms):
        comp = (rep.total, rep.leading, rep.fluctuation, rep.transient, rep.bias) if rep else (None,) * 5
        self.rows.append([self.experiment, quantity, n, p, alpha, est, lo, hi, *comp,
                          None if rep is None else rep.eligible, self.seed, wall_ms])
        if rep is not None:
            self.bound(rep, quantity=quantity)

    def bound(self, rep, **tags):
        d = rep.to_dict()
        d["tags"] = tags
        self.reports.append(d)


def _alpha_list(cfg):
    return None if cfg.alpha == "optimized" else [float(a) for a in cfg.alpha]


def _plan_work(cfg, inst):
    """Total elementary updates the run will perform (checked before any simulation)."""
    d2 = inst.d**2
    e = cfg.experiment
    nmax = max(cfg.n_grid) if cfg.n_grid else 0
    alphas = _alpha_list(cfg)
    if e == "mse-sweep":
        runs = sum(cfg.n_grid) if alphas is None else len(alphas) * nmax
        return cfg.R * runs * d2
    if e == "moment-sweep":
        runs = sum(cfg.n_grid) * len(cfg.p_grid) if alphas is None else len(alphas) * nmax
        return cfg.R * runs * d2
    if e == "stability":
        return cfg.R * nmax * inst.d**3 * (1 if alphas is None else len(alphas))
    if e == "covariance":
        return cfg.path_length
    return 0


def _scaled(row, factor, power=1):
    return tuple(factor * v**power for v in (row.estimate, row.ci_low, row.ci_high))


def _run_mse(cfg, inst, inp, theta0, rec):
    regime = inst.noise.regime
    alphas = _alpha_list(cfg)
    jobs = [(None, [n]) for n in cfg.n_grid] if alphas is None else [(a, cfg.n_grid) for a in alphas]
    for alpha, ns in jobs:
        t0 = time.perf_counter()
        if alpha is None:
            n = ns[0]
            a = (bounds.step_size_iid(n, inst.d, 2, inp.consts) if regime == "iid"
                 else bounds.step_size_markov(n, inst.d, 2, inst.noise.t_mix, inp.mconsts))
        else:
            a = alpha
        tab = estimators.run_ensemble(inst, a, ns, [2], cfg.R, cfg.master_seed, ("pr_error",),
                                      theta0, cfg.threads, cfg.budget)
        wall = (time.perf_counter() - t0) * 1e3 / len(ns)
        for n in ns:
            row = tab.get("pr_error", n, 2)
            if regime == "iid":
                est = _scaled(row, n / 2, 2)
                rep = bounds.mse_bound_iid(n, a, inp, cfg.noise_mode or _default_mode(inst))
                rec.add("scaled_mse", n, 2, a, *est, rep, wall)
            else:
                est = _scaled(row, math.sqrt(n / 2))
                rep = bounds.pr_moment_bound_markov(n, 2, inp, a)
                rec.add("scaled_rms", n, 2, a, *est, rep, wall)


def _default_mode(inst):
    return "subgaussian" if inst.noise.variant == problem.SUBGAUSSIAN else "bounded"


def _moment_bound(inst, inp, cfg, n, p, alpha):
    if inst.noise.is_markov:
        return bounds.pr_moment_bound_markov(n, p, inp, alpha)
    return bounds.pr_moment_bound_iid(n, p, inp, alpha, cfg.noise_mode or _default_mode(inst))


def _run_moments(cfg, inst, inp, theta0, rec):
    alphas = _alpha_list(cfg)
    if alphas is None:
        for n in cfg.n_grid:
            for p in cfg.p_grid:
                t0 = time.perf_counter()
                rep = _moment_bound(inst, inp, cfg, n, p, None)
                a = rep.inputs["alpha"]
                tab = estimators.run_ensemble(inst, a, [n], [p], cfg.R, cfg.master_seed,
                                              ("pr_error",), theta0, cfg.threads, cfg.budget)
                est = _scaled(tab.get("pr_error", n, p), math.sqrt(n / 2))
                rec.add("scaled_pr_moment", n, p, a, *est, rep, (time.perf_counter() - t0) * 1e3)
        return
    for a in alphas:
        t0 = time.perf_counter()
        tab = estimators.run_ensemble(inst, a, cfg.n_grid, cfg.p_grid, cfg.R, cfg.master_seed,
                                      ("pr_error",), theta0, cfg.threads, cfg.budget)
        wall = (time.perf_counter() - t0) * 1e3 / (len(cfg.n_grid) * len(cfg.p_grid))
        for n in cfg.n_grid:
            for p in cfg.p_grid:
                est = _scaled(tab.get("pr_error", n, p), math.sqrt(n / 2))
                rec.add("scaled_pr_moment", n, p, a, *est, _moment_bound(inst, inp, cfg, n, p, a), wall)


def _run_stability(cfg, inst, inp, rec):
    q = cfg.q if cfg.q is not None else max(cfg.p_grid)
    regime = inst.noise.regime
    limit = inp.mconsts.step_limit(q) if regime == "markov" else inp.consts.alpha_q_inf(q)
    for a in _alpha_list(cfg) or [limit]:
        t0 = time.perf_counter()
        tab = estimators.empirical_stability(inst, a, cfg.p_grid, q, cfg.n_grid, cfg.R,
                                             cfg.master_seed, cfg.threads, cfg.budget)
        wall = (time.perf_counter() - t0) * 1e3 / (len(cfg.n_grid) * len(cfg.p_grid))
        for n in cfg.n_grid:
            for p in cfg.p_grid:
                row = tab.get("product_norm", n, p)
                value = bounds.stability_bound(regime, n, p, q, a, inst.d, inp.consts, inp.mconsts)
                rep = bounds.BoundReport(f"stability_{regime}", leading=value,
                                         inputs=inp.echo(n=n, p=p, q=q, alpha=a))
                rep.require("alpha <= threshold", a, limit)
                rec.add("product_norm", n, p, a, row.estimate, row.ci_low, row.ci_high, rep, wall)


def _run_bias(cfg, inst, inp, theta0, rec):
    alphas = _alpha_list(cfg)
    if alphas is None:
        if not inst.noise.is_markov:
            raise DomainError('bias with alpha "optimized" needs Markov noise')
        top = inp.mconsts.step_limit(2 * (1 + math.log(inst.d)))
        alphas = list(top * np.logspace(-1, 0, 10))
    for a in alphas:
        for n in cfg.n_grid:
            t0 = time.perf_counter()
            bias = recursion.exact_mean_dynamics(inst, a, n, theta0).bias
            rep = bounds.bias_bound_markov(n, a, inp) if inst.noise.is_markov else None
            rec.add("bias", n, None, a, bias, bias, bias, rep, (time.perf_counter() - t0) * 1e3)


def _run_covariance(cfg, inst, rec, meta):
    if not inst.noise.is_markov:
        raise DomainError("covariance experiment needs Markov noise")
    t0 = time.perf_counter()
    est = estimators.batch_means_covariance(inst, inst.noise, cfg.path_length, cfg.batch_count,
                                            cfg.master_seed)
    exact = chains.asymptotic_noise_covariance(inst, literal=cfg.literal_covariance)
    wall = (time.perf_counter() - t0) * 1e3
    rel = float(np.linalg.norm(est - exact) / max(np.linalg.norm(exact), 1e-300))
    rec.add("trace_sigma_M_batch_means", cfg.path_length, None, None,
            float(np.trace(est)), None, None, None, wall)
    rec.add("trace_sigma_M_exact", cfg.path_length, None, None, float(np.trace(exact)),
            None, None, None, 0.0)
    rec.add("sigma_M_relative_frobenius_error", cfg.path_length, None, None, rel, None, None,
            None, 0.0)
    meta["reference"] = {"sigma_M_exact": exact.tolist(), "sigma_M_batch_means": est.tolist()}


def _run_bounds_only(cfg, inst, inp, rec):
    regime = inst.noise.regime
    ld = 1 + math.log(inst.d)
    alphas = _alpha_list(cfg) or [None]
    for n in cfg.n_grid:
        for p in cfg.p_grid:
            for a in alphas:
                rep = _moment_bound(inst, inp, cfg, n, p, a)
                rec.bound(rep, n=n, p=p)
                alpha = rep.inputs["alpha"]
                q = p * ld if regime == "iid" else 2 * p * ld
                for term in bounds.iterate_and_term_bounds(regime, n, p, q, alpha, inp,
                                                           "bounded" if regime == "markov"
                                                           else cfg.noise_mode or _default_mode(inst)):
                    rec.bound(term, n=n, p=p)
                if regime == "iid" and p == 2:
                    rec.bound(bounds.mse_bound_iid(n, alpha, inp), n=n, p=2)
                if regime == "markov":
                    rec.bound(bounds.bias_bound_markov(n, alpha, inp), n=n)
        for delta in cfg.delta_grid:
            rec.bound(bounds.hp_bound(regime, n, float(delta), inp, cfg.c1M), n=n, delta=delta)


def _write_csv(path, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in r])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(type(o).__name__)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
                          encoding="utf-8")


def cmd_run(cfg, out_dir=None):
    """Run the configured experiment and write its result files into ``out_dir``."""
    inst = _derive(cfg)
    theta0 = _theta0(cfg, inst)
    inp = bounds.bound_inputs(inst, theta0, literal_cov=cfg.literal_covariance)
    work = _plan_work(cfg, inst)
    if work > cfg.budget:
        raise BudgetError(f"planned work {work:.3g} exceeds budget {cfg.budget:.3g}")
    out_dir = Path(out_dir or cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rec = _Recorder(cfg.experiment, cfg.master_seed)
    meta = {
        "config": cfg.echo(),
        "versions": {"lsa_lab": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "seeds": {"master_seed": cfg.master_seed, "rng": "Philox keyed by (master_seed, index)",
                  "bootstrap_replicates": estimators.BOOTSTRAP_REPLICATES},
        "threads_resolved": estimators._resolve_threads(cfg.threads),
        "planned_work": work,
    }
    t0 = time.perf_counter()
    e = cfg.experiment
    if e == "validate":
        buf = io.StringIO()
        meta["diagnostics"] = cmd_validate(cfg, out=buf)
    elif e == "mse-sweep":
        _run_mse(cfg, inst, inp, theta0, rec)
    elif e == "moment-sweep":
        _run_moments(cfg, inst, inp, theta0, rec)
    elif e == "stability":
        _run_stability(cfg, inst, inp, rec)
    elif e == "bias":
        _run_bias(cfg, inst, inp, theta0, rec)
    elif e == "covariance":
        _run_covariance(cfg, inst, rec, meta)
    elif e == "bounds-only":
        _run_bounds_only(cfg, inst, inp, rec)
    meta["wall_time_s"] = time.perf_counter() - t0
    written = []
    if e == "bounds-only":
        _write_json(out_dir / "bounds.json", rec.reports)
        return [out_dir / "bounds.json"]
    if e != "validate":
        _write_csv(out_dir / "results.csv", rec.rows)
        _write_json(out_dir / "bounds.json", rec.reports)
        written += [out_dir / "results.csv", out_dir / "bounds.json"]
    _write_json(out_dir / "meta.json", meta)
    written.append(out_dir / "meta.json")
    return written


# ---------------------------------------------------------------------- main

def _parser():
    ap = argparse.ArgumentParser(
        prog="lsa-lab",
        description="Simulate averaged linear stochastic approximation and evaluate its bounds.",
        epilog="exit codes: 0 ok, 2 parse/missing input, 3 assumption violated, "
               "4 numerical failure, 5 budget exceeded",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("validate", "run"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="experiment config or instance JSON")
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument("--threads", type=int, help="worker threads, 0 = auto")
        sp.add_argument("--seed", type=int, help="master seed (overrides config and env)")
    rp = sub.add_parser("report")
    rp.add_argument("results_dir", nargs="?", help="directory holding results.csv")
    rp.add_argument("--out", help="where to write summary, series and figures")
    rp.add_argument("--config", help=argparse.SUPPRESS)
    rp.add_argument("--threads", type=int, help=argparse.SUPPRESS)
    rp.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    return ap


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(message)


def main(argv=None):
    ap = _parser()
    ap.__class__ = _Parser
    for action in ap._subparsers._group_actions:
        for sp in action.choices.values():
            sp.__class__ = _Parser
    try:
        args = ap.parse_args(argv)
    except _ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "report":
            from .report import cmd_report
            target = args.results_dir or args.out
            if target is None:
                raise ParseError("report needs a results directory")
            cmd_report(target, args.out)
            return 0
        cfg = load_config(args.config)
        env_seed = os.environ.get(SEED_ENV)
        if env_seed is not None:
            try:
                cfg.master_seed = int(env_seed)
            except ValueError as exc:
                raise ParseError(f"{SEED_ENV} must be an integer") from exc
        if args.seed is not None:
            cfg.master_seed = args.seed
        if args.threads is not None:
            cfg.threads = args.threads
        if not 0 <= cfg.master_seed < 2**64:
            raise ParseError("master seed must be an unsigned 64-bit integer")
        if args.command == "validate":
            cmd_validate(cfg)
            print("validation passed")
            return 0
        for path in cmd_run(cfg, args.out):
            print(f"wrote {path}")
        return 0
    except LSAError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
