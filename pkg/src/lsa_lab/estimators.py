"""Monte Carlo moment estimation over ensembles of independent trajectories."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import os

import numpy as np

from . import chains, recursion
from .errors import BudgetError, ConfigurationError, DomainError, PreconditionError
from .rng import bootstrap_stream, stream
from .spectral import iid_stability_constants, markov_stability_constants

DEFAULT_BUDGET = 5e10
BOOTSTRAP_REPLICATES = 400
CHUNK = 256


def pth_moment(samples, p):
    """``((1/R) sum ||v_i||^p)^(1/p)`` over the rows of ``samples``."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DomainError("pth_moment needs at least one sample")
    if not (p >= 1 and math.isfinite(p)):
        raise DomainError("p must be finite and >= 1")
    if x.ndim == 1:
        return _moment_of_norms(np.abs(x), p)
    flat = x.reshape(len(x), -1)
    scale = np.abs(flat).max()
    if scale == 0 or not np.isfinite(scale):
        scale = 1.0
    # scale first: squaring inside the norm overflows long before the p-th power does
    return _moment_of_norms(scale * np.linalg.norm(flat / scale, axis=1), p)


def _moment_of_norms(norms, p):
    top = norms.max()
    if top == 0:
        return 0.0
    # rescale before powering so large p cannot overflow
    return float(top * np.mean((norms / top) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class MomentRow:
    quantity: str
    n: int
    p: float
    estimate: float
    ci_low: float
    ci_high: float
    R: int
    master_seed: int


@dataclass
class MomentTable:
    """Rows of moment estimates plus the per-trajectory norms behind them."""

    rows: list = field(default_factory=list)
    bootstrap_replicates: int = BOOTSTRAP_REPLICATES
    norms: dict = field(default_factory=dict, repr=False)

    def get(self, quantity, n, p):
        for r in self.rows:
            if r.quantity == quantity and r.n == n and r.p == p:
                return r
        raise KeyError((quantity, n, p))


def bootstrap_ci(norms, p, master_seed, key, replicates=BOOTSTRAP_REPLICATES, level=0.95):
    """Percentile bootstrap interval for the p-th moment of ``norms``."""
    R = len(norms)
    rng = bootstrap_stream(master_seed, key)
    idx = rng.integers(0, R, size=(replicates, R))
    top = norms.max()
    if top == 0:
        return 0.0, 0.0
    reps = top * np.mean((norms[idx] / top) ** p, axis=1) ** (1.0 / p)
    lo, hi = np.percentile(reps, [50 * (1 - level), 50 * (1 + level)])
    return float(lo), float(hi)


def _tabulate(norm_map, p_grid, R, master_seed, replicates):
    table = MomentTable(bootstrap_replicates=replicates, norms=norm_map)
    key = 0
    for (quantity, n), norms in norm_map.items():
        previous = -math.inf
        for p in sorted(p_grid):
            est = _moment_of_norms(norms, p)
            lo, hi = bootstrap_ci(norms, p, master_seed, key, replicates)
            key += 1
            # percentile intervals can miss the plug-in value in degenerate samples
            lo, hi = min(lo, est), max(hi, est)
            if est < previous * (1 - 1e-12):
                raise ArithmeticError("power-mean monotonicity violated")
            previous = est
            table.rows.append(MomentRow(quantity, int(n), p, est, lo, hi, int(R), int(master_seed)))
    return table


def _resolve_threads(threads):
    threads = int(threads or 0)
    if threads <= 0:
        return os.cpu_count() or 1
    return threads


def _chunks(R, size=CHUNK):
    return [(lo, min(R, lo + size)) for lo in range(0, R, size)]


def _draw_chunk(noise, d, n, master_seed, lo, hi):
    U = np.empty((hi - lo, n))
    add = None
    if noise.additive_cov is not None:
        add = np.empty((hi - lo, n, d))
        L = noise.additive_factor
    for r, i in enumerate(range(lo, hi)):
        g = stream(master_seed, i)
        U[r] = g.random(n)
        if add is not None:
            add[r] = g.standard_normal((n, d)) @ L.T
    return chains.states_from_uniforms(noise, U), add


def check_budget(R, n, d, budget=DEFAULT_BUDGET):
    work = float(R) * float(n) * float(d) ** 2
    if work > budget:
        raise BudgetError(f"requested work R*n*d^2 = {work:.3g} exceeds budget {budget:.3g}")
    return work


def _map_chunks(fn, R, threads):
    parts = _chunks(R)
    threads = _resolve_threads(threads)
    if threads == 1 or len(parts) == 1:
        return [fn(lo, hi) for lo, hi in parts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), parts))


def simulate_norms(instance, alpha, n_grid, R, master_seed, quantities=("pr_error",),
                   theta0=None, threads=1, budget=DEFAULT_BUDGET):
    """Per-trajectory norms of each quantity at each horizon.

    Returns ``{(quantity, n): array of R norms}`` ordered by trajectory index.
    """
    n_grid = sorted({int(n) for n in n_grid})
    if R < 1:
        raise DomainError("R must be >= 1")
    for n in n_grid:
        if n < 2 or n % 2:
            raise DomainError(f"n={n} must be even and >= 2")
    bad = set(quantities) - set(recursion.QUANTITIES)
    if bad:
        raise DomainError(f"unknown quantities {sorted(bad)}")
    n_max = n_grid[-1]
    check_budget(R, n_max, instance.d, budget)
    theta0 = instance.theta_star if theta0 is None else np.asarray(theta0, dtype=float)
    terms = [q for q in quantities if q in recursion.TERMS]

    def work(lo, hi):
        states, add = _draw_chunk(instance.noise, instance.d, n_max, master_seed, lo, hi)
        res = recursion.simulate_batch(instance, alpha, states, theta0, n_grid,
                                       additive=add, terms=terms)
        return {(q, n): np.linalg.norm(res[n][q], axis=1) for q in quantities for n in n_grid}

    parts = _map_chunks(work, R, threads)
    return {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}


def run_ensemble(instance, alpha, n_grid, p_grid, R, master_seed, quantities=("pr_error",),
                 theta0=None, threads=1, budget=DEFAULT_BUDGET,
                 replicates=BOOTSTRAP_REPLICATES):
    """Moment table for ``quantities`` over ``R`` trajectories from ``theta0`` (default ``theta*``).

    Trajectory ``i`` draws its randomness from ``stream(master_seed, i)``.
    One trajectory of length ``max(n_grid)`` serves every horizon in the grid.
    """
    norms = simulate_norms(instance, alpha, n_grid, R, master_seed, quantities,
                           theta0, threads, budget)
    return _tabulate(norms, p_grid, R, master_seed, replicates)


def empirical_stability(instance, alpha, p, q, n_grid, R, master_seed, threads=1,
                        budget=DEFAULT_BUDGET, replicates=BOOTSTRAP_REPLICATES):
    """Moments of ``||Phi_{1:n}||`` over ``R`` paths.

    ``p`` may be a scalar or a list; every entry must satisfy ``2 <= p <= q``.
    """
    p_grid = [p] if np.isscalar(p) else list(p)
    if any(not (2 <= pp <= q) for pp in p_grid):
        raise DomainError("need 2 <= p <= q")
    consts = iid_stability_constants(instance.Abar, instance.b_A)
    noise = instance.noise
    if noise.is_markov:
        limit = markov_stability_constants(consts, noise.t_mix).step_limit(q)
        name = "alpha_q_inf_M(q)/t_mix"
    else:
        limit = consts.alpha_q_inf(q)
        name = "alpha_q_inf(q)"
    if alpha > limit * (1 + 1e-12):
        raise PreconditionError(f"step size {alpha:.6g} exceeds threshold {name} = {limit:.6g}")
    n_grid = sorted({int(n) for n in n_grid})
    n_max = max(n_grid)
    check_budget(R, max(n_max, 1), instance.d**1.5, budget)  # d^3 work per step

    def work(lo, hi):
        if n_max == 0:
            return {("product_norm", 0): np.ones(hi - lo)}
        states, _ = _draw_chunk(noise, instance.d, n_max, master_seed, lo, hi)
        res = recursion.product_batch(instance, alpha, states, n_grid)
        return {("product_norm", n): res[n] for n in n_grid}

    parts = _map_chunks(work, R, threads)
    norms = {key: np.concatenate([pt[key] for pt in parts]) for key in parts[0]}
    return _tabulate(norms, p_grid, R, master_seed, replicates)


def batch_means_covariance(instance, noise=None, path_length=1_000_000, batch_count=100, seed=0):
    """Batch-means estimate of the long-run covariance of ``eps(Z_k)`` from one path."""
    noise = instance.noise if noise is None else noise
    if not noise.is_markov:
        raise ConfigurationError("batch means needs Markov noise")
    if batch_count < 2:
        raise ConfigurationError("need at least two batches")
    size = path_length // batch_count
    if size < 100 * noise.t_mix:
        raise ConfigurationError(
            f"batch length {size} is below 100 * t_mix = {100 * noise.t_mix}"
        )
    path = chains.sample_path(noise, size * batch_count, seed)
    eps = instance.eps_table[path.states]
    means = eps.reshape(batch_count, size, -1).mean(axis=1)
    centred = means - means.mean(axis=0)
    out = size * centred.T @ centred / (batch_count - 1)
    return 0.5 * (out + out.T)
