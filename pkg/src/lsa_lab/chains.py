"""Finite-state noise processes: exact analysis and path sampling.

States are 0-based internally (``0 .. S-1``).
"""

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, ErgodicityError, HorizonExceededError
from .rng import stream


def _stochastic(P):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionError(f"transition matrix must be square, got {P.shape}")
    if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, rtol=0, atol=1e-12):
        raise DomainError("transition matrix rows must be nonnegative and sum to 1")
    return P


def stationary_distribution(P):
    """Unique invariant law of ``P``.

    Raises :class:`ErgodicityError` when the invariant law is not unique.
    """
    P = _stochastic(P)
    S = P.shape[0]
    M = np.vstack([(np.eye(S) - P).T, np.ones((1, S))])
    if np.linalg.matrix_rank(M) < S:
        raise ErgodicityError("transition matrix has more than one stationary distribution")
    rhs = np.zeros(S + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _row_spread(Pk):
    S = Pk.shape[0]
    best = 0.0
    for i in range(S):
        diffs = 0.5 * np.abs(Pk[i + 1:] - Pk[i]).sum(axis=1)
        if diffs.size:
            best = max(best, float(diffs.max()))
    return best


def dobrushin_coefficient(P, k=1):
    """Maximal half total-variation distance between rows of ``P^k``."""
    if int(k) != k or k <= 0:
        raise DomainError("k must be a positive integer")
    P = _stochastic(P)
    return _row_spread(np.linalg.matrix_power(P, int(k)))


def minimal_mixing_time(P, horizon=10_000):
    """First ``k <= horizon`` with ``dobrushin_coefficient(P, k) <= 1/4``."""
    P = _stochastic(P)
    Pk = P.copy()
    for k in range(1, int(horizon) + 1):
        if _row_spread(Pk) <= 0.25:
            return k
        Pk = Pk @ P
    raise HorizonExceededError(f"no power up to {horizon} has Dobrushin coefficient <= 1/4")


def check_mixing_certificate(P, t_mix, k_max=None):
    """Return the first ``k`` violating ``delta(P^k) <= (1/4)^(k // t_mix)``, or ``None``.

    By submultiplicativity it suffices to test ``k <= 2 * t_mix``; the default
    checks up to ``max(4 * t_mix, 16)``.
    """
    P = _stochastic(P)
    t_mix = int(t_mix)
    if t_mix < 1:
        raise DomainError("t_mix must be a positive integer")
    k_max = max(4 * t_mix, 16) if k_max is None else int(k_max)
    Pk = P.copy()
    for k in range(1, k_max + 1):
        if _row_spread(Pk) > 0.25 ** (k // t_mix) + 1e-12:
            return k
        Pk = Pk @ P
    return None


@dataclass(frozen=True)
class ChainAnalysis:
    """Exact summary of an ergodic kernel."""

    P: np.ndarray
    pi: np.ndarray
    t_mix_min: int
    fundamental: np.ndarray

    def dobrushin(self, k):
        return dobrushin_coefficient(self.P, k)


def fundamental_matrix(P, pi=None):
    """``(I - P + 1 pi^T)^{-1}``."""
    P = _stochastic(P)
    if pi is None:
        pi = stationary_distribution(P)
    S = P.shape[0]
    return np.linalg.solve(np.eye(S) - P + np.outer(np.ones(S), pi), np.eye(S))


def analyze_chain(P, horizon=10_000):
    P = _stochastic(P)
    pi = stationary_distribution(P)
    return ChainAnalysis(P=P, pi=pi, t_mix_min=minimal_mixing_time(P, horizon),
                         fundamental=fundamental_matrix(P, pi))


@dataclass(frozen=True)
class PathSample:
    """A realized noise path.

    ``states[k-1]`` holds ``z_k``. ``additive`` carries the Gaussian
    perturbation of ``b`` for sub-Gaussian noise (``None`` otherwise).
    """

    states: np.ndarray
    seed: int
    initial: np.ndarray
    additive: np.ndarray = None

    def __len__(self):
        return len(self.states)


def _cumulative(weights):
    c = np.cumsum(np.asarray(weights, dtype=float), axis=-1)
    c[..., -1] = 1.0
    return c


def states_from_uniforms(noise, u):
    """Map uniforms ``u`` of shape ``(R, n)`` to state paths of the same shape.

    Each row is processed independently, so the result for one row does not
    depend on the others.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if noise.is_markov:
        cumP = _cumulative(noise.P)
        out = np.empty(u.shape, dtype=np.intp)
        S = cumP.shape[0]
        if u.shape[0] <= 4:
            # scalar loop is far faster than per-step numpy calls on tiny batches
            rows = [list(r) for r in cumP]
            first = list(_cumulative(noise.xi))
            for r in range(u.shape[0]):
                ur = u[r].tolist()
                z = min(bisect_right(first, ur[0]), S - 1)
                path = [z]
                for x in ur[1:]:
                    z = min(bisect_right(rows[z], x), S - 1)
                    path.append(z)
                out[r] = path
            return out
        z = np.minimum(np.searchsorted(_cumulative(noise.xi), u[:, 0], side="right"), S - 1)
        out[:, 0] = z
        for k in range(1, u.shape[1]):
            z = np.minimum((u[:, k, None] >= cumP[z]).sum(axis=1), S - 1)
            out[:, k] = z
        return out
    cw = _cumulative(noise.weights)
    return np.minimum(np.searchsorted(cw, u, side="right"), len(cw) - 1)


def draw_path(noise, n, rng):
    """Draw ``(states, additive)`` for one path from generator ``rng``.

    The draw order is fixed: ``n`` uniforms, then ``n x d`` standard normals
    when the noise carries an additive Gaussian part.
    """
    u = rng.random(n)
    states = states_from_uniforms(noise, u[None, :])[0]
    additive = None
    if noise.additive_cov is not None:
        L = noise.additive_factor
        additive = rng.standard_normal((n, L.shape[0])) @ L.T
    return states, additive


def sample_path(noise, n, seed, index=0):
    """Sample ``z_1 .. z_n`` from the stream ``(seed, index)``."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    states, additive = draw_path(noise, int(n), stream(seed, index))
    initial = np.asarray(noise.xi if noise.is_markov else noise.weights, dtype=float)
    return PathSample(states=states, seed=int(seed), initial=initial, additive=additive)


def asymptotic_noise_covariance(instance, noise=None, literal=False):
    """Long-run covariance of the noise sequence ``eps(Z_k)``.

    Lag-0 covariance plus the symmetrized sum of all positive-lag
    autocovariances, summed in closed form with the fundamental matrix.
    ``literal=True`` starts the cross sum at lag 0 instead, which counts the
    lag-0 term three times; it exists only for side-by-side comparison.
    For i.i.d. noise the lag-0 covariance is returned.
    """
    noise = instance.noise if noise is None else noise
    eps = instance.eps_table
    if not noise.is_markov:
        gamma0 = instance.Sigma_eps
        return 3.0 * gamma0 if literal else gamma0.copy()
    P = _stochastic(noise.P)
    pi = stationary_distribution(P)
    Z = fundamental_matrix(P, pi)
    gamma0 = (pi[:, None] * eps).T @ eps
    tail = (pi[:, None] * eps).T @ ((Z - np.eye(len(pi))) @ eps)
    cross = tail + tail.T
    out = gamma0 + cross + (2.0 * gamma0 if literal else 0.0)
    return 0.5 * (out + out.T)


def truncated_noise_covariance(instance, noise=None, max_lag=None, tol=1e-14):
    """Same quantity by direct summation of autocovariances up to ``max_lag``.

    Without ``max_lag`` the series stops at the first lag whose Dobrushin
    coefficient falls below ``tol``.
    """
    noise = instance.noise if noise is None else noise
    P = _stochastic(noise.P)
    pi = stationary_distribution(P)
    eps = instance.eps_table
    weighted = (pi[:, None] * eps).T
    out = weighted @ eps
    Pl_eps = eps.copy()
    lag = 0
    Pl = np.eye(len(pi))
    while True:
        lag += 1
        Pl = Pl @ P
        Pl_eps = P @ Pl_eps
        C = weighted @ Pl_eps
        out = out + C + C.T
        if max_lag is not None:
            if lag >= max_lag:
                break
        elif _row_spread(Pl) <= tol or lag > 1_000_000:
            break
    return 0.5 * (out + out.T)
