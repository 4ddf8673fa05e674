"""The LSA recursion, its averaged iterate and its error decomposition.

All simulation goes through :func:`simulate_batch`, which advances a batch of
independent trajectories in lockstep.  Matrix-vector products are written as
explicit sums of elementwise products so that each trajectory's floating
point result is identical no matter how trajectories are batched.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

TERMS = ("tr", "J0", "J1", "H0", "H1")
QUANTITIES = ("theta_err", "theta_bar_err", "pr_error") + TERMS


def _mv(M, x):
    """Row-wise ``M @ x`` for ``M`` of shape (R, d, d) or (d, d) and ``x`` (R, d)."""
    if M.ndim == 2:
        M = M[None]
    out = M[:, :, 0] * x[:, 0, None]
    for j in range(1, x.shape[1]):
        out = out + M[:, :, j] * x[:, j, None]
    return out


def _mm(M, X):
    """Row-wise ``M @ X`` for stacks of square matrices."""
    out = M[:, :, 0, None] * X[:, 0, None, :]
    for j in range(1, X.shape[1]):
        out = out + M[:, :, j, None] * X[:, j, None, :]
    return out


def _check_run_args(alpha, n):
    if not alpha > 0:
        raise DomainError("step size must be positive")
    if int(n) != n or n < 2 or n % 2:
        raise DomainError("n must be an even integer >= 2")


def simulate_batch(instance, alpha, states, theta0, checkpoints, additive=None,
                   terms=(), store=False):
    """Advance ``R`` trajectories and record values at each checkpoint.

    Parameters
    ----------
    states : int array (R, n)
        ``states[r, k-1]`` is ``z_k`` of trajectory ``r``.
    checkpoints : iterable of even ints
        Horizons at which iterates, averages and terms are recorded.
    additive : array (R, n, d), optional
        Gaussian perturbation of ``b`` per step.
    terms : subset of ``TERMS``
        Decomposition terms to propagate.
    store : bool
        Keep the whole iterate sequence (meant for single paths).

    Returns
    -------
    dict
        ``out[c]`` maps quantity names to arrays of shape (R, d) for each
        checkpoint ``c``; ``out["theta_seq"]`` holds (R, n+1, d) when
        ``store`` is set.
    """
    states = np.atleast_2d(states)
    R, n_avail = states.shape
    checkpoints = sorted({int(c) for c in checkpoints})
    for c in checkpoints:
        _check_run_args(alpha, c)
    n = checkpoints[-1]
    if n > n_avail:
        raise DomainError(f"path of length {n_avail} is shorter than n={n}")
    A_tab, b_tab = instance.A_table, instance.b_table
    Abar, star = instance.Abar, instance.theta_star
    d = instance.d
    terms = set(terms)
    theta = np.broadcast_to(np.asarray(theta0, dtype=float), (R, d)).copy()
    acc = {c: np.zeros((R, d)) for c in checkpoints}
    want_noise = bool(terms - {"tr"})
    if want_noise:
        eps_tab = instance.eps_table
        Atil_tab = A_tab - Abar
        J0 = np.zeros((R, d))
        J1 = np.zeros((R, d))
        H0 = np.zeros((R, d))
        H1 = np.zeros((R, d))
    if "tr" in terms:
        tr = theta - star
    seq = None
    if store:
        seq = np.empty((R, n + 1, d))
        seq[:, 0] = theta
    out = {}
    windows = [(c // 2, c) for c in checkpoints]
    for k in range(1, n + 1):
        for lo, c in windows:
            if lo <= k - 1 < c:
                acc[c] += theta
        z = states[:, k - 1]
        Ak = A_tab[z]
        drive = b_tab[z]
        if additive is not None:
            drive = drive + additive[:, k - 1]
        theta = theta - alpha * (_mv(Ak, theta) - drive)
        if want_noise:
            eps_k = eps_tab[z]
            if additive is not None:
                eps_k = eps_k - additive[:, k - 1]
            At = Atil_tab[z]
            AtJ0 = _mv(At, J0)
            AtJ1 = _mv(At, J1)
            J0 = J0 - alpha * _mv(Abar, J0) - alpha * eps_k
            H0 = H0 - alpha * _mv(Ak, H0) - alpha * AtJ0
            J1 = J1 - alpha * _mv(Abar, J1) - alpha * AtJ0
            H1 = H1 - alpha * _mv(Ak, H1) - alpha * AtJ1
        if "tr" in terms:
            tr = tr - alpha * _mv(Ak, tr)
        if store:
            seq[:, k] = theta
        if k in acc:
            bar = acc[k] * (2.0 / k)
            rec = {
                "theta": theta.copy(),
                "theta_bar": bar,
                "theta_err": theta - star,
                "theta_bar_err": bar - star,
                "pr_error": _mv(Abar, bar - star),
            }
            if want_noise:
                rec.update(J0=J0.copy(), J1=J1.copy(), H0=H0.copy(), H1=H1.copy())
            if "tr" in terms:
                rec["tr"] = tr.copy()
            out[k] = rec
    if store:
        out["theta_seq"] = seq
    return out


def _path_arrays(path, n):
    states = np.asarray(path.states)
    if len(states) < n:
        raise DomainError(f"path of length {len(states)} is shorter than n={n}")
    add = None if getattr(path, "additive", None) is None else np.asarray(path.additive)[None, :n]
    return states[None, :n], add


@dataclass(frozen=True)
class LSARun:
    theta_n: np.ndarray
    theta_bar: np.ndarray
    thetas: np.ndarray = None


def run_lsa(instance, alpha, n, theta0, path, store=False):
    """Run ``n`` steps along ``path``; returns :class:`LSARun`.

    ``theta_bar`` averages ``theta_k`` for ``n/2 <= k < n``.
    """
    _check_run_args(alpha, n)
    states, add = _path_arrays(path, n)
    res = simulate_batch(instance, alpha, states, theta0, [n], additive=add, store=store)
    rec = res[n]
    return LSARun(rec["theta"][0], rec["theta_bar"][0],
                  res["theta_seq"][0] if store else None)


@dataclass(frozen=True)
class DecompositionTrace:
    """Final iterate, average and the five error components at horizon ``n``."""

    theta: np.ndarray
    theta_bar: np.ndarray
    tr_term: np.ndarray
    J0: np.ndarray
    J1: np.ndarray
    H0: np.ndarray
    H1: np.ndarray
    theta_star: np.ndarray
    per_step_terms: dict = None

    @property
    def theta_n(self):
        return self.theta[-1]

    def lsa_residual(self):
        """Size of ``theta_n - theta* - (tr + J0 + H0)``."""
        return float(np.linalg.norm(self.theta_n - self.theta_star - self.tr_term - self.J0 - self.H0))

    def split_residual(self):
        """Size of ``H0 - (J1 + H1)``."""
        return float(np.linalg.norm(self.H0 - self.J1 - self.H1))


def run_decomposition(instance, alpha, n, theta0, path, per_step=False):
    """Compute every error component along ``path`` by forward recursions.

    With ``per_step`` each component is recorded at every horizon ``2..n``
    (even horizons only, since the average needs an even sample size).
    """
    _check_run_args(alpha, n)
    states, add = _path_arrays(path, n)
    cps = list(range(2, n + 1, 2)) if per_step else [n]
    res = simulate_batch(instance, alpha, states, theta0, cps, additive=add,
                         terms=TERMS, store=True)
    rec = res[n]
    steps = None
    if per_step:
        steps = {t: np.array([res[c][t][0] for c in cps]) for t in TERMS}
        steps["n"] = np.array(cps)
    return DecompositionTrace(
        theta=res["theta_seq"][0], theta_bar=rec["theta_bar"][0], tr_term=rec["tr"][0],
        J0=rec["J0"][0], J1=rec["J1"][0], H0=rec["H0"][0], H1=rec["H1"][0],
        theta_star=instance.theta_star, per_step_terms=steps,
    )


def check_pr_identity(instance, alpha, n, theta0, path):
    """Residual of the averaged-error representation through the increments ``e(theta_t, Z_{t+1})``."""
    _check_run_args(alpha, n)
    run = run_lsa(instance, alpha, n, theta0, path, store=True)
    th = run.thetas
    n0 = n // 2
    z = np.asarray(path.states)[n0:n]          # z_{t+1} for t = n0 .. n-1
    Atil = instance.A_table[z] - instance.Abar
    btil = instance.b_table[z] - instance.bbar
    if getattr(path, "additive", None) is not None:
        btil = btil + np.asarray(path.additive)[n0:n]
    e = np.einsum("tij,tj->ti", Atil, th[n0:n]) - btil
    m = n - n0
    rhs = (th[n0] - th[n]) / (alpha * m) - e.sum(axis=0) / m
    lhs = instance.Abar @ (run.theta_bar - instance.theta_star)
    return float(np.linalg.norm(lhs - rhs))


def identity_residuals(instance, alpha, n, theta0, states, additive=None):
    """Per-trajectory residuals of both error identities for a batch of paths.

    Returns ``(decomposition, averaged)`` arrays of length ``R``.  The first
    is the larger of the ``theta_n`` split and the ``H0 = J1 + H1`` split;
    the second is the averaged-error representation checked by
    :func:`check_pr_identity`.  One lockstep pass serves the whole batch.
    """
    _check_run_args(alpha, n)
    states = np.atleast_2d(states)[:, :n]
    res = simulate_batch(instance, alpha, states, theta0, [n], additive=additive,
                         terms=TERMS, store=True)
    rec, th = res[n], res["theta_seq"]
    star = instance.theta_star
    split = np.linalg.norm(rec["theta"] - star - rec["tr"] - rec["J0"] - rec["H0"], axis=1)
    split = np.maximum(split, np.linalg.norm(rec["H0"] - rec["J1"] - rec["H1"], axis=1))
    n0 = n // 2
    z = states[:, n0:n]
    Atil = instance.A_table[z] - instance.Abar
    btil = instance.b_table[z] - instance.bbar
    if additive is not None:
        btil = btil + additive[:, n0:n]
    e = np.einsum("rtij,rtj->rti", Atil, th[:, n0:n]) - btil
    m = n - n0
    rhs = (th[:, n0] - th[:, n]) / (alpha * m) - e.sum(axis=1) / m
    lhs = (rec["theta_bar"] - star) @ instance.Abar.T
    return split, np.linalg.norm(lhs - rhs, axis=1)


def product_norm(instance, alpha, path, m, n):
    """Spectral norm of ``(I - alpha A(z_n)) ... (I - alpha A(z_m))``; 1 when ``m > n``."""
    if m < 1:
        raise DomainError("m must be >= 1")
    d = instance.d
    if m > n:
        return 1.0
    if len(path.states) < n:
        raise DomainError(f"path of length {len(path.states)} does not cover index {n}")
    Phi = np.eye(d)
    for k in range(m, n + 1):
        Phi = Phi - alpha * (instance.A_table[path.states[k - 1]] @ Phi)
    return float(np.linalg.norm(Phi, 2))


def product_batch(instance, alpha, states, checkpoints):
    """Spectral norms of ``Phi_{1:c}`` for each row of ``states`` and checkpoint ``c``."""
    states = np.atleast_2d(states)
    R = states.shape[0]
    d = instance.d
    Phi = np.broadcast_to(np.eye(d), (R, d, d)).copy()
    cps = sorted({int(c) for c in checkpoints})
    out = {}
    if 0 in cps:
        out[0] = np.ones(R)
    for k in range(1, cps[-1] + 1):
        Phi = Phi - alpha * _mm(instance.A_table[states[:, k - 1]], Phi)
        if k in cps:
            out[k] = np.linalg.norm(Phi, 2, axis=(1, 2))
    return out


@dataclass(frozen=True)
class MeanDynamics:
    means: np.ndarray          # E[theta_k], k = 0..n
    theta_bar_mean: np.ndarray
    bias: float


def exact_mean_dynamics(instance, alpha, n, theta0, xi=None):
    """Exact ``E[theta_k]`` by propagating ``E[theta_k 1{Z_k = z}]`` and ``P(Z_k = z)``.

    The additive Gaussian part of sub-Gaussian noise has mean zero and does
    not enter.  ``xi`` overrides the initial law of a Markov chain.
    """
    _check_run_args(alpha, n)
    noise = instance.noise
    P = noise.transition()
    mu = np.asarray(noise.xi if noise.is_markov else noise.weights, dtype=float)
    if xi is not None:
        mu = np.asarray(xi, dtype=float)
    d, S = instance.d, len(mu)
    step = np.eye(d)[None] - alpha * instance.A_table        # (S, d, d)
    ab = alpha * instance.b_table
    theta0 = np.asarray(theta0, dtype=float)
    means = np.empty((n + 1, d))
    means[0] = theta0
    # k = 1: Z_1 ~ mu, theta_0 deterministic
    m = mu[:, None] * (step @ theta0 + ab)
    means[1] = m.sum(axis=0)
    for k in range(2, n + 1):
        mu = mu @ P
        m = np.einsum("zij,zj->zi", step, P.T @ m) + mu[:, None] * ab
        means[k] = m.sum(axis=0)
    bar = means[n // 2:n].mean(axis=0)
    return MeanDynamics(means, bar, float(np.linalg.norm(bar - instance.theta_star)))


def mean_noise_coupling(instance, alpha, t_max, xi=None):
    """Exact ``E[Atil(Z_{t+1}) J0_t]`` for ``t = 0..t_max`` (rows of the result)."""
    noise = instance.noise
    P = noise.transition()
    mu = np.asarray(noise.xi if noise.is_markov else noise.weights, dtype=float)
    if xi is not None:
        mu = np.asarray(xi, dtype=float)
    d = instance.d
    Atil = instance.A_table - instance.Abar
    contract = np.eye(d) - alpha * instance.Abar
    out = np.zeros((t_max + 1, d))
    if t_max < 1:
        return out
    # u(z) = E[J0_t 1{Z_t = z}], starting from t = 1
    u = -alpha * mu[:, None] * instance.eps_table
    for t in range(1, t_max + 1):
        if t > 1:
            mu = mu @ P
            u = (P.T @ u) @ contract.T - alpha * mu[:, None] * instance.eps_table
        out[t] = np.einsum("zij,zj->i", Atil, P.T @ u)
    return out
