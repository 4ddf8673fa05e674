"""Lyapunov certificates and the stability constants derived from them."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DimensionError, DomainError, NumericalError, StabilityError


def _square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def hurwitz_check(Abar):
    """True when every eigenvalue of ``Abar`` has strictly positive real part.

    Equivalently ``-Abar`` is Hurwitz, which is the stability notion the
    recursion needs.
    """
    Abar = _square(Abar, "Abar")
    if not np.all(np.isfinite(Abar)):
        raise DomainError("Abar has non-finite entries")
    return bool(np.all(np.linalg.eigvals(Abar).real > 0))


@dataclass(frozen=True)
class LyapunovSolution:
    """Solution ``Q`` of ``Abar^T Q + Q Abar = I`` with cached square roots."""

    Q: np.ndarray
    Q_sqrt: np.ndarray
    Q_sqrt_inv: np.ndarray
    eigenvalues: np.ndarray
    residual_norm: float

    @property
    def norm(self):
        return float(self.eigenvalues[-1])

    @property
    def condition_number(self):
        return float(self.eigenvalues[-1] / self.eigenvalues[0])


def solve_lyapunov(Abar):
    """Solve ``Abar^T Q + Q Abar = I`` by a dense Kronecker-vectorized solve.

    Raises
    ------
    StabilityError
        If ``Abar`` fails :func:`hurwitz_check`.
    NumericalError
        If the residual exceeds ``1e-10 * d`` or ``Q`` comes out indefinite.
    """
    if not hurwitz_check(Abar):
        raise StabilityError("Hurwitz check failed: Abar has an eigenvalue with non-positive real part")
    Abar = np.asarray(Abar, dtype=float)
    d = Abar.shape[0]
    eye = np.eye(d)
    # column-major vec: vec(A^T Q) = (I kron A^T) vec Q, vec(Q A) = (A^T kron I) vec Q
    K = np.kron(eye, Abar.T) + np.kron(Abar.T, eye)
    try:
        vecQ = np.linalg.solve(K, eye.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Lyapunov system is singular: {exc}") from exc
    Q = vecQ.reshape((d, d), order="F")
    Q = 0.5 * (Q + Q.T)
    residual = float(np.linalg.norm(Abar.T @ Q + Q @ Abar - eye, 2))
    if not np.isfinite(residual) or residual > 1e-10 * d:
        raise NumericalError(f"Lyapunov residual {residual:.3e} above tolerance", residual)
    w, V = np.linalg.eigh(Q)
    if w[0] <= 0:
        raise NumericalError("Lyapunov solution is not positive definite", residual)
    sq = np.sqrt(w)
    return LyapunovSolution(
        Q=Q,
        Q_sqrt=(V * sq) @ V.T,
        Q_sqrt_inv=(V / sq) @ V.T,
        eigenvalues=w,
        residual_norm=residual,
    )


def weighted_operator_norm(M, Q):
    """Spectral norm of ``Q^{1/2} M Q^{-1/2}``.

    ``Q`` may be a :class:`LyapunovSolution` or a symmetric positive definite
    array.
    """
    M = _square(M)
    if isinstance(Q, LyapunovSolution):
        root, root_inv = Q.Q_sqrt, Q.Q_sqrt_inv
    else:
        Q = _square(Q, "Q")
        if not np.allclose(Q, Q.T, rtol=1e-12, atol=1e-14):
            raise DomainError("Q must be symmetric")
        w, V = np.linalg.eigh(Q)
        if w[0] <= 0:
            raise DomainError("Q must be positive definite")
        root = (V * np.sqrt(w)) @ V.T
        root_inv = (V / np.sqrt(w)) @ V.T
    if M.shape != root.shape:
        raise DimensionError("M and Q must have the same shape")
    return float(np.linalg.norm(root @ M @ root_inv, 2))


@dataclass(frozen=True)
class StabilityConstants:
    """Step-size thresholds and contraction rate for the i.i.d. analysis."""

    d: int
    a: float
    alpha_inf: float
    kappa_Q: float
    b_A: float
    b_Q: float
    c_A: float
    lyapunov: LyapunovSolution = field(repr=False)
    flags: tuple = ()

    def alpha_q_inf(self, q):
        """Largest step size for which the q-th moment stability bound holds."""
        if q <= 0:
            raise DomainError("q must be positive")
        return min(self.alpha_inf, self.c_A / q)


def iid_stability_constants(Abar, b_A):
    """Build :class:`StabilityConstants` from the mean matrix and noise level ``b_A``."""
    Abar = _square(Abar, "Abar")
    if not (b_A >= 0 and math.isfinite(b_A)):
        raise DomainError("b_A must be finite and non-negative")
    sol = solve_lyapunov(Abar)
    qnorm = sol.norm
    a = 0.5 / qnorm
    abar_q = weighted_operator_norm(Abar, sol)
    alpha_inf = min(0.5 / (abar_q**2 * qnorm), qnorm)
    kappa = sol.condition_number
    b_Q = 2.0 * math.sqrt(kappa) * b_A
    flags = ()
    if b_Q == 0:
        c_A = math.inf
        flags = ("c_A_infinite",)
    else:
        c_A = a / (2.0 * b_Q**2)
    return StabilityConstants(
        d=Abar.shape[0], a=a, alpha_inf=alpha_inf, kappa_Q=kappa, b_A=float(b_A),
        b_Q=b_Q, c_A=c_A, lyapunov=sol, flags=flags,
    )


@dataclass(frozen=True)
class MarkovStabilityConstants:
    """Thresholds for the uniformly geometrically ergodic Markov analysis."""

    alpha_inf_M: float
    C_Gamma: float
    c_A_M: float
    block_h: int
    t_mix: int

    def alpha_q_inf_M(self, q):
        """Threshold before division by the mixing time."""
        if q <= 0:
            raise DomainError("q must be positive")
        return min(self.alpha_inf_M, self.c_A_M / q)

    def step_limit(self, q):
        """Threshold that the step size itself must not exceed."""
        return self.alpha_q_inf_M(q) / self.t_mix


def markov_stability_constants(consts, t_mix):
    """Derive the Markov thresholds from i.i.d. constants and a mixing time."""
    if int(t_mix) != t_mix or t_mix < 1:
        raise DomainError("t_mix must be a positive integer")
    t_mix = int(t_mix)
    a, kappa, b_A = consts.a, consts.kappa_Q, consts.b_A
    sk = math.sqrt(kappa)
    # the ceiling vanishes when b_A == 0; clamp so the division stays defined
    m = max(1, math.ceil(8.0 * sk * b_A / a))
    caps = [consts.alpha_inf]
    if b_A > 0:
        caps += [1.0 / (sk * b_A), a / (6.0 * math.e * kappa * b_A)]
    alpha_inf_M = min(caps) / m
    C_Gamma = 4.0 * (sk * b_A + a / 6.0) ** 2 * m
    c_A_M = a / (12.0 * C_Gamma)
    block = max(1, math.ceil(8.0 * sk * b_A * t_mix / a))
    return MarkovStabilityConstants(
        alpha_inf_M=alpha_inf_M, C_Gamma=C_Gamma, c_A_M=c_A_M, block_h=block, t_mix=t_mix,
    )
