"""Closed-form constants, step-size rules and finite-time error bounds.

Every bound evaluator returns a :class:`BoundReport`.  Step sizes outside a
bound's admissible range do not raise; the report is marked ineligible so
sweeps can show where a guarantee stops applying.  :func:`stability_bound`
is the exception and raises :class:`PreconditionError`.
"""

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from .errors import DomainError, PreconditionError
from .spectral import MarkovStabilityConstants, StabilityConstants

E = math.e
C_RM1 = 60.0 * math.e
C_RM2 = 60.0


# ------------------------------------------------------------------ constants

@dataclass(frozen=True)
class ConstantSet:
    """Every numeric constant the bounds use, for one instance."""

    D1: float
    D2: float
    D3: float
    D4: float
    C_Rm1: float
    C_Rm2: float
    c3: float
    c4: float
    c5: float
    c2: float
    D1_sg: float
    D3_sg: float
    D4_sg: float
    DM1: float = None
    DM2: float = None
    DM_J1: float = None
    DM_J2: float = None
    DM_H1: float = None
    DM_H2: float = None
    DM4: float = None
    DM5: float = None
    DM6: float = None
    DM7: float = None
    DM_S: float = None
    C_Ros1_M: float = None
    C_Ros2_M: float = None

    @property
    def has_markov(self):
        return self.DM1 is not None

    def require_markov(self):
        if not self.has_markov:
            raise DomainError("Markov constants were not requested for this constant set")
        return self


def constants(instance_consts, markov=None, t_mix=None):
    """Evaluate the constant set; Markov constants only when ``markov`` is given."""
    if t_mix is not None and markov is None:
        raise DomainError("a mixing time was given without Markov stability constants")
    if markov is not None and t_mix is not None and int(t_mix) != markov.t_mix:
        raise DomainError("t_mix disagrees with the Markov stability constants")
    c = instance_consts
    a, k, bA, d = c.a, c.kappa_Q, c.b_A, c.d
    sk = math.sqrt(k)
    D1 = math.sqrt(2 * k) / a
    D2 = math.sqrt(2 * k) / a * (1 + 4 * sk * bA / a)
    D3 = 2 * k * bA / a**2
    D4 = 4 * sk * bA * D3 / a
    m = min(c.alpha_inf, c.c_A)
    c3 = 4 * math.sqrt(a) * D2 / math.sqrt(m) + 2 * C_RM2 + math.sqrt(m * a) * bA * D1
    c4 = bA * (D3 + D4) * a * m
    c5 = sk * (4 / m + bA)
    ld = 1 + math.log(d)
    c2 = 3 * E * math.sqrt(2) * max((c3 + c4) * math.sqrt(ld), c5 * ld)
    D3_sg = 4 * k * bA / a**2
    out = dict(
        D1=D1, D2=D2, D3=D3, D4=D4, C_Rm1=C_RM1, C_Rm2=C_RM2, c3=c3, c4=c4, c5=c5, c2=c2,
        D1_sg=2 * sk / a, D3_sg=D3_sg, D4_sg=4 * sk * bA * D3_sg / a**2,
    )
    if markov is not None:
        DM1 = 2**3.5 * sk / a * (math.exp(-0.25) + math.sqrt(2 * math.pi * E) * bA / a)
        DM2 = DM1 * (1 + 24 * math.sqrt(2) * E**2 * sk * bA / a)
        l2 = math.log(2)
        DM_J1 = 64 * k * bA / a**2 * ((math.sqrt(2) + sk) / math.sqrt(2 * l2)
                                      + 2 * math.sqrt(math.pi) * sk + sk / math.sqrt(l2))
        DM_J2 = (128 / 3) * k**1.5 * bA / a**2
        DM_H1 = 96 / a * bA * E**2 * sk * DM_J1
        DM_H2 = 48 / a * bA * E**2 * sk * DM_J2
        DM7 = (4 / 3) * sk * bA / a
        out.update(
            DM1=DM1, DM2=DM2, DM_J1=DM_J1, DM_J2=DM_J2, DM_H1=DM_H1, DM_H2=DM_H2,
            DM4=48 * sk * E**3,
            DM5=4 * E * (DM_J1 + DM_H1) + DM7 / math.sqrt(l2),
            DM6=math.sqrt(2) * E * (DM_J2 + DM_H2),
            DM7=DM7, DM_S=16 * k * bA,
            C_Ros1_M=16 * math.sqrt(19) / (3 * math.sqrt(3)) * C_RM1**2.5,
            C_Ros2_M=64 * (C_RM1**2 * math.sqrt(C_RM2) + C_RM2),
        )
    return ConstantSet(**out)


# ----------------------------------------------------------------- step sizes

def _even(n, least=2):
    if int(n) != n or n < least or n % 2:
        raise DomainError(f"n must be an even integer >= {least}")


def step_size_iid(n, d, p, consts):
    """``(alpha_inf ^ c_A/(1 + ln d)) / (p sqrt(n))``."""
    _even(n)
    if p < 2:
        raise DomainError("p must be >= 2")
    return min(consts.alpha_inf, consts.c_A / (1 + math.log(d))) / (p * math.sqrt(n))


def step_size_markov(n, d, p, t_mix, mconsts):
    """``(alpha_inf_M ^ c_A_M/(1 + ln d)) / (p n^(2/3) t_mix^(1/3))``."""
    if n < max(4, t_mix):
        raise DomainError("n must be at least max(4, t_mix)")
    _even(n, 4)
    if p < 2:
        raise DomainError("p must be >= 2")
    m = min(mconsts.alpha_inf_M, mconsts.c_A_M / (1 + math.log(d)))
    return m / (p * n ** (2 / 3) * t_mix ** (1 / 3))


# ------------------------------------------------------------------ reporting

@dataclass
class BoundReport:
    """One evaluated bound split into its additive components."""

    bound_id: str
    leading: float = 0.0
    fluctuation: float = 0.0
    transient: float = 0.0
    bias: float = 0.0
    inputs: dict = field(default_factory=dict)
    eligibility: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def total(self):
        return self.leading + self.fluctuation + self.transient + self.bias

    @property
    def eligible(self):
        return all(e["ok"] for e in self.eligibility)

    def require(self, name, value, limit, strict=False):
        ok = value < limit if strict else value <= limit
        self.eligibility.append({"name": name, "value": float(value), "limit": float(limit),
                                 "strict": strict, "ok": bool(ok)})
        if not ok and "ineligible" not in self.flags:
            self.flags.append("ineligible")

    def to_dict(self):
        out = asdict(self)
        out["components"] = {k: out.pop(k) for k in ("leading", "fluctuation", "transient", "bias")}
        out["total"] = self.total
        out["eligible"] = self.eligible
        return out


@dataclass(frozen=True)
class BoundInputs:
    """Instance-level quantities shared by all bound evaluators."""

    consts: StabilityConstants
    cset: ConstantSet
    d: int
    tr_sigma: float
    eps_sup: float
    init_dist: float
    mconsts: MarkovStabilityConstants = None
    tr_sigma_M: float = None
    sigma_eps: float = None
    sigma_dir: float = None    # largest eigenvalue of the noise covariance

    @property
    def t_mix(self):
        return None if self.mconsts is None else self.mconsts.t_mix

    def echo(self, **extra):
        base = {"d": self.d, "t_mix": self.t_mix, "TrSigma": self.tr_sigma,
                "TrSigmaM": self.tr_sigma_M, "eps_sup": self.eps_sup,
                "sigma_eps": self.sigma_eps, "init_dist": self.init_dist}
        base.update(extra)
        return base

    def with_init(self, init_dist):
        return BoundInputs(self.consts, self.cset, self.d, self.tr_sigma, self.eps_sup,
                           float(init_dist), self.mconsts, self.tr_sigma_M,
                           self.sigma_eps, self.sigma_dir)


def bound_inputs(instance, theta0=None, literal_cov=False):
    """Assemble :class:`BoundInputs` for a derived instance."""
    from . import chains
    from .spectral import iid_stability_constants, markov_stability_constants

    consts = iid_stability_constants(instance.Abar, instance.b_A)
    mconsts = None
    tr_M = None
    if instance.noise.is_markov:
        mconsts = markov_stability_constants(consts, instance.noise.t_mix)
        tr_M = float(np.trace(chains.asymptotic_noise_covariance(instance, literal=literal_cov)))
    theta0 = instance.theta_star if theta0 is None else np.asarray(theta0, dtype=float)
    return BoundInputs(
        consts=consts, cset=constants(consts, mconsts), d=instance.d,
        tr_sigma=float(np.trace(instance.Sigma_eps)), eps_sup=instance.eps_sup,
        init_dist=float(np.linalg.norm(theta0 - instance.theta_star)),
        mconsts=mconsts, tr_sigma_M=tr_M, sigma_eps=instance.sigma_eps,
        sigma_dir=float(np.linalg.eigvalsh(instance.Sigma_eps)[-1]),
    )


# ------------------------------------------------------- fluctuation formulas
# Each helper returns the bracketed coefficient that multiplies the noise
# level (or initial distance).  They are mirrored term by term in
# ``bounds_table`` and the two are compared in the test-suite.

def mse_fluctuation(n, alpha, inp):
    c, D2 = inp.consts, inp.cset.D2
    return 64 * E * D2**2 / (alpha * n) + 16 * E * alpha * c.b_A**2 * D2**2


def mse_transient(n, alpha, inp):
    c = inp.consts
    return 32 * E * c.kappa_Q / (alpha**2 * n) + 128 * E * c.kappa_Q * c.b_A**2 / (7 * alpha * c.a * n)


def pr_fluctuation(n, p, alpha, inp):
    c, s = inp.consts, inp.cset
    ep = E ** (1 / p)
    return (4 * ep * s.D2 * math.sqrt(c.a * p) / math.sqrt(alpha * n)
            + ep * c.b_A * (s.D3 + s.D4) * alpha * c.a * p**2.5
            + 2 * s.C_Rm2 * p / math.sqrt(n)
            + c.b_A * s.D1 * math.sqrt(alpha * c.a) * p**1.5)


def pr_transient(n, p, alpha, inp):
    c = inp.consts
    return E ** (1 / p) * math.sqrt(c.kappa_Q) * (4 / (alpha * math.sqrt(n))
                                                  + math.sqrt(n) * c.b_A / math.sqrt(2))


def pr_fluctuation_sg(n, p, alpha, inp):
    c, s = inp.consts, inp.cset
    ep = E ** (1 / p)
    return (4 * ep * s.D2 * math.sqrt(p) / math.sqrt(alpha * n)
            + ep * c.b_A * (s.D3_sg + s.D4_sg) * alpha * c.a * p**3
            + 3 * math.sqrt(2) * s.C_Rm2 * math.sqrt(math.log(E * n)) * p**1.5 / math.sqrt(n)
            + c.b_A * s.D1_sg * math.sqrt(alpha) * p**1.5)


def pr_transient_sg(n, p, alpha, inp):
    c = inp.consts
    return E ** (1 / p) * math.sqrt(c.kappa_Q) * (2 * math.sqrt(2) / (alpha * math.sqrt(n))
                                                  + math.sqrt(n) * c.b_A / math.sqrt(2))


def _log_inv(alpha, a):
    """``ln(1/(alpha a))`` clamped at zero for step sizes beyond ``1/a``."""
    return max(0.0, -math.log(alpha * a))


def markov_fluctuation(n, p, alpha, inp):
    c, s, t = inp.consts, inp.cset.require_markov(), inp.t_mix
    a, ep = c.a, E ** (1 / p)
    lg = math.log2(2 * p)
    tail = 1 / (alpha * math.sqrt(n)) + math.sqrt(n) * c.b_A
    return (8 * s.DM2 * ep * math.sqrt(a * p * t) / math.sqrt(alpha * n)
            + math.sqrt(2) * s.C_Ros1_M * t**0.75 * p * lg / n**0.25
            + 2 * s.C_Ros2_M * t * p * lg / math.sqrt(n)
            + 8 * ep * (s.DM_J1 + s.DM_H1) * alpha * a * t * math.sqrt(_log_inv(alpha, a)) * p**2 * tail
            + 8 * ep * (s.DM_J2 + s.DM_H2) * (alpha * a * t) ** 1.5 * math.sqrt(p) * tail)


def markov_transient(n, p, alpha, inp):
    c = inp.consts
    return E ** (2 + 1 / p) * math.sqrt(c.kappa_Q) * (4 / (alpha * math.sqrt(n))
                                                      + math.sqrt(n) * c.b_A / math.sqrt(2))


def bias_coefficients(n, alpha, inp):
    """Coefficients of the initial distance and of the noise level in the bias bound."""
    c, s, t = inp.consts, inp.cset.require_markov(), inp.t_mix
    a = c.a
    init = s.DM4 * math.exp(-alpha * a * n / 24) / (alpha * a * n)
    noise = (s.DM5 * alpha * a * t * math.sqrt(_log_inv(alpha, a))
             + s.DM6 * (alpha * a * t) ** 1.5)
    return init, noise


# ---------------------------------------------------------------- evaluators

def _check_alpha(alpha):
    if not (alpha > 0 and math.isfinite(alpha)):
        raise DomainError("step size must be positive and finite")


def mse_bound_iid(n, alpha, inp, noise_mode="bounded"):
    """Bound on ``(n/2) E||Abar (theta_bar_n - theta*)||^2`` for i.i.d. noise."""
    _even(n)
    _check_alpha(alpha)
    c = inp.consts
    ld = 1 + math.log(inp.d)
    rep = BoundReport("mse_iid", inputs=inp.echo(n=n, p=2, q=2 * ld, alpha=alpha,
                                                  noise_mode=noise_mode))
    rep.require("alpha < alpha_inf ^ c_A/(2+2 ln d)", alpha, min(c.alpha_inf, c.c_A / (2 * ld)), strict=True)
    if noise_mode == "bounded":
        rep.leading = 4 * inp.tr_sigma
        rep.fluctuation = mse_fluctuation(n, alpha, inp) * inp.eps_sup
    elif noise_mode == "subgaussian":
        rep.leading = 4 * inp.sigma_dir
        rep.fluctuation = mse_fluctuation(n, alpha, inp) * _sigma(inp)
        rep.flags.append("directional: leading term uses the top covariance eigenvalue")
    else:
        raise DomainError(f"unknown noise mode {noise_mode!r}")
    rep.transient = math.exp(-alpha * c.a * n / 4) * mse_transient(n, alpha, inp) * inp.init_dist**2
    return rep


def _sigma(inp):
    if inp.sigma_eps is None:
        raise DomainError("sub-Gaussian mode needs a noise proxy sigma_eps")
    return inp.sigma_eps


def pr_moment_bound_iid(n, p, inp, alpha=None, noise_mode="bounded"):
    """Bound on ``(n/2)^(1/2) E^(1/p)||Abar (theta_bar_n - theta*)||^p`` for i.i.d. noise.

    ``alpha=None`` selects the optimized step size.  With bounded noise this
    returns the closed form written with ``c3, c4, c5``; the explicit form at
    the same step size is kept in ``extras["explicit_total"]``.
    """
    _even(n)
    if p < 2:
        raise DomainError("p must be >= 2")
    c, s = inp.consts, inp.cset
    ld = 1 + math.log(inp.d)
    optimized = alpha is None
    if optimized:
        alpha = step_size_iid(n, inp.d, p, c)
    _check_alpha(alpha)
    rep = BoundReport(f"pr_moment_iid_{noise_mode}",
                      inputs=inp.echo(n=n, p=p, q=p * ld, alpha=alpha, optimized=optimized,
                                      noise_mode=noise_mode))
    if noise_mode == "bounded":
        rep.require("alpha < alpha_q_inf(p(1+ln d))", alpha, c.alpha_q_inf(p * ld), strict=True)
        rep.leading = s.C_Rm1 * math.sqrt(inp.tr_sigma * p)
        fl = pr_fluctuation(n, p, alpha, inp) * inp.eps_sup
        tr = math.exp(-alpha * c.a * n / 8) * pr_transient(n, p, alpha, inp) * inp.init_dist
        rep.extras["explicit_total"] = rep.leading + fl + tr
        if optimized:
            m = min(c.alpha_inf, c.c_A)
            ep = E ** (1 / p)
            fl = ep * inp.eps_sup * (s.c3 * math.sqrt(ld) * p / n**0.25 + s.c4 * p / math.sqrt(n))
            tr = (ep * s.c5 * ld * (p + math.sqrt(n)) * inp.init_dist
                  * math.exp(-m * math.sqrt(n) / (8 * p * ld)))
        rep.fluctuation, rep.transient = fl, tr
    elif noise_mode == "subgaussian":
        rep.require("alpha < alpha_inf ^ c_A/(p(1+ln d))", alpha,
                    min(c.alpha_inf, c.c_A / (p * ld)), strict=True)
        rep.leading = s.C_Rm1 * math.sqrt(inp.sigma_dir * p)
        rep.fluctuation = _sigma(inp) * pr_fluctuation_sg(n, p, alpha, inp)
        rep.transient = (pr_transient_sg(n, p, alpha, inp) * (1 - alpha * c.a / 4) ** (n / 2)
                         * inp.init_dist)
        rep.flags.append("directional: leading term uses the top covariance eigenvalue")
    else:
        raise DomainError(f"unknown noise mode {noise_mode!r}")
    return rep


def pr_moment_bound_markov(n, p, inp, alpha=None):
    """Bound on ``(n/2)^(1/2) E^(1/p)||Abar (theta_bar_n - theta*)||^p`` under Markov noise."""
    _even(n, 4)
    if p < 2:
        raise DomainError("p must be >= 2")
    if inp.mconsts is None:
        raise DomainError("Markov bound needs Markov stability constants")
    c, s, t = inp.consts, inp.cset.require_markov(), inp.t_mix
    ld = 1 + math.log(inp.d)
    optimized = alpha is None
    if optimized:
        alpha = step_size_markov(n, inp.d, p, t, inp.mconsts)
    _check_alpha(alpha)
    rep = BoundReport("pr_moment_markov", inputs=inp.echo(n=n, p=p, q=p * ld, alpha=alpha,
                                                           optimized=optimized))
    rep.require("alpha <= alpha_q_inf_M(p(1+ln d))/t_mix", alpha, inp.mconsts.step_limit(p * ld))
    if alpha * c.a >= 1:
        rep.flags.append("log(1/(alpha a)) clamped at 0")
    rep.leading = s.C_Rm1 * math.sqrt(inp.tr_sigma_M * p)
    rep.fluctuation = inp.eps_sup * markov_fluctuation(n, p, alpha, inp)
    rep.transient = (markov_transient(n, p, alpha, inp) * inp.init_dist
                     * math.exp(-alpha * c.a * n / 24))
    return rep


def hp_radius_iid(n, p, inp):
    """High-probability radius for ``sqrt(n)||Abar(theta_bar_n - theta*)||`` at log-level ``p``."""
    c, s = inp.consts, inp.cset
    ld = 1 + math.log(inp.d)
    m = min(c.alpha_inf, c.c_A)
    rep = BoundReport("hp_iid")
    rep.leading = 3 * E * math.sqrt(2) * math.sqrt(inp.tr_sigma * p)
    rep.fluctuation = s.c2 * n**-0.25 * inp.eps_sup * p**1.5
    rep.transient = (s.c2 * (p + math.sqrt(n)) * inp.init_dist
                     * math.exp(-m * math.sqrt(n) / (8 * ld * p)))
    return rep


def hp_radius_markov(n, p, inp, c1M=1.0):
    """Markov analogue of :func:`hp_radius_iid`; ``c1M`` is a user-set constant."""
    t = inp.t_mix
    ld = 1 + math.log(inp.d)
    m = min(inp.mconsts.alpha_inf_M, inp.mconsts.c_A_M)
    rep = BoundReport("hp_markov")
    rep.leading = 3 * E * math.sqrt(2) * math.sqrt(inp.tr_sigma_M * p)
    rep.fluctuation = c1M * inp.eps_sup * p * (n ** (-1 / 6) * math.log(n) * t ** (2 / 3)
                                               + t * p / math.sqrt(n))
    rep.transient = (c1M * (n ** (1 / 6) * t ** (1 / 3) * p + math.sqrt(n)) * inp.init_dist
                     * math.exp(-m * n ** (1 / 3) / (24 * t ** (1 / 3) * ld * p)))
    rep.flags += ["c1M is not specified by the source result; value supplied by configuration",
                  "leading constant 3e*sqrt(2) carried over from the i.i.d. statement"]
    return rep


def hp_bound(regime, n, delta, inp, c1M=1.0):
    """Radius holding with probability at least ``1 - delta``, with ``p = ln(3e/delta)``."""
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    p = math.log(3 * E / delta)
    if regime == "iid":
        _even(n)
        rep = hp_radius_iid(n, p, inp)
        alpha = step_size_iid(n, inp.d, p, inp.consts)
        rep.require("alpha < alpha_q_inf(p(1+ln d))", alpha,
                    inp.consts.alpha_q_inf(p * (1 + math.log(inp.d))), strict=True)
    elif regime == "markov":
        if inp.mconsts is None:
            raise DomainError("Markov bound needs Markov stability constants")
        rep = hp_radius_markov(n, p, inp, c1M)
        alpha = step_size_markov(n, inp.d, p, inp.t_mix, inp.mconsts)
    else:
        raise DomainError(f"unknown regime {regime!r}")
    rep.inputs = inp.echo(n=n, p=p, delta=delta, alpha=alpha, c1M=c1M if regime == "markov" else None)
    return rep


def iterate_and_term_bounds(regime, n, p, q, alpha, inp, noise_mode="bounded"):
    """Bounds on the p-th moments of ``J0``, ``J1``, ``H1`` and ``theta_n - theta*``."""
    _check_alpha(alpha)
    c, s = inp.consts, inp.cset
    a, dq = c.a, inp.d ** (1 / q)
    echo = inp.echo(n=n, p=p, q=q, alpha=alpha, noise_mode=noise_mode)
    names = ("J0", "J1", "H1", "theta_n")
    reps = {k: BoundReport(f"{regime}_{k}", inputs=dict(echo)) for k in names}
    if regime == "iid":
        for k in names:
            limit = c.alpha_q_inf(q) if k in ("H1", "theta_n") else c.alpha_inf
            reps[k].require("alpha <= threshold", alpha, limit)
        for k in ("H1", "theta_n"):
            reps[k].require("p <= q", p, q)
        contraction = (1 - alpha * a / 4) ** n
        if noise_mode == "bounded":
            eps = inp.eps_sup
            reps["J0"].fluctuation = s.D1 * math.sqrt(alpha * a * p) * eps
            reps["J1"].fluctuation = s.D3 * alpha * a * p**1.5 * eps
            reps["H1"].fluctuation = s.D4 * alpha * a * p**1.5 * dq * eps
            reps["theta_n"].fluctuation = dq * s.D2 * math.sqrt(alpha * a * p) * eps
        elif noise_mode == "subgaussian":
            sg = _sigma(inp)
            reps["J0"].fluctuation = s.D1_sg * math.sqrt(alpha * a * p * sg**2)
            reps["J1"].fluctuation = s.D3_sg * alpha * a * p**2 * sg
            reps["H1"].fluctuation = s.D4_sg * alpha * a * p**2 * dq * sg
            reps["theta_n"].fluctuation = s.D2 * dq * math.sqrt(alpha * a * p * sg**2)
        else:
            raise DomainError(f"unknown noise mode {noise_mode!r}")
        reps["theta_n"].transient = dq * math.sqrt(c.kappa_Q) * contraction * inp.init_dist
    elif regime == "markov":
        s.require_markov()
        t, eps = inp.t_mix, inp.eps_sup
        for k in names:
            limit = inp.mconsts.step_limit(q) if k in ("H1", "theta_n") else c.alpha_inf
            reps[k].require("alpha <= threshold", alpha, limit)
        for k in ("H1", "theta_n"):
            reps[k].require("p <= q/2", p, q / 2)
        lg = math.sqrt(_log_inv(alpha, a))
        at = alpha * a * t
        reps["J0"].fluctuation = s.DM1 * math.sqrt(at * p) * eps
        reps["J1"].fluctuation = eps * at * (s.DM_J1 * lg * p**2 + s.DM_J2 * math.sqrt(at * p))
        reps["H1"].fluctuation = dq * eps * at * (s.DM_H1 * lg * p**2 + s.DM_H2 * math.sqrt(at * p))
        reps["theta_n"].fluctuation = s.DM2 * dq * math.sqrt(at * p) * eps
        reps["theta_n"].transient = (math.sqrt(c.kappa_Q) * E**2 * dq
                                     * math.exp(-alpha * a * n / 12) * inp.init_dist)
    else:
        raise DomainError(f"unknown regime {regime!r}")
    for k in names:
        reps[k].inputs["term"] = k
    return [reps[k] for k in names]


def stability_bound(regime, n, p, q, alpha, d, consts, mconsts=None):
    """Bound on ``E^(1/p)||Phi_{1:n}||^p``; raises when ``alpha`` is above threshold."""
    if not 2 <= p <= q:
        raise DomainError("need 2 <= p <= q")
    _check_alpha(alpha)
    if n < 0:
        raise DomainError("n must be nonnegative")
    base = math.sqrt(consts.kappa_Q) * d ** (1 / q)
    if regime == "iid":
        limit = consts.alpha_q_inf(q)
        if alpha > limit * (1 + 1e-12):
            raise PreconditionError(f"step size {alpha:.6g} exceeds alpha_q_inf(q) = {limit:.6g}")
        return base * (1 - consts.a * alpha / 2) ** (n / 2)
    if regime == "markov":
        if mconsts is None:
            raise DomainError("Markov stability bound needs Markov constants")
        limit = mconsts.step_limit(q)
        if alpha > limit * (1 + 1e-12):
            raise PreconditionError(
                f"step size {alpha:.6g} exceeds alpha_q_inf_M(q)/t_mix = {limit:.6g}")
        return base * E**2 * math.exp(-consts.a * alpha * n / 12)
    raise DomainError(f"unknown regime {regime!r}")


def bias_bound_markov(n, alpha, inp):
    """Bound on ``||E[theta_bar_n] - theta*||`` under Markov noise."""
    _even(n)
    _check_alpha(alpha)
    if inp.mconsts is None:
        raise DomainError("Markov bias bound needs Markov stability constants")
    ld = 1 + math.log(inp.d)
    rep = BoundReport("bias_markov", inputs=inp.echo(n=n, alpha=alpha))
    rep.require("alpha <= alpha_q_inf_M(2(1+ln d))/t_mix", alpha, inp.mconsts.step_limit(2 * ld))
    init, noise = bias_coefficients(n, alpha, inp)
    rep.transient = init * inp.init_dist
    rep.bias = noise * inp.eps_sup
    return rep
