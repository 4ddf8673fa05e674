"""Problem instances on a finite observation space.

An instance is a table of matrices ``A(z)`` and vectors ``b(z)`` indexed by
``z in {0, ..., S-1}`` together with the law of the observation sequence.
"""

from dataclasses import dataclass, field
import json
import math
from pathlib import Path

import numpy as np

from . import chains
from .errors import (
    DimensionError, DomainError, GenerationError, MixingCertificateError, ParseError,
    StabilityError, StationarityError,
)
from .rng import stream
from .spectral import hurwitz_check

IID = "iid"
MARKOV = "markov"
SUBGAUSSIAN = "subgaussian_iid"
_VARIANT_ALIASES = {
    "iid": IID, "markov": MARKOV, "subgaussian_iid": SUBGAUSSIAN,
    "subgaussianiid": SUBGAUSSIAN, "subgaussian": SUBGAUSSIAN,
}


@dataclass(frozen=True)
class NoiseProcess:
    """Law of the observation sequence.

    Parameters
    ----------
    variant : {"iid", "markov", "subgaussian_iid"}
    weights : array, optional
        Sampling law for the i.i.d. variants.
    P, xi, t_mix : optional
        Transition matrix, initial law and declared mixing time for ``markov``.
    additive_cov, sigma_eps : optional
        Covariance of a Gaussian perturbation added to ``b`` and the declared
        sub-Gaussian proxy, for ``subgaussian_iid``.
    """

    variant: str
    weights: np.ndarray = None
    P: np.ndarray = None
    xi: np.ndarray = None
    t_mix: int = None
    additive_cov: np.ndarray = None
    sigma_eps: float = None

    def __post_init__(self):
        v = _VARIANT_ALIASES.get(str(self.variant).lower().replace("-", "_"))
        if v is None:
            raise DomainError(f"unknown noise variant {self.variant!r}")
        object.__setattr__(self, "variant", v)
        for name in ("weights", "P", "xi", "additive_cov"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.asarray(val, dtype=float))
        if v == MARKOV:
            if self.P is None:
                raise DomainError("markov noise requires a transition matrix P")
            P = chains._stochastic(self.P)
            if self.xi is None:
                object.__setattr__(self, "xi", chains.stationary_distribution(P))
            if self.t_mix is None:
                object.__setattr__(self, "t_mix", chains.minimal_mixing_time(P))
            object.__setattr__(self, "t_mix", int(self.t_mix))
            _check_law(self.xi, P.shape[0], "xi")
        else:
            if self.weights is None:
                raise DomainError(f"{v} noise requires sampling weights")
            _check_law(self.weights, len(self.weights), "weights")
        if v == SUBGAUSSIAN and self.additive_cov is not None:
            C = self.additive_cov
            if C.ndim != 2 or C.shape[0] != C.shape[1] or not np.allclose(C, C.T):
                raise DomainError("additive covariance must be a symmetric matrix")
            if np.linalg.eigvalsh(C)[0] < -1e-12:
                raise DomainError("additive covariance must be positive semidefinite")
        if v != SUBGAUSSIAN and self.additive_cov is not None:
            raise DomainError("additive covariance is only meaningful for subgaussian_iid")

    @property
    def is_markov(self):
        return self.variant == MARKOV

    @property
    def regime(self):
        return MARKOV if self.is_markov else IID

    @property
    def S(self):
        return len(self.P) if self.is_markov else len(self.weights)

    @property
    def additive_factor(self):
        """Symmetric square root of the additive covariance."""
        w, V = np.linalg.eigh(self.additive_cov)
        return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T

    def stationary(self):
        return chains.stationary_distribution(self.P) if self.is_markov else self.weights

    def transition(self):
        """Kernel used by the exact mean dynamics (rows all equal for i.i.d.)."""
        if self.is_markov:
            return self.P
        return np.tile(self.weights, (len(self.weights), 1))


def _check_law(w, S, name):
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or len(w) != S:
        raise DimensionError(f"{name} must have length {S}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise DomainError(f"{name} must be nonnegative and sum to 1")


@dataclass(frozen=True)
class ObservationModel:
    """Tables ``A(z)`` (shape ``(S, d, d)``) and ``b(z)`` (shape ``(S, d)``)."""

    A_table: np.ndarray
    b_table: np.ndarray
    noise: NoiseProcess
    declared_Abar: np.ndarray = None
    declared_bbar: np.ndarray = None

    def __post_init__(self):
        A = np.asarray(self.A_table, dtype=float)
        b = np.asarray(self.b_table, dtype=float)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise DimensionError(f"A table must have shape (S, d, d), got {A.shape}")
        if b.shape != A.shape[:2]:
            raise DimensionError(f"b table must have shape {A.shape[:2]}, got {b.shape}")
        if A.shape[0] != self.noise.S:
            raise DimensionError("table size and noise state count differ")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise DomainError("tables must have finite entries")
        object.__setattr__(self, "A_table", A)
        object.__setattr__(self, "b_table", b)

    @property
    def d(self):
        return self.A_table.shape[1]

    @property
    def S(self):
        return self.A_table.shape[0]

    def scaled(self, M):
        """Copy with every ``A(z)`` and ``b(z)`` multiplied by ``M``."""
        return ObservationModel(
            self.A_table * M, self.b_table * M, self.noise,
            None if self.declared_Abar is None else self.declared_Abar * M,
            None if self.declared_bbar is None else self.declared_bbar * M,
        )


@dataclass(frozen=True)
class DerivedInstance:
    """Everything the recursion and the bounds need, computed once."""

    model: ObservationModel
    pi: np.ndarray
    Abar: np.ndarray
    bbar: np.ndarray
    theta_star: np.ndarray
    eps_table: np.ndarray
    eps_sup: float
    Sigma_eps: np.ndarray
    b_A: float
    sigma_eps: float = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def noise(self):
        return self.model.noise

    @property
    def d(self):
        return self.model.d

    @property
    def A_table(self):
        return self.model.A_table

    @property
    def b_table(self):
        return self.model.b_table


def validate_and_derive(model):
    """Check every modelling assumption and compute the derived quantities.

    Raises
    ------
    StabilityError
        ``Abar`` fails the Hurwitz check.
    StationarityError
        Declared ``Abar``/``bbar`` differ from the stationary averages, or the
        derived noise does not average to zero.
    MixingCertificateError
        The declared Markov mixing time is not certified.
    """
    noise = model.noise
    pi = noise.stationary()
    diagnostics = {}
    if noise.is_markov:
        bad_k = chains.check_mixing_certificate(noise.P, noise.t_mix)
        t_min = chains.minimal_mixing_time(noise.P)
        diagnostics["t_mix_min"] = t_min
        if bad_k is not None:
            raise MixingCertificateError(
                f"t_mix certificate failed: declared t_mix={noise.t_mix} but "
                f"delta(P^{bad_k}) exceeds (1/4)^floor({bad_k}/{noise.t_mix}); minimal t_mix is {t_min}"
            )
    Abar = np.tensordot(pi, model.A_table, axes=1)
    bbar = pi @ model.b_table
    for declared, derived, name in ((model.declared_Abar, Abar, "Abar"),
                                    (model.declared_bbar, bbar, "bbar")):
        if declared is not None and not np.allclose(declared, derived, rtol=0, atol=1e-10):
            raise StationarityError(
                f"stationarity mismatch: declared {name} differs from the pi-average of the tables"
            )
    if not hurwitz_check(Abar):
        raise StabilityError("Hurwitz check failed: Abar has an eigenvalue with non-positive real part")
    theta_star = np.linalg.solve(Abar, bbar)
    if np.linalg.norm(Abar @ theta_star - bbar) > 1e-10 * max(1.0, np.linalg.norm(bbar)):
        raise StationarityError("linear system residual too large")
    A_tilde = model.A_table - Abar
    eps = A_tilde @ theta_star - (model.b_table - bbar)
    mean_eps = pi @ eps
    if np.linalg.norm(mean_eps) > 1e-10 * max(1.0, np.abs(eps).max(initial=0.0)):
        raise StationarityError("noise does not average to zero under the stationary law")
    Sigma = (pi[:, None] * eps).T @ eps
    if noise.additive_cov is not None:
        Sigma = Sigma + noise.additive_cov
    Sigma = 0.5 * (Sigma + Sigma.T)
    eps_sup = float(np.linalg.norm(eps, axis=1).max())
    b_A = float(max(np.linalg.norm(model.A_table, 2, axis=(1, 2)).max(),
                    np.linalg.norm(A_tilde, 2, axis=(1, 2)).max()))
    sigma_eps = None
    if noise.variant == SUBGAUSSIAN:
        lam = float(np.linalg.eigvalsh(noise.additive_cov)[-1]) if noise.additive_cov is not None else 0.0
        floor = math.sqrt(lam + eps_sup**2)
        sigma_eps = floor if noise.sigma_eps is None else float(noise.sigma_eps)
        if sigma_eps**2 < floor**2 * (1 - 1e-12):
            raise DomainError(
                f"declared sigma_eps={sigma_eps} is below the required proxy {floor}"
            )
    return DerivedInstance(
        model=model, pi=np.asarray(pi, dtype=float), Abar=Abar, bbar=bbar,
        theta_star=theta_star, eps_table=eps, eps_sup=eps_sup, Sigma_eps=Sigma,
        b_A=b_A, sigma_eps=sigma_eps, diagnostics=diagnostics,
    )


# ---------------------------------------------------------------- generators

_GEN_DEFAULTS = {
    "random_hurwitz": {"shift": 0.1, "spread": 0.5, "b_scale": 1.0, "noise": "iid", "max_retries": 50},
    "tdzero": {"gamma": 0.9, "reward_scale": 1.0, "noise": "markov", "max_retries": 50},
}


def _random_law(rng, S):
    return rng.dirichlet(np.ones(S))


def _random_kernel(rng, S):
    P = rng.random((S, S)) + 0.05
    return P / P.sum(axis=1, keepdims=True)


def generate_instance(kind, d, S, seed, params=None):
    """Draw a random instance that passes :func:`validate_and_derive`.

    ``kind="random_hurwitz"`` uses ``Abar = G G^T + shift * I`` with state
    perturbations of size ``spread`` that average to zero.  ``kind="tdzero"``
    builds an ``S``-state Markov reward process with ``d`` random features
    and expected-next-feature TD(0) tables.
    """
    if kind not in _GEN_DEFAULTS:
        raise DomainError(f"unknown generator {kind!r}")
    if d < 1 or S < 2:
        raise DomainError("need d >= 1 and S >= 2")
    opts = dict(_GEN_DEFAULTS[kind])
    unknown = set(params or {}) - set(opts)
    if unknown:
        raise DomainError(f"unknown generator parameters {sorted(unknown)}")
    opts.update(params or {})
    rng = stream(seed, 0)
    for _ in range(int(opts["max_retries"])):
        model = (_gen_hurwitz if kind == "random_hurwitz" else _gen_td)(rng, d, S, opts)
        if model is not None:
            return model
    raise GenerationError(f"{kind}: no Hurwitz instance after {opts['max_retries']} attempts")


def _noise_for(rng, S, variant):
    variant = _VARIANT_ALIASES[str(variant).lower()]
    if variant == MARKOV:
        return NoiseProcess(MARKOV, P=_random_kernel(rng, S))
    return NoiseProcess(IID, weights=_random_law(rng, S))


def _gen_hurwitz(rng, d, S, opts):
    noise = _noise_for(rng, S, opts["noise"])
    pi = noise.stationary()
    G = rng.standard_normal((d, d)) / math.sqrt(d)
    Abar = G @ G.T + opts["shift"] * np.eye(d)
    if not hurwitz_check(Abar):
        return None
    E = rng.standard_normal((S, d, d))
    E -= np.tensordot(pi, E, axes=1)
    A = Abar + opts["spread"] * E
    raw_b = opts["b_scale"] * rng.standard_normal((S, d))
    target = opts["b_scale"] * rng.standard_normal(d)
    b = raw_b - pi @ raw_b + target
    return ObservationModel(A, b, noise)


def _gen_td(rng, d, S, opts):
    P = _random_kernel(rng, S)
    Phi = rng.standard_normal((S, d))
    if np.linalg.matrix_rank(Phi) < d:
        return None
    gamma = float(opts["gamma"])
    rewards = opts["reward_scale"] * rng.standard_normal(S)
    next_feat = P @ Phi
    A = np.einsum("si,sj->sij", Phi, Phi - gamma * next_feat)
    b = rewards[:, None] * Phi
    variant = _VARIANT_ALIASES[str(opts["noise"]).lower()]
    if variant == MARKOV:
        noise = NoiseProcess(MARKOV, P=P)
    else:
        noise = NoiseProcess(IID, weights=chains.stationary_distribution(P))
    Abar = np.tensordot(noise.stationary(), A, axes=1)
    if not hurwitz_check(Abar):
        return None
    return ObservationModel(A, b, noise)


# ---------------------------------------------------------------- file format

def model_to_dict(model):
    n = model.noise
    noise = {"variant": n.variant}
    if n.is_markov:
        noise.update(P=n.P.tolist(), xi=n.xi.tolist(), t_mix=n.t_mix)
    else:
        noise["weights"] = n.weights.tolist()
    if n.additive_cov is not None:
        noise["sigma"] = n.additive_cov.tolist()
    if n.sigma_eps is not None:
        noise["sigma_eps"] = n.sigma_eps
    return {"d": model.d, "S": model.S, "A": model.A_table.tolist(),
            "b": model.b_table.tolist(), "noise": noise}


_TOP_KEYS = {"d", "S", "A", "b", "noise", "Abar", "bbar"}
_NOISE_KEYS = {"variant", "weights", "P", "xi", "t_mix", "sigma", "sigma_eps"}


def model_from_dict(data):
    """Build an :class:`ObservationModel` from the JSON instance layout."""
    if not isinstance(data, dict):
        raise ParseError("instance must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ParseError(f"unknown instance keys {sorted(unknown)}")
    try:
        d, S = int(data["d"]), int(data["S"])
        A = np.asarray(data["A"], dtype=float)
        b = np.asarray(data["b"], dtype=float)
        nz = data["noise"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed instance: {exc}") from exc
    if not isinstance(nz, dict):
        raise ParseError("noise must be a JSON object")
    unknown = set(nz) - _NOISE_KEYS
    if unknown:
        raise ParseError(f"unknown noise keys {sorted(unknown)}")
    if A.shape != (S, d, d) or b.shape != (S, d):
        raise ParseError(f"table shapes {A.shape}, {b.shape} do not match d={d}, S={S}")
    try:
        noise = NoiseProcess(
            nz.get("variant", IID), weights=nz.get("weights"), P=nz.get("P"),
            xi=nz.get("xi"), t_mix=nz.get("t_mix"), additive_cov=nz.get("sigma"),
            sigma_eps=nz.get("sigma_eps"),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed noise block: {exc}") from exc
    declared = {k: np.asarray(data[k], dtype=float) for k in ("Abar", "bbar") if k in data}
    return ObservationModel(A, b, noise, declared.get("Abar"), declared.get("bbar"))


def load_model(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read instance file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return model_from_dict(data)


def save_model(model, path):
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2), encoding="utf-8")
