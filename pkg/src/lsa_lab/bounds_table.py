"""Coefficient table for the bound formulas, written as sums of monomials.

Each formula is a list of ``(scalar, {symbol: power})`` pairs.  Symbols are
either constants from :class:`~lsa_lab.bounds.ConstantSet`, instance
quantities (``a``, ``kappa``, ``b_A``, ``t``), the arguments ``alpha``,
``n``, ``p`` or the derived factors ``e1p`` (``e^(1/p)``), ``lninv``
(``ln(1/(alpha a))``), ``log2p`` (``log2(2p)``) and ``lnen`` (``ln(e n)``).
This is an independent encoding of the closed forms in :mod:`lsa_lab.bounds`
and exists so the two can be cross-checked.
"""

import math

E = math.e
R2 = math.sqrt(2)

TABLE = {
    "mse_fluctuation": [
        (64 * E, {"D2": 2, "alpha": -1, "n": -1}),
        (16 * E, {"alpha": 1, "b_A": 2, "D2": 2}),
    ],
    "mse_transient": [
        (32 * E, {"kappa": 1, "alpha": -2, "n": -1}),
        (128 * E / 7, {"kappa": 1, "b_A": 2, "alpha": -1, "a": -1, "n": -1}),
    ],
    "pr_fluctuation": [
        (4, {"e1p": 1, "D2": 1, "a": 0.5, "p": 0.5, "alpha": -0.5, "n": -0.5}),
        (1, {"e1p": 1, "b_A": 1, "D3": 1, "alpha": 1, "a": 1, "p": 2.5}),
        (1, {"e1p": 1, "b_A": 1, "D4": 1, "alpha": 1, "a": 1, "p": 2.5}),
        (2, {"C_Rm2": 1, "p": 1, "n": -0.5}),
        (1, {"b_A": 1, "D1": 1, "alpha": 0.5, "a": 0.5, "p": 1.5}),
    ],
    "pr_transient": [
        (4, {"e1p": 1, "kappa": 0.5, "alpha": -1, "n": -0.5}),
        (1 / R2, {"e1p": 1, "kappa": 0.5, "n": 0.5, "b_A": 1}),
    ],
    "pr_fluctuation_sg": [
        (4, {"e1p": 1, "D2": 1, "p": 0.5, "alpha": -0.5, "n": -0.5}),
        (1, {"e1p": 1, "b_A": 1, "D3_sg": 1, "alpha": 1, "a": 1, "p": 3}),
        (1, {"e1p": 1, "b_A": 1, "D4_sg": 1, "alpha": 1, "a": 1, "p": 3}),
        (3 * R2, {"C_Rm2": 1, "lnen": 0.5, "p": 1.5, "n": -0.5}),
        (1, {"b_A": 1, "D1_sg": 1, "alpha": 0.5, "p": 1.5}),
    ],
    "pr_transient_sg": [
        (2 * R2, {"e1p": 1, "kappa": 0.5, "alpha": -1, "n": -0.5}),
        (1 / R2, {"e1p": 1, "kappa": 0.5, "n": 0.5, "b_A": 1}),
    ],
    "markov_fluctuation": [
        (8, {"DM2": 1, "e1p": 1, "a": 0.5, "p": 0.5, "t": 0.5, "alpha": -0.5, "n": -0.5}),
        (R2, {"C_Ros1_M": 1, "t": 0.75, "p": 1, "log2p": 1, "n": -0.25}),
        (2, {"C_Ros2_M": 1, "t": 1, "p": 1, "log2p": 1, "n": -0.5}),
        # (DM_J1 + DM_H1) * alpha a t sqrt(lninv) p^2 * (1/(alpha sqrt n) + sqrt(n) b_A)
        (8, {"e1p": 1, "DM_J1": 1, "a": 1, "t": 1, "lninv": 0.5, "p": 2, "n": -0.5}),
        (8, {"e1p": 1, "DM_H1": 1, "a": 1, "t": 1, "lninv": 0.5, "p": 2, "n": -0.5}),
        (8, {"e1p": 1, "DM_J1": 1, "alpha": 1, "a": 1, "t": 1, "lninv": 0.5, "p": 2, "n": 0.5, "b_A": 1}),
        (8, {"e1p": 1, "DM_H1": 1, "alpha": 1, "a": 1, "t": 1, "lninv": 0.5, "p": 2, "n": 0.5, "b_A": 1}),
        # (DM_J2 + DM_H2) (alpha a t)^{3/2} p^{1/2} * (same tail)
        (8, {"e1p": 1, "DM_J2": 1, "alpha": 0.5, "a": 1.5, "t": 1.5, "p": 0.5, "n": -0.5}),
        (8, {"e1p": 1, "DM_H2": 1, "alpha": 0.5, "a": 1.5, "t": 1.5, "p": 0.5, "n": -0.5}),
        (8, {"e1p": 1, "DM_J2": 1, "alpha": 1.5, "a": 1.5, "t": 1.5, "p": 0.5, "n": 0.5, "b_A": 1}),
        (8, {"e1p": 1, "DM_H2": 1, "alpha": 1.5, "a": 1.5, "t": 1.5, "p": 0.5, "n": 0.5, "b_A": 1}),
    ],
    "markov_transient": [
        (4 * E**2, {"e1p": 1, "kappa": 0.5, "alpha": -1, "n": -0.5}),
        (E**2 / R2, {"e1p": 1, "kappa": 0.5, "n": 0.5, "b_A": 1}),
    ],
    "bias_noise": [
        (1, {"DM5": 1, "alpha": 1, "a": 1, "t": 1, "lninv": 0.5}),
        (1, {"DM6": 1, "alpha": 1.5, "a": 1.5, "t": 1.5}),
    ],
}


def symbols(n, p, alpha, inp):
    """Numeric value of every symbol the table may reference."""
    c = inp.consts
    env = {k: v for k, v in vars(inp.cset).items() if v is not None}
    env.update(alpha=alpha, n=n, a=c.a, kappa=c.kappa_Q, b_A=c.b_A)
    if p is not None:
        env.update(p=p, e1p=math.exp(1 / p), log2p=math.log2(2 * p))
    env["lnen"] = math.log(E * n)
    env["lninv"] = max(0.0, -math.log(alpha * c.a))
    if inp.t_mix is not None:
        env["t"] = inp.t_mix
    return env


def evaluate(name, n, p, alpha, inp):
    env = symbols(n, p, alpha, inp)
    total = 0.0
    for scalar, powers in TABLE[name]:
        term = scalar
        for sym, power in powers.items():
            term *= env[sym] ** power
        total += term
    return total
