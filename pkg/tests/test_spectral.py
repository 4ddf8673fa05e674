import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lsa_lab import spectral
from lsa_lab.errors import DimensionError, DomainError, StabilityError


def random_hurwitz(rng, d):
    M = rng.standard_normal((d, d))
    shift = -np.linalg.eigvals(M).real.min() + rng.uniform(0.05, 1.0)
    return M + shift * np.eye(d)


def test_scalar_lyapunov_closed_form():
    sol = spectral.solve_lyapunov([[2.0]])
    assert sol.Q[0, 0] == pytest.approx(0.25, abs=1e-15)
    assert sol.norm == pytest.approx(0.25)
    assert sol.condition_number == pytest.approx(1.0)


def test_diagonal_lyapunov():
    sol = spectral.solve_lyapunov(np.diag([1.0, 4.0]))
    np.testing.assert_allclose(sol.Q, np.diag([0.5, 0.125]), atol=1e-14)


def test_non_hurwitz_rejected():
    with pytest.raises(StabilityError, match="Hurwitz"):
        spectral.solve_lyapunov([[1.0, 0.0], [0.0, -0.5]])
    assert not spectral.hurwitz_check([[0.0]])


def test_shape_and_finiteness_checks():
    with pytest.raises(DimensionError):
        spectral.hurwitz_check(np.ones((2, 3)))
    with pytest.raises(DomainError):
        spectral.hurwitz_check([[np.nan]])


def test_t1_constants():
    c = spectral.iid_stability_constants([[1.0]], 1.0)
    assert c.a == pytest.approx(1.0)
    assert c.alpha_inf == pytest.approx(0.5)
    assert c.kappa_Q == pytest.approx(1.0)
    assert c.b_Q == pytest.approx(2.0)
    assert c.c_A == pytest.approx(1 / 8)
    assert c.alpha_q_inf(2) == pytest.approx(1 / 16)


def test_zero_noise_gives_infinite_c_A():
    c = spectral.iid_stability_constants([[1.0]], 0.0)
    assert math.isinf(c.c_A)
    assert "c_A_infinite" in c.flags


def test_markov_constants_t1():
    c = spectral.iid_stability_constants([[1.0]], 1.0)
    m = spectral.markov_stability_constants(c, 4)
    assert m.block_h == 32
    assert m.alpha_inf_M == pytest.approx(1 / (48 * math.e), rel=1e-14)
    assert m.C_Gamma == pytest.approx(1568 / 36, rel=1e-14)
    assert m.step_limit(2) == pytest.approx(m.alpha_q_inf_M(2) / 4)


def test_weighted_norm_matches_direct_definition():
    rng = np.random.default_rng(3)
    A = random_hurwitz(rng, 4)
    sol = spectral.solve_lyapunov(A)
    M = rng.standard_normal((4, 4))
    assert spectral.weighted_operator_norm(M, sol) == pytest.approx(
        spectral.weighted_operator_norm(M, sol.Q), rel=1e-12)
    with pytest.raises(DomainError):
        spectral.weighted_operator_norm(M, -np.eye(4))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 8))
def test_lyapunov_residual_and_contraction(seed, d):
    rng = np.random.default_rng(seed)
    A = random_hurwitz(rng, d)
    sol = spectral.solve_lyapunov(A)
    assert sol.residual_norm <= 1e-10 * d
    assert np.all(sol.eigenvalues > 0)
    c = spectral.iid_stability_constants(A, float(np.linalg.norm(A, 2)))
    assert c.a * c.alpha_inf <= 0.5 + 1e-15
    for alpha in np.linspace(c.alpha_inf / 50, c.alpha_inf, 7):
        rate = spectral.weighted_operator_norm(np.eye(d) - alpha * A, sol) ** 2
        assert rate <= 1 - c.a * alpha + 1e-12


@settings(max_examples=30, deadline=None)
@given(arrays(float, (3, 3), elements=st.floats(-2, 2)), st.floats(0.1, 5.0))
def test_weighted_norm_is_similarity_invariant(M, scale):
    Q = np.diag([1.0, 2.0, 3.0])
    # scaling the weight does not change the induced operator norm
    assert spectral.weighted_operator_norm(M, scale * Q) == pytest.approx(
        spectral.weighted_operator_norm(M, Q), rel=1e-9, abs=1e-12)
