import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsa_lab import chains, problem
from lsa_lab.errors import DimensionError, DomainError, ErgodicityError

P2 = np.array([[0.9, 0.1], [0.2, 0.8]])


def random_kernel(rng, S):
    P = rng.random((S, S)) + 0.02
    return P / P.sum(axis=1, keepdims=True)


def test_two_state_chain_exact():
    pi = chains.stationary_distribution(P2)
    np.testing.assert_allclose(pi, [2 / 3, 1 / 3], atol=1e-12)
    assert chains.dobrushin_coefficient(P2) == pytest.approx(0.7, abs=1e-12)
    assert chains.dobrushin_coefficient(P2, 3) == pytest.approx(0.343, abs=1e-12)
    assert chains.minimal_mixing_time(P2) == 4
    assert chains.check_mixing_certificate(P2, 4) is None
    assert chains.check_mixing_certificate(P2, 3) is not None


def test_reducible_chain_rejected():
    with pytest.raises(ErgodicityError):
        chains.stationary_distribution(np.eye(2))


def test_kernel_validation():
    with pytest.raises(DomainError):
        chains.stationary_distribution([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(DimensionError):
        chains.stationary_distribution(np.ones((2, 3)) / 3)
    with pytest.raises(DomainError):
        chains.dobrushin_coefficient(P2, 0)


def test_t2_covariance_three_ways(t2):
    gamma0 = float(t2.pi @ t2.eps_table[:, 0] ** 2)
    assert gamma0 == pytest.approx(2 / 9, abs=1e-14)
    closed = gamma0 * (1 + 2 * 0.7 / 0.3)
    fund = chains.asymptotic_noise_covariance(t2)[0, 0]
    series = chains.truncated_noise_covariance(t2)[0, 0]
    assert fund == pytest.approx(34 / 27, abs=1e-10)
    assert series == pytest.approx(fund, abs=1e-10)
    assert closed == pytest.approx(fund, abs=1e-10)


def test_literal_reading_adds_two_lag_zero_terms(t2):
    plain = chains.asymptotic_noise_covariance(t2)
    literal = chains.asymptotic_noise_covariance(t2, literal=True)
    np.testing.assert_allclose(literal - plain, 2 * t2.Sigma_eps, atol=1e-14)


def test_sampler_frequencies():
    noise = problem.NoiseProcess("markov", P=P2)
    path = chains.sample_path(noise, 200_000, seed=5)
    assert path.states.mean() == pytest.approx(1 / 3, abs=0.01)
    flips = np.mean(path.states[1:] != path.states[:-1])
    assert flips == pytest.approx(2 * (2 / 3) * 0.1, abs=0.01)


def test_small_and_large_batch_sampling_agree():
    noise = problem.NoiseProcess("markov", P=random_kernel(np.random.default_rng(0), 5))
    u = np.random.default_rng(1).random((9, 300))
    full = chains.states_from_uniforms(noise, u)
    for r in range(9):
        np.testing.assert_array_equal(chains.states_from_uniforms(noise, u[r:r + 1])[0], full[r])


def test_sample_path_reproducible():
    noise = problem.NoiseProcess("iid", weights=[0.2, 0.3, 0.5])
    a = chains.sample_path(noise, 100, seed=9, index=2).states
    b = chains.sample_path(noise, 100, seed=9, index=2).states
    c = chains.sample_path(noise, 100, seed=9, index=3).states
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), S=st.integers(2, 8), d=st.integers(1, 3))
def test_fundamental_matrix_matches_truncated_series(seed, S, d):
    rng = np.random.default_rng(seed)
    P = random_kernel(rng, S)
    noise = problem.NoiseProcess("markov", P=P)
    pi = noise.stationary()
    A = np.broadcast_to(np.eye(d), (S, d, d)).copy()
    b = rng.standard_normal((S, d))
    inst = problem.validate_and_derive(problem.ObservationModel(A, b, noise))
    fund = chains.asymptotic_noise_covariance(inst)
    series = chains.truncated_noise_covariance(inst)
    assert np.linalg.norm(fund - series) <= 1e-9
    np.testing.assert_allclose(pi @ P, pi, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), S=st.integers(2, 6))
def test_dobrushin_submultiplicative(seed, S):
    P = random_kernel(np.random.default_rng(seed), S)
    d1 = chains.dobrushin_coefficient(P, 1)
    d2 = chains.dobrushin_coefficient(P, 2)
    d3 = chains.dobrushin_coefficient(P, 3)
    assert 0 <= d1 <= 1
    assert d2 <= d1 * d1 + 1e-12
    assert d3 <= d1 * d2 + 1e-12
    t = chains.minimal_mixing_time(P)
    assert chains.check_mixing_certificate(P, t) is None


def test_t2_occupation_long_path():
    noise = problem.NoiseProcess("markov", P=P2, xi=[1.0, 0.0], t_mix=4)
    path = chains.sample_path(noise, 10**6, seed=0)
    assert np.mean(path.states == 0) == pytest.approx(2 / 3, abs=0.01)
