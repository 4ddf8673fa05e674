import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lsa_lab import bounds, estimators, problem
from lsa_lab.errors import BudgetError, ConfigurationError, DomainError, PreconditionError


def test_pth_moment_simple():
    v = np.array([[3.0, 4.0], [0.0, 0.0]])
    assert estimators.pth_moment(v, 2) == pytest.approx(math.sqrt(12.5))
    assert estimators.pth_moment(np.zeros((3, 2)), 4) == 0.0
    with pytest.raises(DomainError):
        estimators.pth_moment(v, 0.5)
    with pytest.raises(DomainError):
        estimators.pth_moment(np.empty((0, 2)), 2)


def test_large_p_does_not_overflow():
    v = np.full((4, 1), 1e200)
    assert estimators.pth_moment(v, 50) == pytest.approx(1e200)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (12, 2), elements=st.floats(-1e3, 1e3)), st.floats(1, 8), st.floats(0, 4))
def test_power_means_are_monotone(x, p, dp):
    lo = estimators.pth_moment(x, p)
    hi = estimators.pth_moment(x, p + dp)
    assert lo <= hi * (1 + 1e-12) + 1e-300


def test_ensemble_is_thread_independent(t1):
    a = estimators.run_ensemble(t1, 0.01, [100, 300], [2, 4], 600, 17, threads=1)
    b = estimators.run_ensemble(t1, 0.01, [100, 300], [2, 4], 600, 17, threads=8)
    assert a.rows == b.rows


def test_ensemble_prefix_property(t2):
    # trajectory i depends only on (seed, i): the first 256 norms agree across R
    small = estimators.simulate_norms(t2, 0.01, [50], 256, 4)
    big = estimators.simulate_norms(t2, 0.01, [50], 700, 4)
    np.testing.assert_array_equal(big[("pr_error", 50)][:256], small[("pr_error", 50)])


def test_ci_brackets_estimate(t1):
    tab = estimators.run_ensemble(t1, 0.02, [200], [2, 3], 400, 1)
    for row in tab.rows:
        assert row.ci_low <= row.estimate <= row.ci_high
        assert row.R == 400 and row.master_seed == 1


def test_small_sample_mse_close_to_theory(t1):
    # i.i.d. T1: theta_k - 1 is an AR(1) driven by eps, so E||theta_bar - theta*||^2 is explicit
    alpha, n, R = 0.05, 400, 4000
    tab = estimators.run_ensemble(t1, alpha, [n], [2], R, 2)
    m = n // 2
    r = 1 - alpha
    var = sum((alpha**2) * 0.25 * (sum(r ** (k - j) for k in range(max(j, m), n)) / m) ** 2
              for j in range(1, n))
    assert tab.get("pr_error", n, 2).estimate ** 2 == pytest.approx(var, rel=0.1)


def test_budget_check(t1):
    with pytest.raises(BudgetError):
        estimators.run_ensemble(t1, 0.01, [1000], [2], 1000, 0, budget=1e5)


def test_stability_precondition(t1):
    with pytest.raises(PreconditionError, match="alpha_q_inf"):
        estimators.empirical_stability(t1, 0.5, 2, 2, [10], 10, 0)
    tab = estimators.empirical_stability(t1, 1 / 16, [2], 2, [0, 10], 10, 0)
    assert tab.get("product_norm", 0, 2).estimate == 1.0
    assert tab.get("product_norm", 10, 2).estimate == pytest.approx((15 / 16) ** 10)


def test_batch_means_configuration(t1, t2):
    with pytest.raises(ConfigurationError):
        estimators.batch_means_covariance(t1)
    with pytest.raises(ConfigurationError):
        estimators.batch_means_covariance(t2, path_length=10_000, batch_count=100)
    with pytest.raises(ConfigurationError):
        estimators.batch_means_covariance(t2, path_length=10_000, batch_count=1)


def test_subgaussian_additive_noise_runs():
    noise = problem.NoiseProcess("subgaussian_iid", weights=[0.5, 0.5], additive_cov=[[0.04]])
    inst = problem.validate_and_derive(problem.ObservationModel(np.ones((2, 1, 1)), [[1.5], [0.5]], noise))
    a = estimators.run_ensemble(inst, 0.05, [100], [2], 300, 3, threads=1)
    b = estimators.run_ensemble(inst, 0.05, [100], [2], 300, 3, threads=4)
    assert a.rows == b.rows
    t1 = problem.validate_and_derive(problem.ObservationModel(
        np.ones((2, 1, 1)), [[1.5], [0.5]], problem.NoiseProcess("iid", weights=[0.5, 0.5])))
    c = estimators.run_ensemble(t1, 0.05, [100], [2], 300, 3)
    # the Gaussian part adds variance
    assert a.rows[0].estimate > c.rows[0].estimate


def test_t1_mse_below_bound_at_small_horizon(t1):
    tab = estimators.run_ensemble(t1, 0.00625, [100], [2], 10_000, 0)
    row = tab.get("pr_error", 100, 2)
    rep = bounds.mse_bound_iid(100, 0.00625, bounds.bound_inputs(t1))
    assert 50 * row.ci_high**2 <= rep.total


def test_t1_stability_example(t1):
    tab = estimators.empirical_stability(t1, 0.0625, 2, 2, [100], 2000, 0)
    bound = bounds.stability_bound("iid", 100, 2, 2, 0.0625, 1, bounds.bound_inputs(t1).consts)
    assert bound == pytest.approx(0.96875**50, rel=1e-12)
    assert tab.get("product_norm", 100, 2).estimate <= bound
