import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsa_lab import chains, problem, recursion
from lsa_lab.errors import DomainError

from conftest import enumerate_mean_average


def test_t1_single_path_by_hand(t1):
    path = chains.PathSample(states=np.array([0, 1, 1, 0]), seed=0, initial=np.array([0.5, 0.5]))
    alpha = 0.1
    theta, seq = np.array([0.0]), [np.array([0.0])]
    for z in path.states:
        theta = theta - alpha * (t1.A_table[z] @ theta - t1.b_table[z])
        seq.append(theta)
    run = recursion.run_lsa(t1, alpha, 4, [0.0], path, store=True)
    np.testing.assert_allclose(run.theta_n, seq[-1], rtol=1e-15)
    np.testing.assert_allclose(run.theta_bar, (seq[2] + seq[3]) / 2, rtol=1e-15)


def test_argument_checks(t1):
    path = chains.sample_path(t1.noise, 10, 0)
    with pytest.raises(DomainError):
        recursion.run_lsa(t1, 0.0, 4, [0.0], path)
    with pytest.raises(DomainError):
        recursion.run_lsa(t1, 0.1, 5, [0.0], path)
    with pytest.raises(DomainError):
        recursion.run_lsa(t1, 0.1, 12, [0.0], path)


def test_exact_mean_matches_enumeration(t2):
    for n in (2, 4, 8):
        oracle, mass = enumerate_mean_average(t2, 0.05, n, [0.3])
        exact = recursion.exact_mean_dynamics(t2, 0.05, n, [0.3]).theta_bar_mean
        assert mass == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_allclose(exact, oracle, atol=1e-13)


def test_iid_mean_dynamics_is_unbiased(t1):
    md = recursion.exact_mean_dynamics(t1, 0.05, 64, t1.theta_star)
    assert md.bias == pytest.approx(0.0, abs=1e-14)


def test_mean_noise_coupling_matches_simulation(t2):
    alpha = 0.1
    exact = recursion.mean_noise_coupling(t2, alpha, 6)
    # A is constant in T2, so Atil = 0 and the coupling vanishes
    np.testing.assert_allclose(exact, 0.0, atol=1e-15)


def test_product_norm_consistency(t1):
    path = chains.sample_path(t1.noise, 50, 1)
    single = recursion.product_norm(t1, 0.1, path, 1, 50)
    batch = recursion.product_batch(t1, 0.1, path.states[None], [50])[50][0]
    assert single == pytest.approx(batch, rel=1e-13)
    assert single == pytest.approx(0.9**50, rel=1e-12)
    assert recursion.product_norm(t1, 0.1, path, 5, 4) == 1.0


def test_batching_does_not_change_results():
    inst = problem.validate_and_derive(problem.generate_instance("random_hurwitz", 3, 4, 2))
    rng = np.random.default_rng(0)
    states = rng.integers(0, 4, size=(7, 40))
    whole = recursion.simulate_batch(inst, 0.05, states, np.zeros(3), [20, 40], terms=recursion.TERMS)
    for r in range(7):
        one = recursion.simulate_batch(inst, 0.05, states[r:r + 1], np.zeros(3), [20, 40],
                                       terms=recursion.TERMS)
        for c in (20, 40):
            for q in ("theta", "theta_bar", "pr_error") + recursion.TERMS:
                assert np.array_equal(one[c][q][0], whole[c][q][r])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 4), S=st.integers(2, 6),
       noise=st.sampled_from(["iid", "markov"]), n=st.sampled_from([2, 10, 64, 200]))
def test_decomposition_identities_hold(seed, d, S, noise, n):
    inst = problem.validate_and_derive(
        problem.generate_instance("random_hurwitz", d, S, seed, {"noise": noise}))
    alpha = 0.5 * min(0.1, 1 / (4 * inst.b_A))
    path = chains.sample_path(inst.noise, n, seed, 1)
    theta0 = inst.theta_star + 1.0
    tr = recursion.run_decomposition(inst, alpha, n, theta0, path)
    assert tr.lsa_residual() <= 1e-10
    assert tr.split_residual() <= 1e-10
    assert recursion.check_pr_identity(inst, alpha, n, theta0, path) <= 1e-9


def test_per_step_terms(t2):
    path = chains.sample_path(t2.noise, 16, 3)
    tr = recursion.run_decomposition(t2, 0.1, 16, [0.0], path, per_step=True)
    assert list(tr.per_step_terms["n"]) == list(range(2, 17, 2))
    np.testing.assert_allclose(tr.per_step_terms["J0"][-1], tr.J0)


def test_batched_residuals_match_single_path_checks():
    inst = problem.validate_and_derive(problem.generate_instance("random_hurwitz", 3, 5, 4, {"noise": "markov"}))
    theta0 = inst.theta_star + 0.5
    paths = [chains.sample_path(inst.noise, 200, 8, r) for r in range(4)]
    split, averaged = recursion.identity_residuals(inst, 0.02, 200, theta0,
                                                   np.array([p.states for p in paths]))
    for r, path in enumerate(paths):
        tr = recursion.run_decomposition(inst, 0.02, 200, theta0, path)
        assert split[r] == pytest.approx(max(tr.lsa_residual(), tr.split_residual()), abs=1e-15)
        assert averaged[r] == pytest.approx(recursion.check_pr_identity(inst, 0.02, 200, theta0, path),
                                            abs=1e-13)


def test_t1_fixed_path_matches_naive_loop(t1):
    path = chains.sample_path(t1.noise, 100, 42)
    theta = np.zeros(1)
    for z in path.states:
        theta = theta - 0.05 * (t1.A_table[z] @ theta - t1.b_table[z])
    run = recursion.run_lsa(t1, 0.05, 100, [0.0], path)
    np.testing.assert_allclose(run.theta_n, theta, atol=1e-12)


def test_t2_long_path_identities(t2):
    path = chains.sample_path(t2.noise, 2000, 7)
    tr = recursion.run_decomposition(t2, 0.01, 2000, [0.0], path)
    assert max(tr.lsa_residual(), tr.split_residual()) <= 1e-9
    assert recursion.check_pr_identity(t2, 0.01, 2000, [0.0], path) <= 1e-9


def test_product_matches_naive_multiplication():
    inst = problem.validate_and_derive(problem.generate_instance("random_hurwitz", 3, 4, 11))
    path = chains.sample_path(inst.noise, 100, 3)
    Phi = np.eye(3)
    for z in path.states:
        Phi = (np.eye(3) - 0.0625 * inst.A_table[z]) @ Phi
    assert recursion.product_norm(inst, 0.0625, path, 1, 100) == pytest.approx(
        np.linalg.norm(Phi, 2), abs=1e-12)


def test_t2_bias_enumeration_and_nonzero(t2):
    oracle, _ = enumerate_mean_average(t2, 0.05, 8, t2.theta_star)
    exact = recursion.exact_mean_dynamics(t2, 0.05, 8, t2.theta_star)
    assert exact.bias == pytest.approx(float(np.linalg.norm(oracle - t2.theta_star)), abs=1e-12)
    assert recursion.exact_mean_dynamics(t2, 0.05, 512, t2.theta_star).bias > 0
