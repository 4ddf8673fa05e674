import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsa_lab import problem
from lsa_lab.errors import (DomainError, MixingCertificateError, ParseError, StabilityError,
                            StationarityError)

from conftest import t1_model, t2_model


def test_t1_derivation(t1):
    np.testing.assert_allclose(t1.theta_star, [1.0])
    np.testing.assert_allclose(t1.eps_table.ravel(), [-0.5, 0.5])
    assert t1.Sigma_eps[0, 0] == pytest.approx(0.25)
    assert t1.eps_sup == pytest.approx(0.5)
    assert t1.b_A == pytest.approx(1.0)


def test_t2_derivation(t2):
    np.testing.assert_allclose(t2.theta_star, [7 / 6], atol=1e-14)
    np.testing.assert_allclose(t2.eps_table.ravel(), [-1 / 3, 2 / 3], atol=1e-14)
    assert t2.diagnostics["t_mix_min"] == 4


def test_bad_mixing_time_names_minimum():
    with pytest.raises(MixingCertificateError, match="minimal t_mix is 4"):
        problem.validate_and_derive(t2_model(t_mix=3))


def test_declared_mean_mismatch():
    m = t1_model()
    bad = problem.ObservationModel(m.A_table, m.b_table, m.noise, declared_Abar=[[1.2]])
    with pytest.raises(StationarityError):
        problem.validate_and_derive(bad)


def test_not_hurwitz():
    m = problem.ObservationModel(-np.ones((2, 1, 1)), [[1.0], [0.0]],
                                 problem.NoiseProcess("iid", weights=[0.5, 0.5]))
    with pytest.raises(StabilityError):
        problem.validate_and_derive(m)


def test_subgaussian_proxy_floor():
    noise = problem.NoiseProcess("subgaussian_iid", weights=[0.5, 0.5], additive_cov=[[0.09]],
                                 sigma_eps=0.1)
    with pytest.raises(DomainError, match="proxy"):
        problem.validate_and_derive(problem.ObservationModel(np.ones((2, 1, 1)), [[1.5], [0.5]], noise))
    ok = problem.NoiseProcess("subgaussian_iid", weights=[0.5, 0.5], additive_cov=[[0.09]])
    inst = problem.validate_and_derive(problem.ObservationModel(np.ones((2, 1, 1)), [[1.5], [0.5]], ok))
    assert inst.sigma_eps == pytest.approx(np.sqrt(0.09 + 0.25))
    assert inst.Sigma_eps[0, 0] == pytest.approx(0.34)


def test_json_round_trip(tmp_path):
    model = t2_model()
    path = tmp_path / "m.json"
    problem.save_model(model, path)
    back = problem.load_model(path)
    np.testing.assert_array_equal(back.A_table, model.A_table)
    np.testing.assert_array_equal(back.noise.P, model.noise.P)
    assert back.noise.t_mix == 4


def test_json_unknown_keys(tmp_path):
    data = problem.model_to_dict(t1_model())
    data["extra"] = 1
    with pytest.raises(ParseError):
        problem.model_from_dict(data)
    data = problem.model_to_dict(t1_model())
    data["noise"]["foo"] = 2
    with pytest.raises(ParseError):
        problem.model_from_dict(data)
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        problem.load_model(path)


def test_generator_rejects_unknown_params():
    with pytest.raises(DomainError):
        problem.generate_instance("random_hurwitz", 2, 3, 0, {"bogus": 1})
    with pytest.raises(DomainError):
        problem.generate_instance("nope", 2, 3, 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 4), S=st.integers(2, 6),
       kind=st.sampled_from(["random_hurwitz", "tdzero"]),
       noise=st.sampled_from(["iid", "markov"]))
def test_generated_instances_are_valid(seed, d, S, kind, noise):
    if kind == "tdzero" and S < d:
        S = d + 1
    model = problem.generate_instance(kind, d, S, seed, {"noise": noise})
    inst = problem.validate_and_derive(model)
    np.testing.assert_allclose(inst.pi @ inst.eps_table, 0, atol=1e-9)
    np.testing.assert_allclose(inst.Abar @ inst.theta_star, inst.bbar, atol=1e-9)
    assert np.all(np.linalg.eigvalsh(inst.Sigma_eps) >= -1e-12)


@settings(max_examples=25, deadline=None)
@given(M=st.floats(0.05, 20.0))
def test_scaling_leaves_theta_star(M):
    base = problem.validate_and_derive(t1_model())
    scaled = problem.validate_and_derive(t1_model().scaled(M))
    np.testing.assert_allclose(scaled.theta_star, base.theta_star, rtol=1e-12)
    assert scaled.eps_sup == pytest.approx(M * base.eps_sup, rel=1e-12)
