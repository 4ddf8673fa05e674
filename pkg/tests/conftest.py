import itertools
from pathlib import Path

import numpy as np
import pytest

from lsa_lab import problem

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ACCEPTANCE_LINES = []


def t1_model():
    return problem.ObservationModel(np.ones((2, 1, 1)), [[1.5], [0.5]],
                                    problem.NoiseProcess("iid", weights=[0.5, 0.5]))


def t2_model(xi=(1.0, 0.0), t_mix=4):
    return problem.ObservationModel(
        np.ones((2, 1, 1)), [[1.5], [0.5]],
        problem.NoiseProcess("markov", P=[[0.9, 0.1], [0.2, 0.8]], xi=list(xi), t_mix=t_mix))


@pytest.fixture
def t1():
    return problem.validate_and_derive(t1_model())


@pytest.fixture
def t2():
    return problem.validate_and_derive(t2_model())


def enumerate_mean_average(instance, alpha, n, theta0):
    """E[theta_bar_n] by running the plain recursion on every length-n path.

    Independent of the library's simulation code: a direct loop with
    ``A @ theta`` products and path probabilities from the noise law.
    """
    noise = instance.noise
    S = instance.model.S
    if noise.is_markov:
        P = np.asarray(noise.P, float)
        init = np.asarray(noise.xi, float)
    else:
        P = np.tile(np.asarray(noise.weights, float), (S, 1))
        init = np.asarray(noise.weights, float)
    total = np.zeros(instance.d)
    mass = 0.0
    for path in itertools.product(range(S), repeat=n):
        prob = init[path[0]]
        for u, v in zip(path, path[1:]):
            prob *= P[u, v]
        if prob == 0.0:
            continue
        theta = np.array(theta0, dtype=float)
        acc = np.zeros(instance.d)
        for k, z in enumerate(path, start=1):
            if k - 1 >= n // 2:
                acc += theta
            theta = theta - alpha * (instance.A_table[z] @ theta - instance.b_table[z])
        total += prob * acc / (n - n // 2)
        mass += prob
    return total, mass


def record(criterion, ok, detail):
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
