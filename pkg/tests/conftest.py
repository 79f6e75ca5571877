import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from segrr.problems import FiniteSumProblem, generate_problem, scalar_problem

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def pm_pair():
    """F_1(z) = z + 1, F_2(z) = z - 1."""
    return scalar_problem([1.0, -1.0])


@pytest.fixture
def rotation():
    return FiniteSumProblem([[[0.0, 1.0], [-1.0, 0.0]]], [[0.0, 0.0]])


@pytest.fixture
def singular_affine():
    return FiniteSumProblem([[[0.0, 0.0], [0.0, 1.0]]], [[0.0, -1.0]])


@pytest.fixture(scope="session")
def small_quadratic():
    return generate_problem("quadratic-scsc", {"n": 6, "d": 3, "mu": 1.0, "L": 4.0}, seed=11)


@pytest.fixture(scope="session")
def small_bilinear():
    return generate_problem("bilinear", {"n": 6, "d": 3, "lambda_min_plus": 0.5, "L_max": 2.0}, seed=12)


@pytest.fixture(scope="session")
def small_wgan():
    return generate_problem("wgan-toy", {"n": 8, "d": 2, "mean": [3.0, 4.0], "scale": 0.1}, seed=13)


def random_vectors(seed, count, d, scale=1.0):
    return scale * np.random.default_rng(seed).standard_normal((count, d))
