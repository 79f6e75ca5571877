import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from segrr.errors import ContractViolation, InfeasibleError, ParameterError, ValidationError
from segrr.metrics import variance_bound_residual
from segrr.problems import FiniteSumProblem, generate_problem, initial_point, scalar_problem

GENERATED = {
    "quadratic-scsc": {"n": 7, "d": 3, "mu": 1.0, "L": 10.0},
    "bilinear": {"n": 7, "d": 3, "lambda_min_plus": 1.0, "L_max": 5.0},
    "wgan-toy": {"n": 7, "d": 3, "mean": [1.0, -2.0, 0.5], "scale": 0.1},
}


@pytest.fixture(scope="module", params=sorted(GENERATED))
def generated(request):
    return generate_problem(request.param, GENERATED[request.param], seed=5)


# generation

def test_quadratic_single_component_shape():
    p = generate_problem("quadratic-scsc", {"n": 1, "d": 1, "mu": 1.0, "L": 1.0, "linear_scale": 0.0},
                         seed=3)
    Q = p.Q[0]
    s = Q[0, 1] / 0.1
    assert Q[0, 0] == pytest.approx(1.0) and Q[1, 1] == pytest.approx(1.0)
    assert 0.0 <= s <= 1.0
    assert Q[1, 0] == -Q[0, 1]
    assert np.allclose(p.solution.point, 0.0)
    assert p.solution.unique


def test_bilinear_single_component_is_rotation():
    p = generate_problem("bilinear", {"n": 1, "d": 1, "lambda_min_plus": 1.0, "L_max": 1.0,
                                      "linear_scale": 0.0}, seed=4)
    assert np.allclose(p.Q[0], [[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(p.solution.point, 0.0)


def test_wgan_noiseless_solution_is_mean():
    p = generate_problem("wgan-toy", {"n": 5, "d": 2, "mean": [3.0, 4.0], "scale": 0.0}, seed=1)
    assert np.allclose(p.solution.point, [3.0, 4.0, 0.0, 0.0])


def test_wgan_solution_is_sample_mean_of_differences():
    p = generate_problem("wgan-toy", {"n": 9, "d": 2, "mean": [3.0, 4.0], "scale": 0.1}, seed=2)
    diffs = -p.b[:, 2:]  # b_j = (0, -(x_j - z_j))
    assert np.allclose(p.solution.point[:2], diffs.mean(axis=0), atol=1e-12)
    assert np.allclose(p.solution.point[2:], 0.0, atol=1e-12)


def test_generation_deterministic():
    a = generate_problem("bilinear", GENERATED["bilinear"], seed=8)
    b = generate_problem("bilinear", GENERATED["bilinear"], seed=8)
    assert np.array_equal(a.Q, b.Q) and np.array_equal(a.b, b.b)


def test_invalid_spectrum_order():
    with pytest.raises(ParameterError):
        generate_problem("quadratic-scsc", {"n": 2, "d": 2, "mu": 3.0, "L": 1.0}, seed=0)
    with pytest.raises(ParameterError):
        generate_problem("bilinear", {"n": 2, "d": 2, "lambda_min_plus": 3.0, "L_max": 1.0}, seed=0)


def test_unknown_kind():
    with pytest.raises(ParameterError):
        generate_problem("nonlinear", {}, seed=0)


def test_non_monotone_explicit_names_eigenvalue():
    comps = [{"Q": [[-0.5, 0.0], [0.0, 1.0]], "b": [0.0, 0.0]}]
    with pytest.raises(ValidationError, match="-0.5"):
        generate_problem("explicit-affine", {"components": comps})


def test_inconsistent_system_is_infeasible():
    p = FiniteSumProblem([[[0.0, 0.0], [0.0, 1.0]]], [[1.0, 0.0]])
    with pytest.raises(InfeasibleError):
        p.solution


def test_class_tags(generated):
    expected = {"quadratic-scsc": "strongly-monotone"}.get(generated.generator, "affine-monotone")
    assert generated.kind == expected


# evaluation

def test_evaluate_scalar_pair(pm_pair):
    assert pm_pair.evaluate([0.0]) == pytest.approx([0.0])
    assert pm_pair.evaluate([0.0], index=0) == pytest.approx([1.0])


def test_evaluate_rotation(rotation):
    assert np.allclose(rotation.evaluate([3.0, 4.0]), [4.0, -3.0])


def test_evaluate_errors(pm_pair):
    with pytest.raises(ContractViolation):
        pm_pair.evaluate([0.0], index=2)
    with pytest.raises(ContractViolation):
        pm_pair.evaluate([0.0, 1.0])


@given(st.integers(0, 10**6))
@settings(max_examples=20)
def test_full_evaluation_is_mean_of_components(seed):
    p = generate_problem("bilinear", GENERATED["bilinear"], seed=seed % 50)
    z = np.random.default_rng(seed).standard_normal(p.d)
    acc = np.zeros(p.d)
    for i in range(p.n):
        acc = acc + p.evaluate(z, index=i)
    assert np.allclose(p.evaluate(z), acc / p.n, rtol=1e-13, atol=1e-13)


# constants

def test_constants_scalar_pair(pm_pair):
    c = pm_pair.constants
    assert np.allclose(c.L_i, [1.0, 1.0])
    assert c.L_max == pytest.approx(1.0) and c.L == pytest.approx(1.0)
    assert c.mu == pytest.approx(1.0) and c.A == pytest.approx(2.0)
    assert c.sigma_star_sq == pytest.approx(1.0)
    assert np.allclose(pm_pair.solution.point, [0.0])


def test_constants_rotation(rotation):
    c = rotation.constants
    assert c.mu == 0.0 and c.kappa is None
    assert c.lambda_min_plus == pytest.approx(1.0)
    assert c.L == pytest.approx(1.0)
    assert c.sigma_star_sq == 0.0


def test_constants_quadratic_spectrum():
    p = generate_problem("quadratic-scsc", {"n": 10, "d": 4, "mu": 1.0, "L": 10.0}, seed=1)
    c = p.constants
    assert 1.0 - 1e-6 <= c.mu <= 10.0
    assert c.L_max <= 10.0 * 1.1 + 1e-9


def test_zero_operator_has_no_lambda():
    p = FiniteSumProblem([[[0.0, 0.0], [0.0, 0.0]]], [[0.0, 0.0]])
    assert p.constants.lambda_min_plus is None


def test_constant_invariants(generated):
    c = generated.constants
    assert c.L <= c.L_max * (1 + 1e-12)
    assert c.A <= 2 * c.L_max ** 2 * (1 + 1e-12)
    assert min(c.L, c.mu, c.A, c.sigma_star_sq) >= 0


# solution sets

def test_solution_rotation(rotation):
    assert rotation.solution.unique
    assert np.allclose(rotation.solution.point, 0.0)
    assert rotation.dist_sq([3.0, 4.0]) == pytest.approx(25.0)


def test_solution_affine_set(singular_affine):
    sol = singular_affine.solution
    assert not sol.unique
    assert np.allclose(sol.point, [0.0, 1.0])
    assert singular_affine.dist_sq([5.0, 0.0]) == pytest.approx(1.0)
    assert singular_affine.dist_sq([-7.0, 1.0]) == pytest.approx(0.0)


def test_dist_to_solution_is_zero(generated):
    assert generated.dist_sq(generated.solution.point) == 0.0


def test_solution_residual(generated):
    r = np.linalg.norm(generated.evaluate(generated.solution.point))
    assert r <= 1e-8 * max(1.0, np.linalg.norm(generated.mean_offset))


# properties

def _pairs(seed, d, count=1000):
    rng = np.random.default_rng(seed)
    return 5 * rng.standard_normal((count, d)), 5 * rng.standard_normal((count, d))


def test_mean_operator_monotone(generated):
    Z1, Z2 = _pairs(0, generated.d)
    for z1, z2 in zip(Z1, Z2):
        diff = z1 - z2
        inner = (generated.mean_value(z1) - generated.mean_value(z2)) @ diff
        assert inner >= -1e-9 * (diff @ diff)


def test_quadratic_strongly_monotone():
    p = generate_problem("quadratic-scsc", {"n": 7, "d": 3, "mu": 1.0, "L": 10.0}, seed=5)
    mu = p.constants.mu
    Z1, Z2 = _pairs(1, p.d)
    for z1, z2 in zip(Z1, Z2):
        diff = z1 - z2
        inner = (p.mean_value(z1) - p.mean_value(z2)) @ diff
        assert inner >= mu * (diff @ diff) * (1 - 1e-6)
        assert inner >= 1.0 * (diff @ diff) * (1 - 1e-6)


def test_component_lipschitz(generated):
    L_i = generated.constants.L_i
    Z1, Z2 = _pairs(2, generated.d, 200)
    for z1, z2 in zip(Z1, Z2):
        dz = np.linalg.norm(z1 - z2)
        for i in range(generated.n):
            dF = np.linalg.norm(generated.evaluate(z1, i) - generated.evaluate(z2, i))
            assert dF <= L_i[i] * dz * (1 + 1e-9)


def test_variance_bound_holds(generated):
    Z, _ = _pairs(3, generated.d)
    for z in Z:
        assert variance_bound_residual(generated, z) >= -1e-9 * max(1.0, generated.constants.A)


# serialization

def test_json_round_trip_bit_exact(generated):
    text = generated.to_json()
    back = FiniteSumProblem.from_json(text)
    assert np.array_equal(back.Q, generated.Q) and np.array_equal(back.b, generated.b)
    assert back.kind == generated.kind and back.generator == generated.generator
    doc = json.loads(text)
    assert {"kind", "d", "n", "components", "seed", "params"} <= set(doc)


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1, max_size=6))
def test_json_round_trip_arbitrary_offsets(offsets):
    p = scalar_problem(offsets)
    back = FiniteSumProblem.from_json(p.to_json())
    assert np.array_equal(back.b, p.b)


def test_json_header_mismatch():
    doc = json.loads(scalar_problem([1.0, 2.0]).to_json())
    doc["n"] = 3
    with pytest.raises(ContractViolation):
        FiniteSumProblem.from_dict(doc)


def test_problem_arrays_read_only(pm_pair):
    with pytest.raises(ValueError):
        pm_pair.Q[0, 0, 0] = 2.0


# initial points

def test_initial_point_kinds():
    assert np.array_equal(initial_point(3, "zeros"), np.zeros(3))
    a, b = initial_point(4, "normal", seed=2), initial_point(4, "normal", seed=2)
    assert np.array_equal(a, b)
    assert np.array_equal(initial_point(2, "explicit", values=[1, 2]), [1.0, 2.0])
    with pytest.raises(ParameterError):
        initial_point(2, "explicit", values=[1.0])
