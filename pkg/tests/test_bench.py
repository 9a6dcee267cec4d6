import math

import numpy as np
import pytest

from tiered_bo.bench import (
    BENCHMARKS,
    BRANIN_COS_CANONICAL,
    BenchmarkProblem,
    boundary_augmented_grid,
    branin_c,
    exact_tier1,
    feasible_grid_oracle,
    get_benchmark,
    regular_grid,
    tf1,
    tf2,
    theorem1_check,
)
from tiered_bo.problem import ProblemSpec, SearchSpace


def test_tf1_examples():
    f, c = tf1([0.0, 0.0])
    assert f == pytest.approx(1.0) and c[0] == pytest.approx(0.5)
    _, c = tf1([math.pi / 3, 0.0])
    assert c[0] == pytest.approx(0.0, abs=1e-15)


def test_tf2_examples():
    f, c = tf2([0.5, 0.5])
    assert f == pytest.approx(0.25)
    assert c[2] == pytest.approx(-0.2)
    _, c = tf2([1.0, 1.0])
    assert c[1] == pytest.approx(4.0)


def test_branin_examples():
    f, _ = branin_c([-5.0, 15.0])
    assert f == pytest.approx(225.0)
    _, c = branin_c([9.42478, 2.475])
    # at a minimizer of the Branin function the constraint is comfortably satisfied
    assert c[0] < 0
    assert BRANIN_COS_CANONICAL == pytest.approx(9.602112642270262)
    _, c_lit = branin_c([9.42478, 2.475], literal=True)
    assert c_lit[0] != c[0]


def test_out_of_domain_rejected():
    with pytest.raises(ValueError):
        tf1([7.0, 0.0])
    with pytest.raises(ValueError):
        tf2([0.5, -0.1])
    with pytest.raises(ValueError):
        branin_c([-6.0, 1.0])
    with pytest.raises(ValueError):
        tf1([1.0, 1.0, 1.0])


def test_grid_evaluation_matches_pointwise():
    for p in BENCHMARKS.values():
        X = regular_grid(p.spec.space, 7)
        f, C = p.evaluate_grid(X)
        for i in (0, 13, 48):
            fi, ci = p.evaluate(X[i])
            assert f[i] == pytest.approx(fi, rel=1e-12)
            np.testing.assert_allclose(C[i], ci, rtol=1e-12, atol=1e-15)


def test_evaluations_are_pure():
    p = get_benchmark("tf2")
    x = np.array([0.31, 0.62])
    assert p(x) == p(x)


def test_registry():
    assert {"tf1", "tf2", "branin"} <= set(BENCHMARKS)
    assert get_benchmark("tf2").reference_protocol == (160, 30)
    assert get_benchmark("branin").reference_protocol == (200, 30)
    assert get_benchmark("tf1").reference_protocol == (50, 10)
    with pytest.raises(KeyError):
        get_benchmark("rosenbrock")


def test_oracle_tiny_grid_tf2():
    p = get_benchmark("tf2")
    mask, _ = feasible_grid_oracle(p, 2)
    corners = regular_grid(p.spec.space, 2)
    expected = [all(v <= 0 for v in p.evaluate(x)[1]) for x in corners]
    assert mask.shape == (2, 2)
    assert list(mask.ravel()) == expected
    with pytest.raises(ValueError):
        feasible_grid_oracle(p, 1)


def test_oracle_unconstrained_stub_all_true():
    stub = BenchmarkProblem(
        ProblemSpec(SearchSpace.unit(2), 1, name="stub"),
        objective=lambda x: x[0] + x[1],
        constraints=[lambda x: -1.0 + 0.0 * x[0]],
    )
    mask, best = feasible_grid_oracle(stub, 5)
    assert mask.all() and best == 0.0


@pytest.mark.slow
def test_tf1_grid_optimum():
    mask, best = feasible_grid_oracle(get_benchmark("tf1"), 600)
    assert 0 < mask.mean() < 1
    assert best <= -1.99


@pytest.mark.slow
def test_tf2_grid_optimum():
    _, best = feasible_grid_oracle(get_benchmark("tf2"), 1000)
    assert best >= 0.70


@pytest.mark.slow
def test_branin_grid_optimum():
    _, best = feasible_grid_oracle(get_benchmark("branin"), 1500)
    assert best >= 260


def test_grid_optimum_improves_with_resolution():
    # nested grids: resolution 2k-1 contains every point of resolution k
    for name in ("tf1", "tf2", "branin"):
        p = get_benchmark(name)
        sign = 1 if p.sense == "minimize" else -1
        coarse = feasible_grid_oracle(p, 51)[1]
        fine = feasible_grid_oracle(p, 101)[1]
        assert sign * fine <= sign * coarse


def test_boundary_points_lie_on_a_constraint():
    for name in ("tf1", "tf2", "branin", "linear"):
        p = get_benchmark(name)
        B = p.boundary_points(50)
        assert all(p.spec.space.contains(b) for b in B)
        _, C = p.evaluate_grid(B)
        assert np.all(np.abs(C).min(axis=1) <= 1e-9)
        assert np.any(C.max(axis=1) <= 1e-9)


def test_theorem1_linear_eleven_points():
    p = get_benchmark("linear")
    grid = np.column_stack([np.linspace(0, 1, 11), np.full(11, 0.3)])
    assert theorem1_check(p, grid)
    with pytest.raises(ValueError):
        theorem1_check(p, np.delete(grid, 5, axis=0))


@pytest.mark.parametrize("name", ["tf1", "tf2", "branin", "branin_literal"])
def test_theorem1_holds_on_benchmarks(name):
    p = get_benchmark(name)
    assert theorem1_check(p, boundary_augmented_grid(p, 101)) is True


def test_theorem1_refuses_grid_without_boundary_point():
    p = get_benchmark("tf1")
    with pytest.raises(ValueError):
        theorem1_check(p, regular_grid(p.spec.space, 4))


def test_exact_tier1_identity_on_feasible_points():
    p = get_benchmark("tf2")
    F1, feas = exact_tier1(p, boundary_augmented_grid(p, 41))
    np.testing.assert_array_equal(F1[feas, 0], -F1[feas, 1])
