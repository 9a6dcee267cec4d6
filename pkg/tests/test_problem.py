import numpy as np
import pytest

from tiered_bo.problem import (
    MAXIMIZE,
    Dataset,
    Evaluation,
    ProblemSpec,
    SearchSpace,
    best_feasible,
    is_feasible,
    latin_hypercube,
)


def ev(f, c, tag="selected"):
    return Evaluation((0.0,), f, c, tag)


@pytest.mark.parametrize("c, expected", [((), True), ((-0.2, 0.0), True), ((-1.0, 0.001), False)])
def test_is_feasible(c, expected):
    assert is_feasible(ev(1.0, c)) is expected


def test_best_feasible_picks_min_over_feasible():
    d = Dataset([ev(3, (-1,)), ev(1, (1,)), ev(2, (-1,))])
    assert best_feasible(d).f == 2
    assert best_feasible(Dataset([ev(1, (1,)), ev(0, (2,))])) is None
    assert best_feasible([ev(5, (0,))]).f == 5


def test_best_feasible_maximize():
    d = Dataset([ev(3, (-1,)), ev(9, (1,)), ev(2, (-1,))])
    assert best_feasible(d, MAXIMIZE).f == 3


def test_search_space_validation():
    with pytest.raises(ValueError):
        SearchSpace((0.0, 1.0), (1.0,))
    with pytest.raises(ValueError):
        SearchSpace((1.0,), (1.0,))
    with pytest.raises(ValueError):
        SearchSpace((), ())


def test_unit_round_trip():
    s = SearchSpace((-5.0, 0.0), (10.0, 15.0))
    x = np.array([2.5, 7.0])
    np.testing.assert_allclose(s.from_unit(s.to_unit(x)), x)
    np.testing.assert_allclose(s.to_unit(s.lower), [0, 0])
    assert s.contains(x) and not s.contains([11.0, 1.0])


def test_problem_spec_sense():
    p = ProblemSpec(SearchSpace.unit(2), 1, MAXIMIZE)
    assert p.to_internal(3.0) == -3.0
    assert p.to_native(p.to_internal(2.5)) == 2.5
    with pytest.raises(ValueError):
        ProblemSpec(SearchSpace.unit(2), -1)
    with pytest.raises(ValueError):
        ProblemSpec(SearchSpace.unit(2), 0, "sideways")


def test_evaluation_tag_checked():
    with pytest.raises(ValueError):
        Evaluation((0.0,), 1.0, (), "bogus")


def test_dataset_arrays():
    d = Dataset()
    d.extend([Evaluation((0.1, 0.2), 1.0, (-1.0, 2.0)), Evaluation((0.3, 0.4), 2.0, (-1.0, -2.0))])
    assert len(d) == 2
    assert d.inputs().shape == (2, 2)
    assert d.constraints().shape == (2, 2)
    np.testing.assert_array_equal(d.feasibility(), [False, True])
    assert d[1].f == 2.0


def test_lhs_single_point():
    pts = latin_hypercube(SearchSpace.unit(2), 1, seed=0)
    assert pts.shape == (1, 2)
    assert np.all((pts >= 0) & (pts <= 1))


def test_lhs_one_point_per_stratum_1d():
    pts = latin_hypercube(SearchSpace((0.0,), (4.0,)), 4, seed=3)
    assert sorted(np.floor(pts[:, 0]).astype(int)) == [0, 1, 2, 3]


def test_lhs_strata_occupancy_high_dim():
    lower = np.linspace(0.1, 1.1, 11)
    upper = lower + np.linspace(1.0, 40.0, 11)
    space = SearchSpace(tuple(lower), tuple(upper))
    n = 20
    pts = latin_hypercube(space, n, seed=11)
    u = space.to_unit(pts)
    for j in range(11):
        counts = np.bincount(np.floor(u[:, j] * n).astype(int), minlength=n)
        assert np.all(counts == 1)


def test_lhs_rejects_zero_and_is_seeded():
    with pytest.raises(ValueError):
        latin_hypercube(SearchSpace.unit(2), 0)
    a = latin_hypercube(SearchSpace.unit(3), 7, seed=5)
    b = latin_hypercube(SearchSpace.unit(3), 7, seed=5)
    np.testing.assert_array_equal(a, b)
