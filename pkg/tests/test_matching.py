import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dtedge.matching import (
    BACKENDS,
    default_pad_value,
    pad_to_square,
    solve_assignment,
    solve_rectangular,
)


def enumerate_min(c):
    n = len(c)
    return min(sum(c[i][p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def test_zero_diagonal(backend):
    r = solve_assignment([[0, 1], [1, 0]], backend)
    assert r.assignment.tolist() == [0, 1]
    assert r.total_cost == 0


def test_two_by_two_anti_diagonal(backend):
    r = solve_assignment([[4, 1], [2, 3]], backend)
    assert r.assignment.tolist() == [1, 0]
    assert r.total_cost == 3


def test_six_by_six_matches_720_permutations(backend):
    rng = np.random.default_rng(11)
    c = rng.random((6, 6))
    assert solve_assignment(c, backend).total_cost == pytest.approx(enumerate_min(c), rel=1e-9)


def test_single_entry(backend):
    r = solve_assignment([[2.5]], backend)
    assert r.assignment.tolist() == [0] and r.total_cost == 2.5


@pytest.mark.parametrize("bad", [np.zeros((0, 0)), [[1.0, np.inf], [0, 1]], [[np.nan]], [[1, 2, 3]], [[-1.0]]])
def test_invalid_matrices(bad, backend):
    with pytest.raises(ValueError):
        solve_assignment(bad, backend)


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve_assignment([[1.0]], "auction")


def test_integer_costs_are_exact():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        c = rng.integers(0, 20, (n, n))
        assert solve_assignment(c, "hungarian").total_cost == enumerate_min(c.tolist())


def test_hungarian_ties_and_degenerate_matrices():
    assert solve_assignment(np.ones((5, 5)), "hungarian").total_cost == 5
    assert solve_assignment(np.zeros((4, 4)), "hungarian").total_cost == 0


def test_hungarian_agrees_with_scipy_on_larger_instances():
    rng = np.random.default_rng(2)
    for n in (10, 25, 50):
        c = rng.exponential(size=(n, n))
        a = solve_assignment(c, "hungarian").total_cost
        b = solve_assignment(c, "scipy").total_cost
        assert a == pytest.approx(b, rel=1e-9)


square = st.integers(1, 7).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(0, 100, allow_nan=False))
)


@settings(max_examples=150, deadline=None)
@given(square)
def test_optimal_against_enumeration(c):
    expected = enumerate_min(c.tolist())
    for b in BACKENDS:
        r = solve_assignment(c, b)
        assert sorted(r.assignment.tolist()) == list(range(len(c)))
        assert r.total_cost == pytest.approx(c[np.arange(len(c)), r.assignment].sum())
        assert r.total_cost == pytest.approx(expected, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(square, st.data())
def test_row_shift_changes_cost_by_constant(c, data):
    row = data.draw(st.integers(0, len(c) - 1))
    shift = data.draw(st.floats(0, 50))
    shifted = c.copy()
    shifted[row] += shift
    before = solve_assignment(c, "hungarian").total_cost
    after = solve_assignment(shifted, "hungarian").total_cost
    assert after == pytest.approx(before + shift, rel=1e-9, abs=1e-9)


class TestPadding:
    def test_wide_matrix_gets_a_dummy_row(self):
        c = np.arange(6, dtype=float).reshape(2, 3)
        p = pad_to_square(c, 0.0)
        assert p.costs.shape == (3, 3)
        assert np.array_equal(p.costs[:2], c)
        assert np.all(p.costs[2] == 0)
        assert p.is_dummy_row(2) and not p.is_dummy_row(1)

    def test_tall_matrix_gets_a_dummy_column(self):
        p = pad_to_square(np.ones((3, 1)), 7.0)
        assert p.costs.shape == (3, 3)
        assert p.is_dummy_col(1) and not p.is_dummy_col(0)
        assert np.all(p.costs[:, 1:] == 7.0)

    def test_square_unchanged(self):
        c = np.random.default_rng(0).random((3, 3))
        p = pad_to_square(c)
        assert np.array_equal(p.costs, c)
        assert p.real_rows == p.real_cols == 3

    def test_default_pad_dominates(self):
        c = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert default_pad_value(c) == 11.0

    def test_three_by_five_matches_enumeration(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            c = rng.random((3, 5))
            got = solve_rectangular(c)
            best = min(
                sum(c[i, cols[i]] for i in range(3)) for cols in itertools.permutations(range(5), 3)
            )
            assert len(set(got.values())) == 3
            assert sum(c[i, j] for i, j in got.items()) == pytest.approx(best, rel=1e-9)

    def test_uniform_dummies_do_not_change_real_assignment_cost(self):
        rng = np.random.default_rng(9)
        c = rng.random((2, 4))
        small = solve_rectangular(c, pad_value=default_pad_value(c))
        large = solve_rectangular(c, pad_value=1e6)
        cost = lambda m: sum(c[i, j] for i, j in m.items())  # noqa: E731
        assert cost(small) == pytest.approx(cost(large), rel=1e-12)

    def test_more_rows_than_columns_rejected(self):
        with pytest.raises(ValueError):
            solve_rectangular(np.ones((3, 2)))

    def test_empty_rows(self):
        assert solve_rectangular(np.ones((0, 3))) == {}
