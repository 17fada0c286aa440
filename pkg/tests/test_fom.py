import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from romclosure.exceptions import DomainError
from romclosure.fom import Grid, TimeMesh, exact_solution, generate_snapshots, inner_product


def naive_solution(x, t, nu):
    t0 = math.exp(1.0 / (8.0 * nu))
    return (x / (t + 1)) / (1 + math.sqrt((t + 1) / t0) * math.exp(x**2 / (4 * nu * (t + 1))))


def mp_solution(x, t, nu):
    mpmath.mp.dps = 50
    x, t, nu = mpmath.mpf(x), mpmath.mpf(t), mpmath.mpf(nu)
    t0 = mpmath.exp(1 / (8 * nu))
    return (x / (t + 1)) / (1 + mpmath.sqrt((t + 1) / t0) * mpmath.exp(x**2 / (4 * nu * (t + 1))))


def test_zero_at_origin():
    assert exact_solution(0.0, 0.5, 0.001) == 0.0


def test_right_boundary_is_negligible():
    u = exact_solution(1.0, 0.0, 0.001)
    assert 0.0 <= u < 1e-80
    assert u == pytest.approx(float(mp_solution(1.0, 0.0, 0.001)), rel=1e-12)


def test_front_midpoint():
    # exponent vanishes at x=0.5, t=0: u = 0.5 / 2
    assert exact_solution(0.5, 0.0, 0.001) == pytest.approx(0.25, rel=1e-15)
    assert float(mp_solution(0.5, 0.0, 0.001)) == pytest.approx(0.25, rel=1e-15)


@pytest.mark.parametrize("nu", [0.05, 0.1, 0.5, 1.0])
def test_log_space_matches_textbook_form(nu):
    for x in np.linspace(0, 1, 11):
        for t in (0.0, 0.3, 1.0):
            expected = naive_solution(x, t, nu)
            assert exact_solution(x, t, nu) == pytest.approx(expected, rel=1e-12, abs=0.0)


@pytest.mark.parametrize("nu", [1e-3, 1 / 1500, 5e-4])
def test_matches_high_precision_at_small_viscosity(nu):
    for x in (0.1, 0.3, 0.5, 0.55, 0.7):
        for t in (0.0, 0.5, 1.0):
            expected = float(mp_solution(x, t, nu))
            assert exact_solution(x, t, nu) == pytest.approx(expected, rel=1e-11, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(
    x=st.floats(0, 1),
    t=st.floats(0, 1),
    nu=st.floats(1e-4, 1.0),
)
def test_bounds(x, t, nu):
    u = exact_solution(x, t, nu)
    assert 0.0 <= u <= x / (t + 1) + 1e-300


@pytest.mark.parametrize("bad", [(np.nan, 0.1, 0.01), (0.1, np.inf, 0.01), (0.1, 0.1, 0.0),
                                 (0.1, 0.1, -1.0), (0.1, -0.5, 0.01)])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        exact_solution(*bad)


def test_small_snapshot_matrix_entries():
    grid, times = Grid(3), TimeMesh(2)
    snaps = generate_snapshots(grid, times, 0.01)
    assert snaps.values.shape == (3, 2)
    for i, x in enumerate((0.0, 0.5, 1.0)):
        for j, t in enumerate((0.0, 1.0)):
            assert snaps.values[i, j] == pytest.approx(float(mp_solution(x, t, 0.01)), rel=1e-12,
                                                       abs=1e-300)
    assert snaps.values[0, 0] == 0.0


def test_training_database(re1000_snapshots):
    s = re1000_snapshots
    assert s.values.shape == (1024, 500)
    assert s.reynolds == pytest.approx(1000.0)
    assert np.all(s.values[0] == 0.0)
    assert np.all(np.isfinite(s.values))
    assert not s.values.flags.writeable
    again = generate_snapshots(Grid(1024), TimeMesh(500), 1e-3)
    np.testing.assert_array_equal(again.values, s.values)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid(2)
    with pytest.raises(DomainError):
        Grid(10, 1.0, 0.0)
    with pytest.raises(DomainError):
        TimeMesh(1)
    g = Grid(1024)
    assert g.dx == pytest.approx(1 / 1023)
    assert np.allclose(np.diff(g.x), g.dx)


def test_inner_product_of_ones():
    g = Grid(1024)
    ones = np.ones(g.n_points)
    # rectangle rule over both end points: N dx = 1 + dx
    assert inner_product(ones, ones, g) == pytest.approx(1.0, rel=2 * g.dx)
    assert inner_product(ones, ones, g) == pytest.approx(g.n_points * g.dx, rel=1e-14)


def test_inner_product_length_mismatch():
    g = Grid(10)
    with pytest.raises(DomainError):
        inner_product(np.ones(10), np.ones(9), g)


vectors = arrays(np.float64, 16, elements=st.floats(-1e3, 1e3))


@settings(max_examples=100, deadline=None)
@given(f=vectors, g=vectors, h=vectors, a=st.floats(-10, 10))
def test_inner_product_symmetric_and_bilinear(f, g, h, a):
    grid = Grid(16)
    assert inner_product(f, g, grid) == inner_product(g, f, grid)
    lhs = inner_product(a * f + h, g, grid)
    rhs = a * inner_product(f, g, grid) + inner_product(h, g, grid)
    scale = 1 + abs(a) * np.abs(f) @ np.abs(g) * grid.dx + np.abs(h) @ np.abs(g) * grid.dx
    assert abs(lhs - rhs) <= 1e-12 * scale
