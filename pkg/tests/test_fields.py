import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from heatcontrol.exceptions import MollificationError
from heatcontrol.fields import (
    GridFunction,
    Interval,
    SineSeries,
    SupportSchedule,
    cutoff,
    decompose_target,
    evaluate_series,
    grid_points,
    mollify_decomposition,
    mollify_piece,
    norm_h01,
    norm_l2,
    piece_count,
    project_to_sine,
)

from conftest import sine_grid

coeff_arrays = arrays(np.float64, st.integers(1, 40), elements=st.floats(-2.0, 2.0))


def test_projection_of_first_mode():
    a = project_to_sine(GridFunction(sine_grid(1)), 8).coeffs
    assert a[0] == pytest.approx(0.5, abs=1e-12)
    assert np.all(np.abs(a[1:]) <= 1e-10)


def test_projection_of_zero():
    assert not np.any(project_to_sine(GridFunction(np.zeros(129)), 16).coeffs)


def test_projection_of_parabola():
    x = grid_points(1025)
    a = project_to_sine(GridFunction(x * (1 - x)), 6).coeffs
    k = np.arange(1, 7)
    exact = 2 * (1 - (-1.0) ** k) / (k * math.pi) ** 3
    assert a[0] == pytest.approx(4 / math.pi**3, rel=1e-5)
    assert abs(a[1]) < 1e-12
    np.testing.assert_allclose(a, exact, atol=1e-7)


def test_projection_rejects_modes_above_nyquist():
    with pytest.raises(ValueError):
        project_to_sine(GridFunction(np.zeros(9)), 8)


def test_evaluate_single_mode():
    y = evaluate_series(SineSeries([0.5]), 257)
    np.testing.assert_allclose(y.values, sine_grid(1, 257), atol=1e-14)
    assert not np.any(evaluate_series(SineSeries.zeros(4), 33).values)


@given(coeff_arrays)
def test_grid_round_trip(coeffs):
    s = SineSeries(coeffs)
    n = coeffs.size + 2
    back = project_to_sine(evaluate_series(s, n), coeffs.size).coeffs
    np.testing.assert_allclose(back, coeffs, atol=1e-12)


@pytest.mark.parametrize("series, expected", [
    ([0.5], math.sqrt(0.5)),
    ([0.0, 0.0], 0.0),
    ([0.5, 0.5], 1.0),
])
def test_l2_norm_of_series(series, expected):
    assert norm_l2(SineSeries(series)) == pytest.approx(expected, abs=1e-15)


def test_l2_norm_of_grid_sine():
    assert norm_l2(GridFunction(sine_grid(1))) == pytest.approx(math.sqrt(0.5), abs=1e-12)


@pytest.mark.parametrize("series, expected", [
    ([0.5], math.pi / math.sqrt(2)),
    ([0.0], 0.0),
    ([0.5, 0.25], math.pi),
])
def test_h01_norm(series, expected):
    assert norm_h01(SineSeries(series)) == pytest.approx(expected, rel=1e-14)


@given(coeff_arrays)
def test_parseval_matches_trapezoid(coeffs):
    s = SineSeries(coeffs)
    grid = evaluate_series(s, coeffs.size + 2)
    # trapezoid on the full grid is exact for band-limited sine series
    assert norm_l2(grid) == pytest.approx(norm_l2(s), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("length_l, M", [(0.4, 3), (0.5, 2), (1 / 3, 3), (0.3, 4), (0.99, 2), (1.0, 1)])
def test_piece_count(length_l, M):
    assert piece_count(length_l) == M


def test_decomposition_supports():
    x = grid_points(1001)
    dec = decompose_target(x * (1 - x), 0.4)
    assert [(iv.lo, iv.hi) for iv, _ in dec.pieces] == [(0.0, 0.4), (0.4, 0.8), (0.8, 1.0)]


def test_decomposition_third():
    dec = decompose_target(np.ones(301), 1 / 3)
    assert dec.piece_count == 3
    assert dec.pieces[-1][0].lo == pytest.approx(2 / 3)
    assert dec.pieces[-1][0].hi == 1.0


def test_decomposition_of_constant_halves():
    dec = decompose_target(np.ones(101), 0.5)
    x = grid_points(101)
    (s1, p1), (s2, p2) = dec.pieces
    assert np.all(p1.values[x <= 0.5] == 1) and np.all(p1.values[x > 0.5] == 0)
    assert np.all(p2.values[x > 0.5] == 1) and np.all(p2.values[x <= 0.5] == 0)


@given(arrays(np.float64, 201, elements=st.floats(0.0, 5.0)),
       st.floats(0.05, 0.95))
def test_decomposition_sums_back(values, length_l):
    dec = decompose_target(values, length_l)
    total = sum(p.values for _, p in dec.pieces)
    np.testing.assert_array_equal(total, values)
    x = grid_points(values.size)
    for support, piece in dec.pieces:
        assert np.all(piece.values[~support.contains(x, closed=True)] == 0)


def test_decomposition_rejects_negative_target():
    with pytest.raises(ValueError):
        decompose_target(-np.ones(11), 0.4)


def test_mollify_unit_piece():
    x = grid_points(4097)
    support = Interval(0.0, 0.5)
    piece = np.where(x <= 0.5, 1.0, 0.0)
    result, used, distance = mollify_piece(piece, support, 0.05, tol=1.0)
    assert used == 0.05
    assert distance <= math.sqrt(0.1)
    assert np.all(result.values >= 0)
    assert np.all(result.values[x <= 0.05 / 4] == 0)
    assert np.all(result.values[x >= 0.5 - 0.05 / 4] == 0)


def test_mollify_zero_piece():
    result, _, distance = mollify_piece(np.zeros(65), Interval(0.2, 0.6), 0.05, 1e-3)
    assert distance == 0 and not np.any(result.values)


def test_mollify_keeps_interior_bump():
    x = grid_points(2049)
    s = (x - 0.45) / 0.1
    bump = np.where(np.abs(s) < 1, np.cos(0.5 * math.pi * s) ** 4, 0.0)
    _, _, distance = mollify_piece(bump, Interval(0.3, 0.6), 0.04, 1e-3)
    assert distance <= 1e-12


def test_mollify_refuses_unresolvable_tolerance():
    x = grid_points(65)
    with pytest.raises(MollificationError, match="refine the grid"):
        mollify_piece(np.where(x <= 0.5, 1.0, 0.0), Interval(0.0, 0.5), 0.1, 1e-6)


def test_mollify_rejects_mass_outside_support():
    with pytest.raises(ValueError):
        mollify_piece(np.ones(33), Interval(0.2, 0.5), 0.02, 1.0)


@given(st.floats(0.01, 0.2))
def test_cutoff_range(margin):
    x = grid_points(513)
    c = cutoff(x, Interval(0.2, 0.8), min(margin, 0.149))
    assert np.all((c >= 0) & (c <= 1))
    assert np.all(c[(x <= 0.2) | (x >= 0.8)] == 0)


def test_mollified_decomposition_budget():
    x = grid_points(4097)
    dec = mollify_decomposition(decompose_target(x * (1 - x), 0.4), 0.025)
    err = sum(norm_l2(m.values - p.values) for (_, p), (_, m) in zip(dec.pieces, dec.mollified))
    assert err <= 0.025
    for (outer, _), (inner, m) in zip(dec.pieces, dec.mollified):
        assert inner.is_inside(outer)
        assert np.all(m.values[~inner.contains(x, closed=True)] == 0)


def test_schedule_lookup():
    sch = SupportSchedule(0.4, np.array([0.0, 0.5, 0.9, 1.0]), np.array([0.0, 0.4, 0.6]))
    assert sch.T == 1.0
    assert sch.position_at(0.2) == 0.0
    assert sch.position_at(0.5) == 0.4
    assert sch.support_at(0.95).lo == pytest.approx(0.6)
    assert sch.support_at(0.95).hi == pytest.approx(1.0)


@pytest.mark.parametrize("breaks, positions", [
    ([0.0, 1.0], [0.7]),
    ([0.0, 0.5], [0.0, 0.1]),
    ([0.0, 0.6, 0.5], [0.0, 0.1]),
])
def test_schedule_rejects_bad_input(breaks, positions):
    with pytest.raises(ValueError):
        SupportSchedule(0.4, np.array(breaks), np.array(positions))


def test_grid_function_requires_dirichlet_shape():
    with pytest.raises(ValueError):
        GridFunction(np.array([0.0, np.nan, 0.0]))
