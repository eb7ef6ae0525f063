import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from heatcontrol.fields import GridFunction, Interval, grid_points
from heatcontrol.obstruction import (
    boundary_gap,
    boundary_pairing,
    build_static_adjoint,
    check_p1_bounds,
    duality_pairing_static,
    random_damping,
    random_smooth_state,
    sample_boundary_signal,
    sample_reaction_control,
    sample_static_controls,
    strip_floor,
    strip_norm,
    unreachability_gap,
    verify_strip_obstruction,
)
from heatcontrol.solvers import BoundarySignal, SourceWindow

from conftest import sine_grid


def _quad_gap(m):
    adj = build_static_adjoint(m, 1.0)
    brk = [1.0 / m]
    num = quad(lambda x: max(float(adj.phi(x)), 0.0) * float(adj.phi(x)), 0, 1, points=brk, epsabs=1e-13)[0]
    den = quad(lambda x: float(adj.phi(x)) ** 2, 0, 1, points=brk, epsabs=1e-13)[0]
    return num / math.sqrt(den), num, den


@pytest.mark.parametrize("m", [2, 3, 4, 7])
def test_gap_matches_quadrature(m):
    adj = build_static_adjoint(m, 1.0)
    gap, num, den = _quad_gap(m)
    assert num == pytest.approx(1 / (2 * m), rel=1e-10)
    assert adj.phi_norm() ** 2 == pytest.approx(den, rel=1e-10)
    assert unreachability_gap(adj) == pytest.approx(gap, rel=1e-10)
    assert unreachability_gap(adj) > 0


def test_gap_for_two_pieces():
    assert unreachability_gap(build_static_adjoint(2, 1.0)) == pytest.approx(0.25 / math.sqrt(0.5), rel=1e-15)


def test_phi_branches_for_two_pieces():
    adj = build_static_adjoint(2, 1.0)
    x = np.linspace(0, 1, 101)
    expected = np.where(x < 0.5, np.sin(2 * math.pi * x), -np.sin(math.pi * (2 * x - 1)))
    np.testing.assert_allclose(adj.phi(x), expected, atol=1e-15)
    assert not np.any(adj.h_profile(x))


def test_source_prefactor_for_three_pieces():
    adj = build_static_adjoint(3, 1.0)
    assert adj.h_prefactor == pytest.approx(27 * math.pi**2 / 4, rel=1e-15)
    x = np.linspace(0, 1, 301)
    assert np.all(adj.h_profile(x) >= 0)
    assert np.all(adj.h_profile(x)[x >= 1 / 3] == 0)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_adjoint_signs_and_residual(m):
    adj = build_static_adjoint(m, 1.0)
    assert adj.residual() <= 1e-8
    x = np.linspace(1 / m, 1, 200)
    for t in (0.0, 0.5, 1.0):
        assert np.all(adj.p(x, t) <= 0)
        assert np.all(adj.h(np.linspace(0, 1, 200), t) >= 0)


@pytest.mark.parametrize("m", [1, 0, 2.5])
def test_adjoint_rejects_bad_piece_count(m):
    with pytest.raises(ValueError):
        build_static_adjoint(m, 1.0)


def _indicator_window(n, lo, hi, t0=0.0, t1=1.0):
    x = grid_points(n)
    support = Interval(lo, hi)
    return SourceWindow(t0, t1, GridFunction(np.where(support.contains(x, closed=True), 1.0, 0.0)), support)


def test_constant_control_pairs_strictly_negative():
    adj = build_static_adjoint(2, 1.0)
    rep = duality_pairing_static(adj, [_indicator_window(1025, 0.6, 0.9)])
    # int_{0.6}^{0.9} sin(2 pi x) dx * int_0^1 e^{4 pi^2 (t - 1)} dt
    oracle = quad(lambda x: math.sin(2 * math.pi * x), 0.6, 0.9)[0] * (1 - math.exp(-4 * math.pi**2)) / (4 * math.pi**2)
    assert rep.rhs[0] < 0
    assert rep.rhs[0] == pytest.approx(oracle, abs=1e-5)
    assert rep.identity_residual <= 1e-6 and rep.passed


def test_zero_control_pairs_to_zero():
    rep = duality_pairing_static(build_static_adjoint(2, 1.0), [])
    assert rep.lhs == [0.0] and rep.rhs == [0.0]


def test_control_outside_allowed_region_is_rejected():
    with pytest.raises(ValueError, match="outside"):
        duality_pairing_static(build_static_adjoint(2, 1.0), [_indicator_window(257, 0.3, 0.6)], n_points=257)


@pytest.mark.parametrize("m", [2, 3])
def test_random_controls_respect_the_gap(m):
    adj = build_static_adjoint(m, 1.0)
    rng = np.random.default_rng(7)
    omega = Interval(1 / m + 0.05, 0.95)
    for _ in range(5):
        rep = duality_pairing_static(adj, sample_static_controls(rng, omega, 1.0, 513), n_points=513)
        assert rep.passed
        assert rep.distances[0] >= unreachability_gap(adj) - 1e-3


def test_boundary_constant_signal():
    rep = boundary_pairing(BoundarySignal.constant(1.0, 0.0, 1.0), 1.0)
    assert rep.rhs[0] == pytest.approx(-(1 - math.exp(-9 * math.pi**2)) / (3 * math.pi), abs=1e-12)
    assert rep.rhs[0] == pytest.approx(-0.10610, abs=1e-5)
    assert rep.identity_residual <= 1e-6


def test_boundary_zero_signal():
    rep = boundary_pairing(BoundarySignal.constant(0.0, 0.0, 1.0), 1.0)
    assert rep.lhs == [0.0] and rep.rhs == [0.0]


def test_boundary_rejects_negative_signal():
    with pytest.raises(ValueError):
        boundary_pairing(BoundarySignal.constant(-1.0, 0.0, 1.0), 1.0)


@given(st.integers(0, 2**32))
def test_random_boundary_signals_pair_nonpositive(seed):
    rep = boundary_pairing(sample_boundary_signal(np.random.default_rng(seed), 1.0), 1.0)
    assert rep.passed and rep.rhs[0] <= 0


def test_boundary_gap_value():
    assert boundary_gap() == pytest.approx((1 / 6) / math.sqrt(0.5))


def test_strip_floor_matches_eigen_expansion():
    lo, hi, T = 0.6, 0.9, 0.01
    L = hi - lo
    total = 0.0
    for k in range(1, 200):
        c = 2 / L * quad(lambda x: math.sin(math.pi * x) * math.sin(k * math.pi * (x - lo) / L), lo, hi, limit=400)[0]
        total += c**2 * math.exp(-2 * (k * math.pi / L) ** 2 * T)
    oracle = math.sqrt(L / 2 * total)
    assert oracle == pytest.approx(0.11403548291155623, rel=1e-10)
    assert strip_floor(sine_grid(1), Interval(lo, hi), T) == pytest.approx(oracle, abs=1e-6)


def test_strip_floor_vanishes_for_zero_data_on_strip():
    x = grid_points(513)
    y0 = np.where(x < 0.3, np.sin(math.pi * x / 0.3) ** 2, 0.0)
    assert strip_floor(y0, Interval(0.6, 0.9), 1e-4) == pytest.approx(0.0, abs=1e-14)


def test_strip_norms_stay_above_floor():
    rng = np.random.default_rng(3)
    omega, strip = Interval(0.0, 0.4), Interval(0.6, 0.9)
    samples = [sample_reaction_control(rng, omega, 0.01, 513) for _ in range(3)]
    rep = verify_strip_obstruction(sine_grid(1, 513), samples + [[]], strip, omega, 0.01)
    assert rep.passed
    # without any control the strip gains mass from its neighbourhood
    assert rep.strip_norms[-1] > rep.floor + 1e-3
    assert strip_norm(sine_grid(1, 513), strip) > rep.floor


def test_strip_overlapping_control_is_rejected():
    with pytest.raises(ValueError, match="overlap"):
        verify_strip_obstruction(sine_grid(1, 129), [], Interval(0.3, 0.6), Interval(0.0, 0.4), 0.01)


def test_p1_first_mode_without_damping():
    rep = check_p1_bounds(sine_grid(1, 513), np.zeros(513), 0.05)
    assert rep.bound_a == pytest.approx(0.0, abs=1e-3)
    assert rep.max_yt <= 0
    assert rep.passed


def test_p1_zero_state():
    rep = check_p1_bounds(np.zeros(129), np.zeros(129), 0.01)
    assert rep.max_yt == 0 and rep.bound_a == 0 and rep.bound_b == 0 and rep.bound_c == 0
    assert rep.passed


def test_p1_bump_with_damping():
    x = grid_points(1025)
    s = (x - 0.35) / 0.2
    y0 = np.where(np.abs(s) < 1, np.cos(0.5 * math.pi * s) ** 4, 0.0)
    v = np.where((x > 0.5) & (x < 0.8), -50.0, 0.0)
    assert check_p1_bounds(y0, v, 0.05).passed


def test_p1_rejects_positive_reaction():
    with pytest.raises(ValueError):
        check_p1_bounds(sine_grid(1, 65), np.ones(65), 0.01)


@settings(max_examples=5)
@given(st.integers(0, 2**32))
def test_p1_random_samples(seed):
    rng = np.random.default_rng(seed)
    y0 = random_smooth_state(rng, 1025)
    v = random_damping(rng, 1025)
    assert y0.min() >= 0 and v.max() <= 0
    assert check_p1_bounds(y0, v, 0.02).passed
