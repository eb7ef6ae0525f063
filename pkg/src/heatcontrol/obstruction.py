"""Certificates that certain nonnegative targets are unreachable.

Adjoint states are evaluated from closed forms, so the only numerical error in a
duality identity comes from the forward simulation and the quadrature.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dst
from scipy.special import roots_legendre

from .fields import GridFunction, Interval, SineSeries, evaluate_series, grid_points, \
    norm_l2, trapezoid
from .solvers import (
    DEFAULT_DT,
    AdditiveSolution,
    BoundarySignal,
    CrankNicolsonStepper,
    ReactionWindow,
    SourceWindow,
    evolve_boundary,
    evolve_multiplicative,
)
from .validation import check_grid_values, check_random_state, check_scalar

IDENTITY_TOL = 1e-6
QUADRATURE_TOL = 1e-6
DERIVATIVE_TOL = 1e-3
STRIP_TOL = 1e-4

_GAUSS_NODES, _GAUSS_WEIGHTS = roots_legendre(24)


def _gauss(f, a, b):
    """24-point Gauss-Legendre quadrature of ``f`` (vectorised over nodes) on [a, b]."""
    t = 0.5 * (b - a) * _GAUSS_NODES + 0.5 * (a + b)
    return 0.5 * (b - a) * sum(w * f(ti) for w, ti in zip(_GAUSS_WEIGHTS, t))


def _exp_integral(rate, a, b, T):
    """int_a^b e^{rate (t - T)} dt."""
    return (math.exp(rate * (b - T)) - math.exp(rate * (a - T))) / rate


def _fd_derivatives(p, x, t, rate, wavenumber, resolution=1e-2):
    """Fourth-order central differences p_t and p_xx of a closed-form field.

    Steps are ``resolution`` over the decay rate (time) and the wavenumber (space).
    """
    k = resolution / rate
    s = resolution / wavenumber
    p_t = (-p(x, t + 2 * k) + 8 * p(x, t + k) - 8 * p(x, t - k) + p(x, t - 2 * k)) / (12 * k)
    p_xx = (-p(x + 2 * s, t) + 16 * p(x + s, t) - 30 * p(x, t) + 16 * p(x - s, t)
            - p(x - 2 * s, t)) / (12 * s**2)
    return p_t, p_xx


@dataclass
class ObstructionReport:
    """Outcome of a duality check over one or more samples."""

    pairing_values: list = field(default_factory=list)
    identity_residuals: list = field(default_factory=list)
    lhs: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    gap_lower_bound: float = 0.0
    sample_passed: list = field(default_factory=list)
    identity_tol: float = IDENTITY_TOL
    quadrature_tol: float = QUADRATURE_TOL

    @property
    def pairing_value(self):
        return max(self.pairing_values, default=0.0)

    @property
    def identity_residual(self):
        return max(self.identity_residuals, default=0.0)

    @property
    def passed(self):
        return all(self.sample_passed)

    def extend(self, other):
        for name in ("pairing_values", "identity_residuals", "lhs", "rhs", "distances", "sample_passed"):
            getattr(self, name).extend(getattr(other, name))
        self.gap_lower_bound = max(self.gap_lower_bound, other.gap_lower_bound)
        return self

    def to_dict(self):
        return {
            "pairing_value": self.pairing_value,
            "identity_residual": self.identity_residual,
            "gap_lower_bound": self.gap_lower_bound,
            "passed": self.passed,
            "n_samples": len(self.sample_passed),
        }


# ---------------------------------------------------------------------------
# static support


@dataclass(frozen=True)
class StaticAdjoint:
    """Closed-form backward solution p = phi(x) exp(rate (t - T)) for controls on (1/m, 1).

    phi = sin(m pi x) on [0, 1/m) and (1 - m) sin(pi (m x - 1) / (m - 1)) on
    [1/m, 1]; rate = m^2 pi^2 / (m - 1)^2. The source h making
    -p_t = p_xx + h hold is nonnegative and lives on [0, 1/m).
    """

    m: int
    T: float

    @property
    def rate(self):
        return (self.m * math.pi / (self.m - 1)) ** 2

    @property
    def h_prefactor(self):
        m = self.m
        return (m - 2) * m**3 * math.pi**2 / (m - 1) ** 2

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        m = self.m
        left = np.sin(m * math.pi * x)
        right = (1 - m) * np.sin(math.pi * (m * x - 1) / (m - 1))
        return np.where(x < 1.0 / m, left, right)

    def p(self, x, t):
        return self.phi(x) * np.exp(self.rate * (np.asarray(t) - self.T))

    def h_profile(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1.0 / self.m, self.h_prefactor * np.sin(self.m * math.pi * x), 0.0)

    def h(self, x, t):
        return self.h_profile(x) * np.exp(self.rate * (np.asarray(t) - self.T))

    def target(self, x):
        """The unreachable target max(phi, 0)."""
        return np.maximum(self.phi(x), 0.0)

    def phi_norm(self):
        m = self.m
        return math.sqrt(1 / (2 * m) + (m - 1) ** 3 / (2 * m))

    def residual(self, n_samples=64, seed=0):
        """Max |-p_t - p_xx - h| / rate at random interior points away from the branch point."""
        rng = check_random_state(seed)
        kappa = self.m * math.pi
        x = rng.uniform(0.01, 0.99, n_samples)
        x = x[np.abs(x - 1.0 / self.m) > 0.05 / kappa]
        t = rng.uniform(0.0, self.T, x.size)
        p_t, p_xx = _fd_derivatives(self.p, x, t, self.rate, kappa)
        scale = max(1.0, self.rate, self.h_prefactor)
        return float(np.max(np.abs(-p_t - p_xx - self.h(x, t))) / scale)


def build_static_adjoint(m, T):
    if isinstance(m, bool) or int(m) != m or m < 2:
        raise ValueError(f"m must be an integer >= 2, got {m}")
    T = check_scalar(T, "T", min_val=0.0, include_min=False)
    return StaticAdjoint(int(m), T)


def unreachability_gap(adjoint):
    """(int y_d phi) / ||phi|| = (1 / (2m)) / ||phi||: a floor on ||y(T) - y_d||."""
    return (1.0 / (2 * adjoint.m)) / adjoint.phi_norm()


def duality_pairing_static(adjoint, windows, n_points=1025, k_max=None):
    """Check int y(T) phi + int int h y = int int u p for a simulated additive run from 0.

    Parameters
    ----------
    adjoint : StaticAdjoint
    windows : list of SourceWindow
        Nonnegative controls supported in (1/m, 1) on [0, T].
    """
    T = adjoint.T
    x = grid_points(n_points)
    hstep = 1.0 / (n_points - 1)
    k_max = k_max or n_points - 2
    allowed = Interval(1.0 / adjoint.m, 1.0)
    profiles = []
    for w in windows:
        prof = w.profile.values if isinstance(w.profile, GridFunction) else \
            evaluate_series(w.profile, n_points).values
        if prof.size != n_points:
            raise ValueError("control profile does not match n_points")
        if np.any(prof < 0) or w.amplitude < 0:
            raise ValueError("controls must be nonnegative")
        outside = ~allowed.contains(x, closed=True)
        if np.any(np.abs(prof[outside]) > 1e-12):
            raise ValueError(f"control has mass outside ({allowed.lo:.6g}, 1)")
        profiles.append(prof * w.amplitude)
    sol = AdditiveSolution(SineSeries.zeros(k_max), list(windows), k_max)
    phi = adjoint.phi(x)
    yT = evaluate_series(sol(T), n_points).values
    lhs = trapezoid(yT * phi, hstep)
    if adjoint.h_prefactor != 0.0:
        hx = adjoint.h_profile(x)
        cuts = sorted({0.0, T, *[w.t_start for w in windows], *[w.t_end for w in windows]})

        def integrand(t):
            y = evaluate_series(sol(t), n_points).values
            return trapezoid(hx * y, hstep) * math.exp(adjoint.rate * (t - T))

        lhs += sum(_gauss(integrand, a, b) for a, b in zip(cuts, cuts[1:]) if b > a)
    rhs = 0.0
    for w, prof in zip(windows, profiles):
        rhs += trapezoid(prof * phi, hstep) * _exp_integral(adjoint.rate, w.t_start, w.t_end, T)
    dist = norm_l2(yT - adjoint.target(x))
    gap = unreachability_gap(adjoint)
    residual = abs(lhs - rhs)
    ok = residual <= IDENTITY_TOL and rhs <= QUADRATURE_TOL
    return ObstructionReport(
        pairing_values=[rhs], identity_residuals=[residual], lhs=[lhs], rhs=[rhs],
        distances=[dist], gap_lower_bound=gap, sample_passed=[bool(ok)],
    )


def _random_profile(rng, x, support, n_terms=6):
    """Positive part of a random trigonometric polynomial on ``support``, zero elsewhere."""
    s = (x - support.lo) / support.length
    coef = rng.standard_normal((2, n_terms))
    j = np.arange(1, n_terms + 1)[:, None]
    poly = rng.uniform(-0.5, 1.0) + (coef[0][:, None] * np.cos(2 * math.pi * j * s)
                                     + coef[1][:, None] * np.sin(2 * math.pi * j * s)).sum(0) / n_terms
    return np.where(support.contains(x), np.maximum(poly, 0.0), 0.0)


def sample_static_controls(rng, support, T, n_points=1025, n_windows=8, max_amplitude=1.0):
    """Nonnegative control piecewise constant on ``n_windows`` equal time windows."""
    rng = check_random_state(rng)
    x = grid_points(n_points)
    edges = np.linspace(0.0, T, n_windows + 1)
    out = []
    for a, b in zip(edges, edges[1:]):
        prof = _random_profile(rng, x, support)
        amp = rng.uniform(0.0, max_amplitude)
        if np.any(prof) and amp > 0:
            out.append(SourceWindow(float(a), float(b), GridFunction(prof), support, amplitude=amp))
    return out


# ---------------------------------------------------------------------------
# boundary control


@dataclass(frozen=True)
class BoundaryAdjoint:
    """p = -e^{9 pi^2 (t - T)} sin(3 pi x), whose fluxes have fixed opposite signs."""

    T: float

    def p(self, x, t):
        return -np.exp(9 * math.pi**2 * (np.asarray(t) - self.T)) * np.sin(3 * math.pi * np.asarray(x))

    def flux_left(self, t):
        return -3 * math.pi * np.exp(9 * math.pi**2 * (np.asarray(t) - self.T))

    def flux_right(self, t):
        return 3 * math.pi * np.exp(9 * math.pi**2 * (np.asarray(t) - self.T))

    def residual(self, n_samples=64, seed=0):
        """Max |-p_t - p_xx| / (9 pi^2) at random interior points."""
        rng = check_random_state(seed)
        x = rng.uniform(0.01, 0.99, n_samples)
        t = rng.uniform(0.0, self.T, n_samples)
        p_t, p_xx = _fd_derivatives(self.p, x, t, 9 * math.pi**2, 3 * math.pi)
        return float(np.max(np.abs(-p_t - p_xx)) / (9 * math.pi**2))


def boundary_gap():
    """(1/6) / ||sin(3 pi x)||: the floor on ||y(T) - max(p(T), 0)|| for boundary controls."""
    return (1.0 / 6.0) / math.sqrt(0.5)


def boundary_pairing(signal, T, k_max=64):
    """Check int y(T) p(T) = int u0 p_x(0) - int u1 p_x(1) <= 0 for a boundary signal."""
    if not signal.is_nonnegative():
        raise ValueError("boundary signals must be nonnegative")
    state = evolve_boundary(signal, T, k_max)
    # p(T) = -sin(3 pi x) pairs with y = 2 sum a_k sin(k pi x) to -a_3
    lhs = -float(state.coeffs[2])
    rhs = 0.0
    for t0, t1, u0, u1 in signal.windows:
        t1 = min(t1, T)
        if t1 <= t0:
            continue
        integral = _exp_integral(9 * math.pi**2, t0, t1, T)
        rhs += -3 * math.pi * integral * u0 - 3 * math.pi * integral * u1
    residual = abs(lhs - rhs)
    ok = residual <= IDENTITY_TOL and rhs <= QUADRATURE_TOL
    return ObstructionReport(
        pairing_values=[rhs], identity_residuals=[residual], lhs=[lhs], rhs=[rhs],
        gap_lower_bound=boundary_gap(), sample_passed=[bool(ok)],
    )


def sample_boundary_signal(rng, T, n_windows=8, max_value=1.0):
    rng = check_random_state(rng)
    edges = np.linspace(0.0, T, n_windows + 1)
    vals = rng.uniform(0.0, max_value, (n_windows, 2))
    return BoundarySignal([(float(a), float(b), float(u0), float(u1))
                           for (a, b), (u0, u1) in zip(zip(edges, edges[1:]), vals)])


# ---------------------------------------------------------------------------
# strip obstruction for multiplicative controls


@dataclass
class StripReport:
    floor: float
    strip_norms: list
    tol: float = STRIP_TOL

    @property
    def margins(self):
        return [n - self.floor for n in self.strip_norms]

    @property
    def passed(self):
        return all(n >= self.floor - self.tol for n in self.strip_norms)

    def to_dict(self):
        return {"floor": self.floor, "min_strip_norm": min(self.strip_norms, default=math.inf),
                "passed": self.passed, "n_samples": len(self.strip_norms)}


def _strip_samples(values, strip, n_sub):
    x = grid_points(values.size)
    xs = strip.lo + strip.length * np.linspace(0.0, 1.0, n_sub + 1)
    return xs, np.interp(xs, x, values)


def strip_norm(y, strip, n_sub=2048):
    values = check_grid_values(y)
    xs, ys = _strip_samples(values, strip, n_sub)
    return math.sqrt(trapezoid(ys**2, strip.length / n_sub))


def strip_floor(y0, strip, T, n_sub=2048):
    """||z(T)||_{L2(strip)} for the heat equation on the strip with zero boundary values."""
    values = check_grid_values(y0, name="y0")
    _, ys = _strip_samples(values, strip, n_sub)
    ys[0] = ys[-1] = 0.0
    # DST-I coefficients for sin(k pi (x - lo) / L): f = sum c_k sin(...), c_k = dst / N
    c = dst(ys[1:-1], type=1) / n_sub
    k = np.arange(1, c.size + 1)
    rate = (k * math.pi / strip.length) ** 2
    return math.sqrt(0.5 * strip.length * float(np.sum(c**2 * np.exp(-2 * rate * T))))


def sample_reaction_control(rng, omega, T, n_points=1025, n_windows=8, bound=10.0):
    """Bounded v (either sign) on ``omega``, piecewise constant on ``n_windows`` time windows."""
    rng = check_random_state(rng)
    x = grid_points(n_points)
    edges = np.linspace(0.0, T, n_windows + 1)
    out = []
    s = (x - omega.lo) / omega.length
    for a, b in zip(edges, edges[1:]):
        coef = rng.uniform(-1.0, 1.0, 4)
        j = np.arange(1, 5)[:, None]
        v = bound * np.clip((coef[:, None] * np.cos(math.pi * j * s)).sum(0), -1.0, 1.0)
        out.append(ReactionWindow(float(a), float(b), GridFunction(v), omega))
    return out


def verify_strip_obstruction(y0, v_samples, strip, omega, T, dt=DEFAULT_DT, tol=STRIP_TOL):
    """Every multiplicative control on ``omega`` leaves at least the strip's own Dirichlet decay."""
    values = check_grid_values(y0, name="y0")
    if strip.intersects(omega):
        raise ValueError("strip and control support overlap")
    if values.min() < 0:
        raise ValueError("y0 must be nonnegative")
    floor = strip_floor(values, strip, T)
    norms = []
    for windows in v_samples:
        traj = evolve_multiplicative(values, windows, T, dt=dt)
        norms.append(strip_norm(traj.final, strip))
    return StripReport(floor, norms, tol)


# ---------------------------------------------------------------------------
# derivative bounds under damping


@dataclass
class DerivativeBoundsReport:
    max_yt: float
    bound_a: float
    left_flux: tuple
    bound_b: float
    right_flux: tuple
    bound_c: float
    y_min: float = 0.0
    y_max: float = 0.0
    tol: float = DERIVATIVE_TOL

    @property
    def checks(self):
        return {
            "a": self.max_yt <= self.bound_a + self.tol,
            "b": self.left_flux[0] >= -self.tol and self.left_flux[1] <= self.bound_b + self.tol,
            "c": self.right_flux[0] >= self.bound_c - self.tol and self.right_flux[1] <= self.tol,
        }

    @property
    def passed(self):
        return all(self.checks.values())

    def to_dict(self):
        return {**self.__dict__, "checks": self.checks, "passed": self.passed}


def _d1(y, h):
    return np.gradient(y, h, edge_order=2)


def check_p1_bounds(y0, v, T, dt=DEFAULT_DT, tol=DERIVATIVE_TOL):
    """Compare time derivative and boundary fluxes of y_t = y_xx + v y against y0-derived bounds.

    (a) y_t <= max (y0'')^+; (b) 0 <= y_x(0, t) <= e max(y0' e^{y0});
    (c) e min(y0' e^{y0}) <= y_x(1, t) <= 0.
    """
    values = check_grid_values(y0, name="y0").copy()
    vv = check_grid_values(v, n_points=values.size, name="v")
    if np.any(vv > 0):
        raise ValueError("v must be nonpositive")
    if values.min() < 0:
        raise ValueError("y0 must be nonnegative")
    values[0] = values[-1] = 0.0
    n = values.size
    h = 1.0 / (n - 1)
    d1 = _d1(values, h)
    d2 = _d1(d1, h)
    bound_a = max(float(d2.max()), 0.0)
    g = d1 * np.exp(values)
    bound_b = math.e * float(g.max())
    bound_c = math.e * float(g.min())
    stepper = CrankNicolsonStepper(n, dt)
    y = values
    prev_t = 0.0
    max_yt = -math.inf
    y_min, y_max = float(values.min()), float(values.max())
    lf = [(-3 * values[0] + 4 * values[1] - values[2]) / (2 * h)]
    rf = [(3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * h)]
    for t, y_new in stepper.run_segment(y, 0.0, T, vv, token="p1"):
        max_yt = max(max_yt, float(np.max((y_new - y) / (t - prev_t))))
        y_min = min(y_min, float(y_new.min()))
        y_max = max(y_max, float(y_new.max()))
        lf.append((-3 * y_new[0] + 4 * y_new[1] - y_new[2]) / (2 * h))
        rf.append((3 * y_new[-1] - 4 * y_new[-2] + y_new[-3]) / (2 * h))
        y, prev_t = y_new, t
    return DerivativeBoundsReport(
        max_yt=max_yt, bound_a=bound_a,
        left_flux=(float(min(lf)), float(max(lf))), bound_b=bound_b,
        right_flux=(float(min(rf)), float(max(rf))), bound_c=bound_c,
        y_min=y_min, y_max=y_max, tol=tol,
    )


def random_smooth_state(rng, n_points=1025, n_bumps=3):
    """Nonnegative C^3 state: a sum of sin^4 bumps with random centres, widths and heights."""
    rng = check_random_state(rng)
    x = grid_points(n_points)
    y = np.zeros(n_points)
    for _ in range(n_bumps):
        width = rng.uniform(0.1, 0.4)
        lo = rng.uniform(0.02, 0.98 - width)
        s = (x - lo) / width
        bump = np.where((s > 0) & (s < 1), np.sin(math.pi * np.clip(s, 0, 1)) ** 4, 0.0)
        y += rng.uniform(0.2, 1.0) * bump
    return y


def random_damping(rng, n_points=1025, max_strength=100.0, n_pieces=4):
    """Nonpositive v, piecewise constant on ``n_pieces`` random cells."""
    rng = check_random_state(rng)
    x = grid_points(n_points)
    cuts = np.sort(rng.uniform(0.0, 1.0, n_pieces - 1))
    vals = -rng.uniform(0.0, max_strength, n_pieces)
    return vals[np.searchsorted(cuts, x)]
