"""Forward solvers for the controlled heat equation on (0, 1).

Two backends:

* exact spectral stepping in the sine basis, used whenever the forcing is
  piecewise constant in time with a fixed spatial profile (free decay,
  additive sources, boundary data);
* a Crank-Nicolson finite-difference stepper for reaction terms v(x, t) y,
  with the reaction treated implicitly.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg.lapack import dgttrf, dgttrs

from .fields import (
    DEFAULT_K_MAX,
    DEFAULT_N_POINTS,
    GridFunction,
    Interval,
    SineSeries,
    evaluate_series,
    grid_points,
    norm_l2,
    project_to_sine,
    trapezoid,
)
from .validation import check_grid_values, check_scalar

NEGATIVITY_TOL = 1e-8
DEFAULT_DT = 1e-4
MAX_SNAPSHOTS = 512

__all__ = [
    "NEGATIVITY_TOL",
    "DEFAULT_DT",
    "SourceWindow",
    "ReactionWindow",
    "BoundarySignal",
    "Trajectory",
    "MaximumPrincipleReport",
    "evolve_free",
    "AdditiveSolution",
    "evolve_additive",
    "CrankNicolsonStepper",
    "evolve_multiplicative",
    "evolve_boundary",
    "transposition_bound",
    "maximum_principle_report",
]


def _decay_rates(k_max):
    k = np.arange(1, k_max + 1, dtype=float)
    return (math.pi * k) ** 2


def evolve_free(y0, t):
    """Exact free heat evolution: a_k -> a_k exp(-pi^2 k^2 t)."""
    t = check_scalar(t, "t", min_val=0.0)
    return SineSeries(y0.coeffs * np.exp(-_decay_rates(y0.k_max) * t))


# ---------------------------------------------------------------------------
# data carried by the solvers


@dataclass(frozen=True)
class SourceWindow:
    """Additive source ``amplitude * profile(x)`` switched on over [t_start, t_end)."""

    t_start: float
    t_end: float
    profile: Union[SineSeries, GridFunction]
    support: Interval
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError(f"window needs t_start < t_end, got [{self.t_start}, {self.t_end}]")

    def coefficients(self, k_max):
        prof = self.profile
        if isinstance(prof, GridFunction):
            prof = project_to_sine(prof, k_max)
        return prof.resized(k_max).coeffs * self.amplitude


@dataclass(frozen=True)
class ReactionWindow:
    """Reaction coefficient v acting on ``support`` during [t_start, t_end).

    ``coefficient`` is a scalar (constant on the open support), grid values
    v(x), or a callable ``t -> grid values`` for time-dependent v.
    ``max_dt`` overrides the global time step inside this window.
    ``implicit_reaction`` treats v y fully implicitly at every point, which
    integrates y' = v y exactly when v = u / (y_0 + u t).
    """

    t_start: float
    t_end: float
    coefficient: Union[float, GridFunction, np.ndarray, Callable]
    support: Interval
    max_dt: Optional[float] = None
    implicit_reaction: bool = False

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError(f"window needs t_start < t_end, got [{self.t_start}, {self.t_end}]")

    @property
    def time_dependent(self):
        return callable(self.coefficient)

    def values(self, x, t=None):
        mask = self.support.contains(x)
        c = self.coefficient
        if callable(c):
            v = np.asarray(c(t), dtype=float)
        elif isinstance(c, GridFunction):
            v = c.values
        elif np.ndim(c) == 0:
            v = np.full(x.size, float(c))
        else:
            v = np.asarray(c, dtype=float)
        return np.where(mask, v, 0.0)


@dataclass(frozen=True)
class BoundarySignal:
    """Piecewise-constant Dirichlet data: rows ``(t_start, t_end, u0, u1)``."""

    windows: tuple

    def __post_init__(self):
        rows = tuple(tuple(float(v) for v in w) for w in self.windows)
        prev_end = -np.inf
        for t0, t1, u0, u1 in rows:
            if not (np.isfinite(u0) and np.isfinite(u1)):
                raise ValueError("boundary signal values must be finite")
            if not t0 < t1:
                raise ValueError(f"boundary window needs t_start < t_end, got [{t0}, {t1}]")
            if t0 < prev_end - 1e-15:
                raise ValueError("boundary windows must be ordered and nonoverlapping")
            prev_end = t1
        object.__setattr__(self, "windows", rows)

    @classmethod
    def constant(cls, u0, u1, T):
        return cls(((0.0, T, u0, u1),))

    def sup_norms(self):
        if not self.windows:
            return 0.0, 0.0
        arr = np.array(self.windows)
        return float(np.abs(arr[:, 2]).max()), float(np.abs(arr[:, 3]).max())

    def is_nonnegative(self):
        return all(u0 >= 0 and u1 >= 0 for _, _, u0, u1 in self.windows)


@dataclass
class Trajectory:
    """Snapshots of a run plus space-time diagnostics.

    ``states`` hold SineSeries for spectral runs and GridFunction for
    finite-difference runs; ``final`` is always the exact state at ``times[-1]``.
    """

    times: np.ndarray
    states: list
    final: Union[SineSeries, GridFunction]
    n_points: int
    diagnostics: dict = field(default_factory=dict)

    def grid_states(self):
        out = []
        for s in self.states:
            out.append(evaluate_series(s, self.n_points) if isinstance(s, SineSeries) else s)
        return out

    def final_grid(self):
        if isinstance(self.final, SineSeries):
            return evaluate_series(self.final, self.n_points)
        return self.final


def _grid_diagnostics(times, grids):
    mins = np.array([g.values.min() for g in grids])
    maxs = np.array([g.values.max() for g in grids])
    l2 = np.array([norm_l2(g) for g in grids])
    interior_min = np.array([g.values[1:-1].min() for g in grids])
    return {
        "min": float(mins.min()),
        "max": float(maxs.max()),
        "snapshot_min": mins,
        "snapshot_max": maxs,
        "snapshot_interior_min": interior_min,
        "l2_norms": l2,
    }


def _snapshot_times(T, boundaries, max_snapshots=MAX_SNAPSHOTS, n_uniform=64, n_geometric=8):
    """Uniform coarse times plus geometric refinement after each window boundary."""
    times = set(np.linspace(0.0, T, n_uniform + 1).tolist())
    bounds = sorted(set(b for b in boundaries if 0.0 <= b <= T))
    for i, b in enumerate(bounds):
        times.add(b)
        nxt = bounds[i + 1] if i + 1 < len(bounds) else T
        span = nxt - b
        if span <= 0:
            continue
        for p in range(1, n_geometric + 1):
            times.add(b + span * 2.0 ** (-p))
    times = np.array(sorted(times))
    if times.size > max_snapshots:
        keep = set([0, times.size - 1])
        keep.update(int(i) for i in np.searchsorted(times, bounds))
        rest = [i for i in range(times.size) if i not in keep]
        n_more = max(max_snapshots - len(keep), 0)
        pick = np.linspace(0, len(rest) - 1, n_more).round().astype(int) if n_more else []
        keep.update(rest[i] for i in pick)
        times = times[sorted(i for i in keep if i < times.size)]
    return times


# ---------------------------------------------------------------------------
# spectral backend


class AdditiveSolution:
    """Exact mode-space solution of y_t = y_xx + u, piecewise constant in time.

    Within a window with source coefficients c_k the Duhamel formula gives

        a_k(t) = a_k(t0) e^{-lam_k (t - t0)} + c_k (1 - e^{-lam_k (t - t0)}) / lam_k,

    with lam_k = pi^2 k^2; between windows the state decays freely.
    """

    def __init__(self, y0, windows, k_max=None):
        k_max = k_max or y0.k_max
        self.k_max = k_max
        self.lam = _decay_rates(k_max)
        self.windows = sorted(windows, key=lambda w: w.t_start)
        for a, b in zip(self.windows, self.windows[1:]):
            if b.t_start < a.t_end - 1e-15:
                raise ValueError(
                    f"source windows overlap: [{a.t_start}, {a.t_end}) and [{b.t_start}, {b.t_end})"
                )
        for w in self.windows:
            prof = w.profile
            if isinstance(prof, SineSeries):
                prof_grid = evaluate_series(prof, DEFAULT_N_POINTS).values
            else:
                prof_grid = prof.values
            x = grid_points(prof_grid.size)
            outside = ~w.support.contains(x, closed=True)
            if np.any(np.abs(prof_grid[outside]) > 1e-12):
                raise ValueError("source profile has mass outside its declared support")
        self._coeffs = [w.coefficients(k_max) for w in self.windows]
        # states at each window start and end, computed once
        self._starts, self._ends = [], []
        a = y0.resized(k_max).coeffs.copy()
        self._a0 = a.copy()
        t = 0.0
        for w, c in zip(self.windows, self._coeffs):
            a = a * np.exp(-self.lam * (w.t_start - t))
            self._starts.append(a.copy())
            a = self._duhamel(a, c, w.t_end - w.t_start)
            self._ends.append(a.copy())
            t = w.t_end

    def _duhamel(self, a, c, dt):
        return a * np.exp(-self.lam * dt) + c * (-np.expm1(-self.lam * dt)) / self.lam

    def active_window(self, t):
        """Index of the window with t_start <= t < t_end, or None."""
        for i, w in enumerate(self.windows):
            if w.t_start <= t < w.t_end:
                return i
        return None

    def coeffs_at(self, t):
        a, t_ref = self._a0, 0.0
        for i, w in enumerate(self.windows):
            if t <= w.t_start:
                break
            if t <= w.t_end:
                return self._duhamel(self._starts[i], self._coeffs[i], t - w.t_start)
            a, t_ref = self._ends[i], w.t_end
        return a * np.exp(-self.lam * (t - t_ref))

    def __call__(self, t):
        return SineSeries(self.coeffs_at(t))


def evolve_additive(y0, windows, T, n_points=DEFAULT_N_POINTS, k_max=None,
                    max_snapshots=MAX_SNAPSHOTS, snapshot_times=None):
    """Exact solution of y_t = y_xx + sum_w u_w(x) chi_[t0, t1)(t), Dirichlet data zero.

    Parameters
    ----------
    y0 : SineSeries
    windows : list of SourceWindow
        Pairwise disjoint in time and contained in [0, T].
    T : float
    n_points : int
        Grid used for the diagnostics only.
    """
    T = check_scalar(T, "T", min_val=0.0, include_min=False)
    for w in windows:
        if w.t_start < -1e-15 or w.t_end > T + 1e-12:
            raise ValueError(f"window [{w.t_start}, {w.t_end}) leaves [0, T={T}]")
    sol = AdditiveSolution(y0, windows, k_max)
    if snapshot_times is None:
        bounds = [0.0] + [b for w in sol.windows for b in (w.t_start, w.t_end)]
        snapshot_times = _snapshot_times(T, bounds, max_snapshots)
    times = np.asarray(snapshot_times, dtype=float)
    states = [sol(t) for t in times]
    final = sol(T)
    states[-1] = final
    traj = Trajectory(times=times, states=states, final=final, n_points=n_points)
    traj.diagnostics = _grid_diagnostics(times, traj.grid_states())
    traj.diagnostics["solver"] = "spectral"
    traj.diagnostics["has_source"] = bool(sol.windows)
    traj.diagnostics["K"] = max(float(evaluate_series(y0, n_points).values.max()), 0.0)
    traj.solution = sol
    return traj


# ---------------------------------------------------------------------------
# finite-difference backend


def _step_grid(t0, t1, dt, first_fraction, ratio):
    """Step times on [t0, t1]: graded from ``first_fraction * dt`` up to ``dt``."""
    length = t1 - t0
    h = min(dt, length) * first_fraction
    times = [t0]
    t = t0
    while t < t1:
        h = min(h, dt)
        nxt = t + h
        if t1 - nxt < 0.5 * h:
            nxt = t1
        times.append(nxt)
        t = nxt
        h *= ratio
    return np.array(times)


class CrankNicolsonStepper:
    """Theta-scheme for y_t = y_xx + v(x, t) y on a uniform grid, y = 0 at x = 0, 1.

    Diffusion is Crank-Nicolson (theta = 1/2). The reaction term sits in the
    implicit operator with v taken at the new time level: Crank-Nicolson
    weighting where |v| dt <= 1, fully implicit where it is stiff. The first
    ``startup_steps`` steps of every segment use implicit Euler diffusion to
    damp stiff modes excited by data or coefficient discontinuities; steps
    grow geometrically from ``first_fraction * dt`` to ``dt``.
    """

    def __init__(self, n_points, dt=DEFAULT_DT, startup_steps=2, first_fraction=1e-2, ratio=1.5):
        if n_points < 3:
            raise ValueError(f"n_points must be >= 3, got {n_points}")
        self.n_points = n_points
        self.h = 1.0 / (n_points - 1)
        self.x = grid_points(n_points)
        self.dt = check_scalar(dt, "dt", min_val=0.0, include_min=False)
        self.startup_steps = startup_steps
        self.first_fraction = first_fraction
        self.ratio = ratio
        self._cache_key = None
        self._factor = None
        self._implicit_reaction = False

    def _reaction_theta(self, dt, theta, v_int):
        # Crank-Nicolson for the reaction unless it is stiff at this step
        if theta == 1.0 or self._implicit_reaction:
            return np.ones_like(v_int)
        return np.where(np.abs(v_int) * dt <= 1.0, 0.5, 1.0)

    def _lhs(self, dt, theta, v_int):
        n = v_int.size
        r = theta * dt / self.h**2
        tr = self._reaction_theta(dt, theta, v_int)
        diag = 1.0 + 2.0 * r - tr * dt * v_int
        off = np.full(n - 1, -r)
        return dgttrf(off.copy(), diag, off.copy())

    def _rhs(self, y_int, dt, theta, v_int):
        r = (1.0 - theta) * dt / self.h**2
        out = y_int.copy()
        if r != 0.0:
            lap = -2.0 * y_int
            lap[1:] += y_int[:-1]
            lap[:-1] += y_int[1:]
            out += r * lap
        tr = self._reaction_theta(dt, theta, v_int)
        out += (1.0 - tr) * dt * v_int * y_int
        return out

    def step(self, y, dt, v_new=None, theta=0.5, cache_token=None):
        """Advance grid values ``y`` by one step; ``v_new`` is v at the new time."""
        y_int = y[1:-1]
        v_int = np.zeros(y_int.size) if v_new is None else v_new[1:-1]
        key = (dt, theta, cache_token) if cache_token is not None else None
        if key is None or key != self._cache_key:
            self._factor = self._lhs(dt, theta, v_int)
            self._cache_key = key
        dl, d, du, du2, ipiv, info = self._factor
        if info != 0:
            raise np.linalg.LinAlgError(f"tridiagonal factorization failed (info={info})")
        rhs = self._rhs(y_int, dt, theta, v_int)
        sol, info = dgttrs(dl, d, du, du2, ipiv, rhs)
        out = np.zeros_like(y)
        out[1:-1] = sol
        return out

    def segment_times(self, t0, t1, max_dt=None):
        dt = self.dt if max_dt is None else min(self.dt, max_dt)
        return _step_grid(t0, t1, dt, self.first_fraction, self.ratio)

    def run_segment(self, y, t0, t1, coefficient=None, max_dt=None, token=None,
                    implicit_reaction=False):
        """Yield ``(t, y)`` after every step on [t0, t1].

        ``coefficient`` is None (v = 0), an array v(x), or a callable t -> v(x).
        """
        times = self.segment_times(t0, t1, max_dt)
        const_v = None if callable(coefficient) else coefficient
        self._implicit_reaction = implicit_reaction
        if token is not None:
            token = (token, implicit_reaction)
        for i in range(1, times.size):
            dt = times[i] - times[i - 1]
            theta = 1.0 if i <= self.startup_steps else 0.5
            if callable(coefficient):
                v = coefficient(times[i])
                y = self.step(y, dt, v, theta)
            else:
                y = self.step(y, dt, const_v, theta, cache_token=token)
            yield times[i], y


def _segments(windows, T):
    """Cover [0, T] with the reaction windows and the v = 0 gaps between them."""
    segs = []
    t = 0.0
    for w in sorted(windows, key=lambda w: w.t_start):
        if w.t_start < t - 1e-15:
            raise ValueError("reaction windows overlap")
        if w.t_start > t:
            segs.append((t, w.t_start, None))
        segs.append((w.t_start, w.t_end, w))
        t = w.t_end
    if t < T:
        segs.append((t, T, None))
    return segs


def evolve_multiplicative(y0, windows, T, dt=DEFAULT_DT, negativity_tol=NEGATIVITY_TOL,
                          max_snapshots=MAX_SNAPSHOTS, stepper=None, record_every=None):
    """Crank-Nicolson solution of y_t = y_xx + v(x, t) chi_omega(t)(x) y.

    Parameters
    ----------
    y0 : GridFunction or array
        Dirichlet-compatible initial state.
    windows : list of ReactionWindow
    T : float
    dt : float
        Maximum time step; every window must be longer than its effective step.

    The returned trajectory's diagnostics include the space-time min/max, the
    MP-ii constant ``K = max(y0)^+``, per-window reaction energies
    ``int int_{support} y^2 dx dt`` and a negativity flag.
    """
    values = check_grid_values(y0, name="y0").copy()
    T = check_scalar(T, "T", min_val=0.0, include_min=False)
    dt = check_scalar(dt, "dt", min_val=0.0, include_min=False)
    values[0] = values[-1] = 0.0
    n = values.size
    stepper = stepper or CrankNicolsonStepper(n, dt)
    for w in windows:
        eff = dt if w.max_dt is None else min(dt, w.max_dt)
        if eff >= w.t_end - w.t_start:
            raise ValueError(
                f"time step {eff} does not resolve window [{w.t_start}, {w.t_end})"
            )
        if w.t_end > T + 1e-12 or w.t_start < 0:
            raise ValueError(f"window [{w.t_start}, {w.t_end}) leaves [0, T={T}]")

    x = stepper.x
    h = stepper.h
    segs = _segments(windows, T)
    bounds = [s[0] for s in segs] + [T]
    snap_t = _snapshot_times(T, bounds, max_snapshots)
    snap_states = [GridFunction(values)]
    snap_times = [0.0]
    next_snap = 1

    y = values
    y_min, y_max = float(y.min()), float(y.max())
    interior_min_t = []
    energies = []
    nonpositive_v = True
    n_steps = 0
    for si, (t0, t1, w) in enumerate(segs):
        if w is None:
            coef, mask, max_dt, implicit = None, None, None, False
        else:
            implicit = w.implicit_reaction
            mask = w.support.contains(x, closed=True)
            max_dt = w.max_dt
            if w.time_dependent:
                coef = lambda t, w=w: w.values(x, t)
                v_probe = coef(t1)
            else:
                coef = w.values(x)
                v_probe = coef
            if np.any(v_probe > 0):
                nonpositive_v = False
        energy = 0.0
        prev_t, prev_e = t0, (trapezoid(np.where(mask, y, 0.0) ** 2, h) if mask is not None else 0.0)
        for t, y in stepper.run_segment(y, t0, t1, coef, max_dt, token=si,
                                         implicit_reaction=implicit):
            n_steps += 1
            y_min = min(y_min, float(y.min()))
            y_max = max(y_max, float(y.max()))
            if mask is not None:
                e = trapezoid(np.where(mask, y, 0.0) ** 2, h)
                energy += 0.5 * (e + prev_e) * (t - prev_t)
                prev_e = e
            prev_t = t
            while next_snap < snap_t.size and snap_t[next_snap] <= t + 1e-15:
                snap_states.append(GridFunction(y))
                snap_times.append(t)
                interior_min_t.append((t, float(y[1:-1].min())))
                next_snap += 1
        if w is not None:
            energies.append({"t_start": t0, "t_end": t1, "energy": energy})
    if snap_times[-1] < T:
        snap_states.append(GridFunction(y))
        snap_times.append(T)
    final = GridFunction(y)
    snap_states[-1] = final
    traj = Trajectory(times=np.array(snap_times), states=snap_states, final=final, n_points=n)
    diag = _grid_diagnostics(traj.times, snap_states)
    diag["min"] = min(diag["min"], y_min)
    diag["max"] = max(diag["max"], y_max)
    diag["K"] = max(float(values.max()), 0.0)
    diag["reaction_energy"] = energies
    diag["n_steps"] = n_steps
    diag["solver"] = "crank-nicolson"
    flagged = nonpositive_v and values.min() >= 0 and diag["min"] < -negativity_tol
    diag["negativity_violation"] = bool(flagged)
    if flagged:
        warnings.warn(
            f"maximum principle violated: min {diag['min']:.3e} < -{negativity_tol:g} "
            "with y0 >= 0 and v <= 0",
            RuntimeWarning,
            stacklevel=2,
        )
    traj.diagnostics = diag
    return traj


# ---------------------------------------------------------------------------
# boundary control by transposition


def _boundary_modes(signal, T, k_max):
    k = np.arange(1, k_max + 1, dtype=float)
    lam = (math.pi * k) ** 2
    sign = np.where(k % 2 == 1, 1.0, -1.0)
    b = np.zeros(k_max)
    for t0, t1, u0, u1 in signal.windows:
        s0, s1 = max(t0, 0.0), min(t1, T)
        if s1 <= s0:
            continue
        # int_{s0}^{s1} e^{-lam (T - s)} ds
        integral = (np.exp(-lam * (T - s1)) - np.exp(-lam * (T - s0))) / lam
        b += (u0 + sign * u1) * integral
    return math.sqrt(2.0) * k * math.pi * b


def evolve_boundary(signal, T, k_max=DEFAULT_K_MAX):
    """State at T of the heat equation with zero initial data and Dirichlet data (u0, u1).

    Uses the transposition series y = sum_k b_k(T) sqrt(2) sin(k pi x); the
    result is returned in the package convention a_k = b_k / sqrt(2).
    """
    T = check_scalar(T, "T", min_val=0.0, include_min=False)
    for _, _, u0, u1 in signal.windows:
        if not (np.isfinite(u0) and np.isfinite(u1)):
            raise ValueError("boundary signal values must be finite")
    b = _boundary_modes(signal, T, k_max)
    return SineSeries(b / math.sqrt(2.0))


def transposition_bound(signal, T, k_max=DEFAULT_K_MAX):
    """Return ``(sum b_k^2, C sum 1/k^2)`` over the truncated modes, C = 2/pi^2 (|u0| + |u1|)^2."""
    b = _boundary_modes(signal, T, k_max)
    n0, n1 = signal.sup_norms()
    k = np.arange(1, k_max + 1, dtype=float)
    const = 2.0 / math.pi**2 * (n0 + n1) ** 2
    return float(np.sum(b * b)), float(const * np.sum(1.0 / k**2))


# ---------------------------------------------------------------------------
# maximum principle checks


@dataclass
class MaximumPrincipleReport:
    min_value: float
    max_value: float
    K: Optional[float]
    nonnegative: Optional[bool]
    bounded_by_K: Optional[bool]
    strictly_positive: Optional[bool]
    interior_min_after_start: Optional[float]
    negativity_tol: float

    @property
    def passed(self):
        return all(v is not False for v in (self.nonnegative, self.bounded_by_K, self.strictly_positive))

    def to_dict(self):
        return dict(self.__dict__, passed=self.passed)


def maximum_principle_report(traj, y0_nonnegative=True, u_nonnegative=True, v_nonpositive=False,
                             boundary_values=(0.0, 0.0), y0_nonzero=None,
                             negativity_tol=NEGATIVITY_TOL, bound_tol=1e-8):
    """Check the weak and strong maximum principles on a computed trajectory.

    (i) min >= -tol when the data are nonnegative; (ii) max <= K + tol when
    there is no additive source and v <= 0; (iii) interior strict positivity
    for t > 0 when additionally y0 is not identically zero. Items whose
    hypotheses do not hold are reported as None.
    """
    diag = traj.diagnostics
    y_min, y_max = diag["min"], diag["max"]
    b0, b1 = boundary_values
    nonneg = None
    if y0_nonnegative and u_nonnegative and b0 >= 0 and b1 >= 0:
        nonneg = bool(y_min >= -negativity_tol)
    K = None
    bounded = None
    if v_nonpositive and not diag.get("has_source", False):
        K = max(diag["K"], max(b0, 0.0), max(b1, 0.0))
        bounded = bool(y_max <= K + bound_tol)
    strict = None
    interior_min = None
    if y0_nonzero is None:
        y0_nonzero = bool(diag["snapshot_max"][0] > 0)
    if y0_nonnegative and u_nonnegative and v_nonpositive and y0_nonzero:
        later = traj.times > 0
        interior_min = float(diag["snapshot_interior_min"][later].min()) if np.any(later) else None
        strict = interior_min is not None and interior_min > 0
    return MaximumPrincipleReport(
        min_value=y_min,
        max_value=y_max,
        K=K,
        nonnegative=nonneg,
        bounded_by_K=bounded,
        strictly_positive=strict,
        interior_min_after_start=interior_min,
        negativity_tol=negativity_tol,
    )
