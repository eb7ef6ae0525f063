"""Constructive controls: pulses, mobile additive plans, the multiplicative lift and damping.

Everything here is deterministic. Pulse targets are projected onto every grid
mode (``k_max = n_points - 2``), so the spectral stepper is exact on the grid
and the predicted pulse errors are exact as well.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .exceptions import (
    DampingSweepError,
    DegenerateStateError,
    DeltaSearchError,
    SynthesisError,
)
from .fields import (
    GridFunction,
    Interval,
    SineSeries,
    SupportSchedule,
    TargetDecomposition,
    decompose_target,
    evaluate_series,
    grid_points,
    mollify_decomposition,
    norm_l2,
    piece_count,
    project_to_sine,
    trapezoid,
)
from .solvers import (
    DEFAULT_DT,
    AdditiveSolution,
    CrankNicolsonStepper,
    ReactionWindow,
    SourceWindow,
    Trajectory,
    _grid_diagnostics,
    evolve_additive,
    evolve_free,
    evolve_multiplicative,
)
from .validation import check_grid_values, check_length, check_scalar

PLAIN = "plain"
ZERO_TAIL = "zero_tail"
VARIANTS = (PLAIN, ZERO_TAIL)
DEFAULT_M_GRID = (1e2, 1e3, 1e4, 1e5)

_SERIES_CUTOFF = 1e-6


# ---------------------------------------------------------------------------
# pulse error machinery


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("psi is defined for r >= 0")
    return r


def psi(r):
    """((1 - e^{-r}) / r - 1)^2, with the removable singularity at 0 filled in."""
    r = _check_r(r)
    small = r < _SERIES_CUTOFF
    safe = np.where(small, 1.0, r)
    g = np.where(small, -r / 2 + r**2 / 6 - r**3 / 24, -np.expm1(-safe) / safe - 1.0)
    out = g * g
    return float(out) if out.ndim == 0 else out


def psi_hat(r):
    """((e^{-r} - e^{-2r}) / r - 1)^2, the zero-tail analogue of ``psi``."""
    r = _check_r(r)
    small = r < _SERIES_CUTOFF
    safe = np.where(small, 1.0, r)
    g = np.where(
        small,
        -1.5 * r + 7 * r**2 / 6 - 5 * r**3 / 8,
        np.exp(-safe) * (-np.expm1(-safe)) / safe - 1.0,
    )
    out = g * g
    return float(out) if out.ndim == 0 else out


def _psi_for(variant):
    if variant == PLAIN:
        return psi
    if variant == ZERO_TAIL:
        return psi_hat
    raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def predict_pulse_error(target, delta, variant=PLAIN, norm="h01"):
    """Exact final-state error of the pulse of duration ``delta`` steering 0 to ``target``.

    ``norm="h01"`` gives sqrt(2 pi^2 sum a_k^2 k^2 psi(pi^2 k^2 delta));
    ``norm="l2"`` drops the k^2 pi^2 weight.
    """
    delta = check_scalar(delta, "delta", min_val=0.0, include_min=False)
    weight = _psi_for(variant)
    k = target.wavenumbers
    terms = target.coeffs**2 * weight((math.pi * k) ** 2 * delta)
    if norm == "h01":
        return math.sqrt(2.0 * math.pi**2 * float(np.sum(k * k * terms)))
    if norm == "l2":
        return math.sqrt(2.0 * float(np.sum(terms)))
    raise ValueError(f"norm must be 'h01' or 'l2', got {norm!r}")


def choose_delta(target, epsilon, variant=PLAIN, delta_init=0.1, norm="h01", max_halvings=60):
    """First delta in delta_init, delta_init/2, ... whose predicted error is <= epsilon."""
    epsilon = check_scalar(epsilon, "epsilon", min_val=0.0, include_min=False)
    delta = check_scalar(delta_init, "delta_init", min_val=0.0, include_min=False)
    for _ in range(max_halvings + 1):
        if predict_pulse_error(target, delta, variant, norm) <= epsilon:
            return delta
        delta *= 0.5
    raise DeltaSearchError(
        f"no delta >= {delta * 2:.3e} reaches error {epsilon:.3e}; "
        "the budget is below what the mode truncation can resolve"
    )


@dataclass(frozen=True)
class PulseControl:
    """u = profile / delta on a terminal window (plain) or the window before it (zero_tail)."""

    delta: float
    variant: str
    target_series: SineSeries
    support: Interval
    T: float
    profile: Optional[GridFunction] = None

    @property
    def active_interval(self):
        if self.variant == PLAIN:
            return self.T - self.delta, self.T
        return self.T - 2 * self.delta, self.T - self.delta

    @property
    def zero_interval(self):
        if self.variant == ZERO_TAIL:
            return self.T - self.delta, self.T
        return None

    @property
    def amplitude(self):
        return 1.0 / self.delta

    def windows(self):
        t0, t1 = self.active_interval
        prof = self.profile if self.profile is not None else self.target_series
        return [SourceWindow(t0, t1, prof, self.support, amplitude=self.amplitude)]

    def shifted(self, dt):
        return PulseControl(self.delta, self.variant, self.target_series, self.support,
                            self.T + dt, self.profile)


def build_pulse_control(target, support, T, delta, variant=PLAIN, k_max=None):
    """Pulse control injecting ``target`` at time T; ``target`` is a grid profile or series."""
    T = check_scalar(T, "T", min_val=0.0, include_min=False)
    delta = check_scalar(delta, "delta", min_val=0.0, include_min=False)
    _psi_for(variant)
    limit = T if variant == PLAIN else T / 2
    if delta >= limit:
        raise ValueError(f"delta={delta} must be < {'T' if variant == PLAIN else 'T/2'}={limit}")
    if isinstance(target, GridFunction):
        grid = target
        series = project_to_sine(target, k_max or target.n_points - 2)
    else:
        series = target
        grid = None
    check = grid if grid is not None else evaluate_series(series, max(2 * series.k_max + 1, 1025))
    outside = ~support.contains(check.x, closed=True)
    if np.any(np.abs(check.values[outside]) > 1e-12):
        raise ValueError("target profile has mass outside the control support")
    return PulseControl(delta, variant, series, support, T, grid)


# ---------------------------------------------------------------------------
# mobile additive synthesis


@dataclass
class MobilePlan:
    """Nested pulses, one per target piece, plus the support schedule that carries them."""

    decomposition: TargetDecomposition
    deltas: list
    controls: list
    schedule: SupportSchedule
    predicted_error: float
    epsilon: float
    T: float
    t_start: float = 0.0
    n_points: int = 0
    piece_errors: list = field(default_factory=list)
    mollification_errors: list = field(default_factory=list)

    @property
    def k_max(self):
        return self.n_points - 2

    def windows(self):
        out = []
        for c in self.controls:
            if c is not None:
                out.extend(c.windows())
        return sorted(out, key=lambda w: w.t_start)

    def active_intervals(self):
        return [c.active_interval for c in self.controls if c is not None]

    def simulate(self, y0=None, snapshot_times=None):
        """Run the plan through the spectral stepper from ``y0`` (default zero) at ``t_start``."""
        k_max = self.k_max
        if y0 is None:
            a0 = SineSeries.zeros(k_max)
        elif isinstance(y0, SineSeries):
            a0 = y0.resized(k_max)
        else:
            a0 = project_to_sine(GridFunction(check_grid_values(y0)), k_max)
        windows = [_shift_source(w, -self.t_start) for w in self.windows()]
        times = None if snapshot_times is None else np.asarray(snapshot_times) - self.t_start
        traj = evolve_additive(a0, windows, self.T - self.t_start, self.n_points, k_max,
                               snapshot_times=times)
        traj.times = traj.times + self.t_start
        return traj

    def support_violations(self, times=None):
        """Largest |u| outside omega(t) over the given (or default) sample times."""
        x = grid_points(self.n_points)
        worst = 0.0
        for c in self.controls:
            if c is None:
                continue
            t0, t1 = c.active_interval
            ts = times if times is not None else np.linspace(t0, t1, 9)[:-1]
            for t in ts:
                if not t0 <= t < t1:
                    continue
                omega = self.schedule.support_at(t)
                prof = c.profile.values if c.profile is not None else evaluate_series(
                    c.target_series, self.n_points).values
                outside = ~omega.contains(x, closed=True)
                worst = max(worst, float(np.abs(prof[outside]).max(initial=0.0)) * c.amplitude)
        return worst

    def windows_disjoint(self):
        iv = sorted(self.active_intervals())
        return all(a[1] <= b[0] + 1e-15 for a, b in zip(iv, iv[1:]))


def _shift_source(w, dt):
    return SourceWindow(w.t_start + dt, w.t_end + dt, w.profile, w.support, w.amplitude)


def synthesize_mobile_additive(y_d, length_l, T, epsilon, t_start=0.0, delta_init=None,
                               norm="l2"):
    """Build nonnegative pulses on a moving support steering 0 to within ``epsilon`` of ``y_d``.

    Budget split: ``epsilon / 2`` for mollifying the pieces, ``epsilon / (2M)``
    for each pulse. Pieces 1..M-1 use zero-tail pulses with nested durations
    delta_j <= delta_{j-1} / 2, the last piece a plain terminal pulse.
    """
    values = check_grid_values(y_d, name="y_d")
    if values.min() < 0:
        raise ValueError("y_d must be nonnegative")
    length_l = check_length(length_l)
    T = check_scalar(T, "T", min_val=0.0, include_min=False)
    epsilon = check_scalar(epsilon, "epsilon", min_val=0.0, include_min=False)
    horizon = T - t_start
    if horizon <= 0:
        raise ValueError("t_start must be before T")
    n = values.size
    M = piece_count(length_l)
    decomposition = mollify_decomposition(decompose_target(values, length_l), epsilon / 2)
    moll_errors = [norm_l2(m.values - p.values)
                   for (_, p), (_, m) in zip(decomposition.pieces, decomposition.mollified)]
    budget = epsilon / (2 * M)
    delta_prev = None
    deltas, controls, piece_errors = [], [], []
    for j, (support, target) in enumerate(decomposition.mollified, start=1):
        variant = PLAIN if j == M else ZERO_TAIL
        series = project_to_sine(target, n - 2)
        if delta_prev is None:
            start = delta_init if delta_init is not None else horizon / 4
        else:
            start = delta_prev / 2
        if not np.any(target.values):
            delta = start
            controls.append(None)
            piece_errors.append(0.0)
        else:
            try:
                delta = choose_delta(series, budget, variant, start, norm=norm)
            except Exception as exc:
                raise SynthesisError(str(exc), stage=f"piece {j} pulse") from exc
            controls.append(build_pulse_control(target, support, T, delta, variant))
            piece_errors.append(predict_pulse_error(series, delta, variant, norm))
        deltas.append(delta)
        delta_prev = delta
    schedule = mobile_schedule(deltas, length_l, T, t_start)
    return MobilePlan(
        decomposition=decomposition,
        deltas=deltas,
        controls=controls,
        schedule=schedule,
        predicted_error=float(sum(moll_errors) + sum(piece_errors)),
        epsilon=epsilon,
        T=T,
        t_start=t_start,
        n_points=n,
        piece_errors=piece_errors,
        mollification_errors=moll_errors,
    )


def mobile_schedule(deltas, length_l, T, t_start=0.0):
    """Support positions 0, l, 2l, ..., (M-2)l, 1-l switching at T - delta_1, ..., T - delta_{M-1}."""
    M = len(deltas)
    breaks = [t_start] + [T - d for d in deltas[: M - 1]] + [T]
    positions = [min(j * length_l, 1.0 - length_l) for j in range(M - 1)] + [1.0 - length_l]
    if M == 1:
        positions = [0.0]
    return SupportSchedule(length_l, np.array(breaks), np.array(positions))


# ---------------------------------------------------------------------------
# multiplicative lift


@dataclass
class LiftResult:
    """Reaction windows v = u / y on the pulse windows, with the bounds that make v finite."""

    windows: list
    rho_measured: float
    u_sup: float
    v_sup: float
    additive: AdditiveSolution
    t_offset: float
    n_points: int

    @property
    def v_bound(self):
        return self.u_sup / self.rho_measured if self.rho_measured > 0 else math.inf

    def identity_residual(self, n_samples=16):
        """Max relative defect of u = v y over sample times of every active window."""
        x = grid_points(self.n_points)
        worst = 0.0
        for lw in self.windows:
            for t in np.linspace(lw.window.t_start, lw.window.t_end, n_samples + 1)[1:]:
                u = lw.u_values
                y = evaluate_series(self.additive(t - self.t_offset), self.n_points).values
                v = lw.window.values(x, t)
                mask = u > 0
                if np.any(mask):
                    rel = np.abs(v[mask] * y[mask] - u[mask]) / np.abs(u[mask])
                    worst = max(worst, float(rel.max()))
        return worst


@dataclass
class _LiftWindow:
    window: ReactionWindow
    u_values: np.ndarray


def lift_to_multiplicative(u_plan, y0, floor_rho=1e-8, delta_margin=1e-3, samples=33,
                           steps_per_window=200):
    """Turn a nonnegative additive plan into a multiplicative control v = u / y.

    ``y`` is the additive trajectory from ``y0`` at ``u_plan.t_start``. On the
    set where u > 0 the coefficient is u / y; elsewhere it is zero.
    """
    values = check_grid_values(y0, n_points=u_plan.n_points, name="y0")
    if values.min() < 0:
        raise ValueError("y0 must be nonnegative")
    if not np.any(values > 0):
        raise DegenerateStateError("y0 vanishes identically; the multiplicative system cannot leave 0")
    n = u_plan.n_points
    t_off = u_plan.t_start
    a0 = project_to_sine(GridFunction(values), n - 2)
    local = [_shift_source(w, -t_off) for w in u_plan.windows()]
    sol = AdditiveSolution(a0, local, n - 2)
    rho = math.inf
    u_sup = 0.0
    lift_windows = []
    for w_loc, w_abs in zip(local, u_plan.windows()):
        if w_loc.t_start < delta_margin:
            raise DegenerateStateError(
                f"pulse window starts at {w_abs.t_start:.3e}, less than {delta_margin} after the "
                "initial time; positivity has no time to develop"
            )
        prof = w_loc.profile.values if isinstance(w_loc.profile, GridFunction) else \
            evaluate_series(w_loc.profile, n).values
        u = np.clip(prof * w_loc.amplitude, 0.0, None)
        mask = u > 0
        if not np.any(mask):
            continue
        u_sup = max(u_sup, float(u.max()))
        span = w_loc.t_end - w_loc.t_start
        ts = w_loc.t_start + span * np.concatenate([[0.0], np.geomspace(1e-6, 1.0, samples - 1)])
        for t in ts:
            y = evaluate_series(sol(t), n).values
            rho = min(rho, float(y[mask].min()))

        def coefficient(t, u=u, mask=mask):
            y = evaluate_series(sol(t - t_off), n).values
            v = np.zeros(n)
            v[mask] = u[mask] / np.maximum(y[mask], floor_rho)
            return v

        support = w_abs.support
        window = ReactionWindow(w_abs.t_start, w_abs.t_end, coefficient, support,
                                max_dt=span / steps_per_window, implicit_reaction=True)
        lift_windows.append(_LiftWindow(window, u))
    if lift_windows and rho < floor_rho:
        raise DegenerateStateError(
            f"additive state drops to {rho:.3e} < floor {floor_rho:.1e} on the control support"
        )
    v_sup = u_sup / rho if lift_windows else 0.0
    return LiftResult(lift_windows, rho if lift_windows else math.inf, u_sup, v_sup, sol, t_off, n)


# ---------------------------------------------------------------------------
# damping sweep


@dataclass
class DampingCertificate:
    """Measured quantities of the damping sweep and the inequalities they must satisfy."""

    epsilon: float
    piece_count: int
    window_norms: list
    cumulative_norms: list
    final_norm: float
    C1: list
    C2: list
    time_gaps: list
    gap_caps: list
    energies: list
    energy_bounds: list
    shortcut: bool = False

    @property
    def window_threshold(self):
        return self.epsilon**2 / (4 * (2 * self.piece_count - 1))

    def cumulative_threshold(self, j):
        return (2 * j - 1) * self.epsilon**2 / (4 * (2 * self.piece_count - 1))

    def checks(self, tol=1e-6):
        win = all(w <= self.window_threshold + tol for w in self.window_norms)
        cum = all(c <= self.cumulative_threshold(j) + tol
                  for j, c in enumerate(self.cumulative_norms, start=1))
        energy = all(e <= b + tol for e, b in zip(self.energies, self.energy_bounds))
        caps = [g <= c for g, c in zip(self.time_gaps[1:], self.gap_caps[1:])]
        return {
            "window": bool(win),
            "cumulative": bool(cum),
            "final": bool(self.final_norm <= self.epsilon / 2 + tol),
            "energy": bool(energy),
            "gap_cap": bool(all(caps)),
        }

    @property
    def passed(self):
        c = self.checks()
        return c["window"] and c["cumulative"] and c["final"] and c["energy"]

    def to_dict(self):
        out = {k: v for k, v in self.__dict__.items()}
        out["checks"] = self.checks()
        out["window_threshold"] = self.window_threshold
        return out


def damping_constants(y, length_l, h, smoothing_cells=2.0):
    """C1 and C2 of the time-gap cap, from a lightly smoothed copy of the window data.

    C2 = e max(y' e^y) + l max(y'')^+,  C1 = ||y||_inf C2.
    """
    ext = np.concatenate([-y[:0:-1], y, -y[-2::-1]])  # odd reflection keeps y = 0 at the ends
    smooth = gaussian_filter1d(ext, smoothing_cells)[y.size - 1: 2 * y.size - 1]
    d1 = np.gradient(smooth, h, edge_order=2)
    d2 = np.gradient(d1, h, edge_order=2)
    c2 = math.e * float(np.max(d1 * np.exp(smooth))) + length_l * max(float(d2.max()), 0.0)
    return float(np.abs(y).max()) * c2, c2


class _Recorder:
    """Accumulates snapshots and space-time extrema while stepping."""

    def __init__(self, t0, y, max_snapshots):
        self.times = [t0]
        self.states = [GridFunction(y)]
        self.y_min = float(y.min())
        self.y_max = float(y.max())
        self.every = 1
        self.max_snapshots = max_snapshots
        self._count = 0

    def add(self, t, y, force=False):
        self.y_min = min(self.y_min, float(y.min()))
        self.y_max = max(self.y_max, float(y.max()))
        self._count += 1
        if force or self._count % self.every == 0:
            self.times.append(t)
            self.states.append(GridFunction(y))
            if len(self.states) > self.max_snapshots:
                self.times = self.times[::2]
                self.states = self.states[::2]
                self.every *= 2

    def trajectory(self, n_points, K):
        times = np.array(self.times)
        traj = Trajectory(times=times, states=self.states, final=self.states[-1], n_points=n_points)
        diag = _grid_diagnostics(times, self.states)
        diag["min"] = min(diag["min"], self.y_min)
        diag["max"] = max(diag["max"], self.y_max)
        diag["K"] = K
        diag["solver"] = "crank-nicolson"
        traj.diagnostics = diag
        return traj


def _window_region(j, M, length_l):
    lo = (j - 1) * length_l
    hi = 1.0 if j == M else j * length_l
    return Interval(lo, min(hi, 1.0))


def damping_sweep(y0, length_l, epsilon, T_budget, m_grid=DEFAULT_M_GRID, dt=DEFAULT_DT,
                  enforce_gap_cap=True, max_snapshots=512, stepper=None):
    """Drive ||y|| below epsilon/2 by sweeping a damping v = -m across the pieces.

    Window j applies v = -m_j on ((j-1)l, jl) (the last on ((M-1)l, 1)) from
    T_{j-1} to T_j. For each window the first m in ``m_grid`` is kept for which
    some step time T_j satisfies both the window criterion
    int_window y^2 <= eps^2 / (4(2M-1)) and the cumulative criterion
    int_0^{jl} y^2 <= (2j-1) eps^2 / (4(2M-1)); T_j is the earliest such time.

    Returns
    -------
    schedule : list of (m_j, T_j)
    trajectory : Trajectory
    certificate : DampingCertificate
    """
    values = check_grid_values(y0, name="y0").copy()
    if values.min() < 0:
        raise ValueError("y0 must be nonnegative")
    length_l = check_length(length_l)
    epsilon = check_scalar(epsilon, "epsilon", min_val=0.0, include_min=False)
    T_budget = check_scalar(T_budget, "T_budget", min_val=0.0, include_min=False)
    if len(m_grid) == 0:
        raise ValueError("m_grid must be nonempty")
    m_grid = sorted(float(m) for m in m_grid)
    values[0] = values[-1] = 0.0
    n = values.size
    h = 1.0 / (n - 1)
    x = grid_points(n)
    M = piece_count(length_l)
    thr = epsilon**2 / (4 * (2 * M - 1))
    stepper = stepper or CrankNicolsonStepper(n, dt)
    K = max(float(values.max()), 0.0)

    def l2sq(y, lo=0.0, hi=1.0):
        return trapezoid(np.where((x >= lo) & (x <= hi), y, 0.0) ** 2, h)

    if math.sqrt(l2sq(values)) <= epsilon / 2:
        rec = _Recorder(0.0, values, max_snapshots)
        cert = DampingCertificate(
            epsilon=epsilon, piece_count=M,
            window_norms=[l2sq(values, *_bounds(_window_region(j, M, length_l))) for j in range(1, M + 1)],
            cumulative_norms=[l2sq(values, 0.0, _window_region(j, M, length_l).hi) for j in range(1, M + 1)],
            final_norm=math.sqrt(l2sq(values)),
            C1=[0.0] * M, C2=[0.0] * M, time_gaps=[0.0] * M, gap_caps=[math.inf] * M,
            energies=[0.0] * M, energy_bounds=[math.inf] * M, shortcut=True,
        )
        traj = rec.trajectory(n, K)
        traj.diagnostics["reaction_energy"] = []
        return [(0.0, 0.0)] * M, traj, cert

    rec = _Recorder(0.0, values, max_snapshots)
    y = values
    t_prev = 0.0
    schedule, window_norms, cumulative, C1s, C2s, gaps, caps = [], [], [], [], [], [], []
    energies, bounds_e, reaction_energy = [], [], []
    for j in range(1, M + 1):
        region = _window_region(j, M, length_l)
        mask = region.contains(x)
        emask = region.contains(x, closed=True)
        cum_hi = region.hi
        cum_thr = (2 * j - 1) * epsilon**2 / (4 * (2 * M - 1))
        if j > 1:
            c1, c2 = damping_constants(y, length_l, h)
            cap = min(epsilon**2 / (8 * (2 * M - 1) * c1), T_budget - t_prev) if c1 > 0 else T_budget - t_prev
        else:
            c1, c2, cap = 0.0, 0.0, math.inf
        horizon = T_budget - t_prev
        if enforce_gap_cap:
            horizon = min(horizon, cap)
        achieved = {}
        accepted = None
        y_norm_sq = l2sq(y)
        for m in m_grid:
            if horizon <= 0:
                break
            v = np.where(mask, -m, 0.0)
            trial = _Recorder(t_prev, y, max_snapshots)
            energy = 0.0
            prev_e = trapezoid(np.where(emask, y, 0.0) ** 2, h)
            prev_t = t_prev
            best = math.inf
            for t, yy in stepper.run_segment(y, t_prev, t_prev + horizon, v, token=("damp", j, m)):
                e = trapezoid(np.where(emask, yy, 0.0) ** 2, h)
                energy += 0.5 * (e + prev_e) * (t - prev_t)
                prev_e, prev_t = e, t
                g2 = l2sq(yy, region.lo, region.hi)
                c = l2sq(yy, 0.0, cum_hi)
                best = min(best, g2)
                trial.add(t, yy)
                if g2 <= thr and c <= cum_thr:
                    accepted = (m, t, yy, trial, energy, g2, c)
                    break
            achieved[m] = best
            if accepted is not None:
                break
        if accepted is None:
            raise DampingSweepError(
                f"window {j}: no m in {m_grid} reaches int y^2 <= {thr:.3e} within "
                f"{horizon:.3e} time units (best {min(achieved.values(), default=math.nan):.3e})",
                achieved=achieved,
            )
        m, t, yy, trial, energy, g2, c = accepted
        trial.add(t, yy, force=True)
        rec.y_min = min(rec.y_min, trial.y_min)
        rec.y_max = max(rec.y_max, trial.y_max)
        rec.times.extend(trial.times[1:])
        rec.states.extend(trial.states[1:])
        schedule.append((m, t))
        window_norms.append(g2)
        cumulative.append(c)
        C1s.append(c1)
        C2s.append(c2)
        gaps.append(t - t_prev)
        caps.append(cap)
        energies.append(energy)
        bounds_e.append(y_norm_sq / (2 * m))
        reaction_energy.append({"t_start": t_prev, "t_end": t, "energy": energy, "m": m})
        y = yy
        t_prev = t
    _thin(rec, max_snapshots)
    traj = rec.trajectory(n, K)
    traj.diagnostics["reaction_energy"] = reaction_energy
    cert = DampingCertificate(
        epsilon=epsilon, piece_count=M, window_norms=window_norms, cumulative_norms=cumulative,
        final_norm=math.sqrt(l2sq(y)), C1=C1s, C2=C2s, time_gaps=gaps, gap_caps=caps,
        energies=energies, energy_bounds=bounds_e,
    )
    return schedule, traj, cert


def _bounds(iv):
    return iv.lo, iv.hi


def _thin(rec, max_snapshots):
    if len(rec.states) <= max_snapshots:
        return
    idx = np.unique(np.linspace(0, len(rec.states) - 1, max_snapshots).round().astype(int))
    rec.times = [rec.times[i] for i in idx]
    rec.states = [rec.states[i] for i in idx]


def damping_windows(schedule, length_l):
    """Reaction windows -m_j chi_{window j} on [T_{j-1}, T_j) for a damping schedule."""
    M = len(schedule)
    out = []
    t_prev = 0.0
    for j, (m, t) in enumerate(schedule, start=1):
        if t > t_prev and m > 0:
            out.append(ReactionWindow(t_prev, t, -m, _window_region(j, M, length_l),
                                      max_dt=(t - t_prev) / 2))
        t_prev = t
    return out


# ---------------------------------------------------------------------------
# end-to-end multiplicative synthesis


@dataclass
class MultiplicativePlan:
    damping: list
    lift: Optional[LiftResult]
    additive_plan: Optional[MobilePlan]
    schedule: SupportSchedule
    certificate: DampingCertificate
    length_l: float
    T: float
    epsilon: float
    T_M: float
    damping_trajectory: Optional[Trajectory] = None
    residue: Optional[GridFunction] = None

    def reaction_windows(self):
        out = damping_windows(self.damping, self.length_l)
        if self.lift is not None:
            out.extend(lw.window for lw in self.lift.windows)
        return out

    def simulate(self, y0, dt=DEFAULT_DT, max_snapshots=512):
        """Re-simulate the multiplicative system with the assembled v over [0, T]."""
        return evolve_multiplicative(y0, self.reaction_windows(), self.T, dt=dt,
                                     max_snapshots=max_snapshots)

    def free_residue_at_T(self):
        """Free evolution of the damped state from T_M to T."""
        n = self.residue.n_points
        a = project_to_sine(self.residue, n - 2)
        return evaluate_series(evolve_free(a, self.T - self.T_M), n)


def multiplicative_schedule(damping, length_l, additive_plan, T):
    """Positions 0, l, ..., 1-l on the damping windows, then the additive plan's schedule."""
    breaks = [0.0]
    positions = []
    for j, (_, t) in enumerate(damping, start=1):
        if t > breaks[-1]:
            positions.append(min((j - 1) * length_l, 1.0 - length_l))
            breaks.append(t)
    if additive_plan is not None:
        sch = additive_plan.schedule
        for t0, t1, r in sch.segments():
            if t1 > breaks[-1]:
                positions.append(r)
                breaks.append(t1)
    elif breaks[-1] < T:
        positions.append(0.0)
        breaks.append(T)
    if not positions:
        positions, breaks = [0.0], [0.0, T]
    return SupportSchedule(length_l, np.array(breaks), np.array(positions))


def synthesize_multiplicative_mobile(y0, y_d, length_l, T, epsilon, m_grid=DEFAULT_M_GRID,
                                     T_budget=None, dt=DEFAULT_DT, floor_rho=1e-8,
                                     delta_margin=1e-3, enforce_gap_cap=True):
    """Multiplicative mobile control steering y0 to within ``epsilon`` of ``y_d``.

    Stage 1 damps the state to norm <= epsilon/2 by time T_M. Stage 2 builds an
    additive mobile plan on (T_M, T) for the target y_d with budget epsilon/2
    and lifts it to v = u / y.
    """
    y0v = check_grid_values(y0, name="y0")
    ydv = check_grid_values(y_d, n_points=y0v.size, name="y_d")
    if y0v.min() < 0 or ydv.min() < 0:
        raise ValueError("y0 and y_d must be nonnegative")
    if not np.any(y0v > 0):
        raise DegenerateStateError("y0 vanishes identically; only 0 is reachable")
    length_l = check_length(length_l)
    T = check_scalar(T, "T", min_val=0.0, include_min=False)
    epsilon = check_scalar(epsilon, "epsilon", min_val=0.0, include_min=False)
    T_budget = T / 2 if T_budget is None else T_budget
    try:
        damping, traj, cert = damping_sweep(y0v, length_l, epsilon, T_budget, m_grid, dt,
                                            enforce_gap_cap=enforce_gap_cap)
    except DampingSweepError as exc:
        raise SynthesisError(str(exc), stage="damping") from exc
    T_M = damping[-1][1]
    residue = traj.final
    if not np.any(ydv > 0):
        additive, lift = None, None
    else:
        try:
            additive = synthesize_mobile_additive(ydv, length_l, T, epsilon / 2, t_start=T_M)
        except Exception as exc:
            raise SynthesisError(str(exc), stage="additive") from exc
        try:
            lift = lift_to_multiplicative(additive, residue, floor_rho, delta_margin)
        except DegenerateStateError as exc:
            raise SynthesisError(str(exc), stage="lift") from exc
    schedule = multiplicative_schedule(damping, length_l, additive, T)
    return MultiplicativePlan(
        damping=damping, lift=lift, additive_plan=additive, schedule=schedule,
        certificate=cert, length_l=length_l, T=T, epsilon=epsilon, T_M=T_M,
        damping_trajectory=traj, residue=residue,
    )
