"""Spatial representations on [0, 1]: uniform grid values and sine series.

The sine-series convention throughout the package is

    y(x) = 2 * sum_k a_k sin(k pi x),    a_k = int_0^1 y(s) sin(k pi s) ds,

so that ``||y||_{L2}^2 = 2 sum a_k^2`` and ``||y_x||_{L2}^2 = 2 pi^2 sum k^2 a_k^2``.

Grid <-> series transforms use the type-I discrete sine transform, which is the
composite trapezoid rule for the coefficient integrals (the sine factor kills
the endpoint terms).
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .exceptions import MollificationError
from .validation import check_finite_array, check_length, check_scalar

DEFAULT_N_POINTS = 1025
DEFAULT_K_MAX = 256

__all__ = [
    "DEFAULT_N_POINTS",
    "DEFAULT_K_MAX",
    "GridFunction",
    "SineSeries",
    "Interval",
    "SupportSchedule",
    "TargetDecomposition",
    "grid_points",
    "project_to_sine",
    "evaluate_series",
    "norm_l2",
    "norm_h01",
    "piece_count",
    "decompose_target",
    "smoothstep",
    "mollify_piece",
    "mollify_decomposition",
]


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def grid_points(n_points):
    """Uniform grid x_i = i / (n_points - 1), endpoints included."""
    if n_points < 3:
        raise ValueError(f"n_points must be >= 3, got {n_points}")
    return np.linspace(0.0, 1.0, n_points)


@dataclass(frozen=True)
class GridFunction:
    """Values of a function of x on the uniform grid over [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        arr = check_finite_array(self.values, "values")
        if arr.size < 3:
            raise ValueError(f"GridFunction needs n_points >= 3, got {arr.size}")
        object.__setattr__(self, "values", _frozen(arr))

    @classmethod
    def from_callable(cls, func, n_points=DEFAULT_N_POINTS):
        return cls(func(grid_points(n_points)))

    @classmethod
    def zeros(cls, n_points=DEFAULT_N_POINTS):
        return cls(np.zeros(n_points))

    @property
    def n_points(self):
        return self.values.size

    @property
    def x(self):
        return grid_points(self.n_points)

    @property
    def h(self):
        return 1.0 / (self.n_points - 1)

    def is_dirichlet(self, atol=0.0):
        return abs(self.values[0]) <= atol and abs(self.values[-1]) <= atol

    def __add__(self, other):
        return GridFunction(self.values + _values(other))

    def __sub__(self, other):
        return GridFunction(self.values - _values(other))

    def __mul__(self, scalar):
        return GridFunction(self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class SineSeries:
    """Coefficients a_1..a_K of y(x) = 2 sum a_k sin(k pi x)."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = check_finite_array(self.coeffs, "coeffs")
        if arr.size < 1:
            raise ValueError("SineSeries needs k_max >= 1")
        object.__setattr__(self, "coeffs", _frozen(arr))

    @classmethod
    def zeros(cls, k_max=DEFAULT_K_MAX):
        return cls(np.zeros(k_max))

    @property
    def k_max(self):
        return self.coeffs.size

    @property
    def wavenumbers(self):
        return np.arange(1, self.k_max + 1, dtype=float)

    def resized(self, k_max):
        """Truncate or zero-pad to ``k_max`` modes."""
        out = np.zeros(k_max)
        k = min(k_max, self.k_max)
        out[:k] = self.coeffs[:k]
        return SineSeries(out)

    def __add__(self, other):
        k = max(self.k_max, other.k_max)
        return SineSeries(self.resized(k).coeffs + other.resized(k).coeffs)

    def __sub__(self, other):
        k = max(self.k_max, other.k_max)
        return SineSeries(self.resized(k).coeffs - other.resized(k).coeffs)

    def __mul__(self, scalar):
        return SineSeries(self.coeffs * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError(f"Interval requires 0 <= lo < hi <= 1, got ({lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self):
        return self.hi - self.lo

    def contains(self, x, closed=False):
        x = np.asarray(x)
        if closed:
            return (x >= self.lo) & (x <= self.hi)
        return (x > self.lo) & (x < self.hi)

    def indicator(self, x):
        return self.contains(x).astype(float)

    def intersects(self, other):
        return self.lo < other.hi and other.lo < self.hi

    def is_inside(self, other, atol=1e-12):
        return self.lo >= other.lo - atol and self.hi <= other.hi + atol


@dataclass(frozen=True)
class SupportSchedule:
    """Piecewise-constant position r(t) of a support (r(t), r(t) + l).

    ``breakpoints`` has one more entry than ``positions``; segment ``i``
    covers ``[breakpoints[i], breakpoints[i+1])``.
    """

    length_l: float
    breakpoints: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        length_l = check_length(self.length_l)
        bp = check_finite_array(self.breakpoints, "breakpoints")
        pos = check_finite_array(self.positions, "positions")
        if bp.size != pos.size + 1:
            raise ValueError("breakpoints must have exactly one more entry than positions")
        if np.any(np.diff(bp) < 0):
            raise ValueError("breakpoints must be nondecreasing")
        if np.any(pos < -1e-12) or np.any(pos > 1.0 - length_l + 1e-12):
            raise ValueError(f"positions must lie in [0, 1 - l] = [0, {1 - length_l}]")
        object.__setattr__(self, "length_l", length_l)
        object.__setattr__(self, "breakpoints", _frozen(bp))
        object.__setattr__(self, "positions", _frozen(np.clip(pos, 0.0, 1.0 - length_l)))

    @property
    def T(self):
        return float(self.breakpoints[-1])

    def position_at(self, t):
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        idx = min(max(idx, 0), self.positions.size - 1)
        return float(self.positions[idx])

    def support_at(self, t):
        r = self.position_at(t)
        return Interval(r, min(r + self.length_l, 1.0))

    def segments(self):
        for i, r in enumerate(self.positions):
            yield float(self.breakpoints[i]), float(self.breakpoints[i + 1]), float(r)

    def to_dict(self):
        return {
            "length_l": self.length_l,
            "breakpoints": self.breakpoints.tolist(),
            "positions": self.positions.tolist(),
        }


@dataclass(frozen=True)
class TargetDecomposition:
    pieces: list
    mollified: list = field(default_factory=list)

    @property
    def piece_count(self):
        return len(self.pieces)


def _values(f):
    if isinstance(f, GridFunction):
        return f.values
    return np.asarray(f, dtype=float)


def project_to_sine(f, k_max=DEFAULT_K_MAX):
    """Sine coefficients a_k = int f(s) sin(k pi s) ds by the trapezoid rule.

    Parameters
    ----------
    f : GridFunction or array_like
        Values on the uniform grid.
    k_max : int
        Number of modes; must be below the grid Nyquist limit ``n_points - 1``.
    """
    values = check_finite_array(_values(f), "f")
    n_int = values.size - 1
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if k_max >= n_int:
        raise ValueError(
            f"k_max={k_max} aliases on a {values.size}-point grid; need k_max < {n_int}"
        )
    interior = values[1:-1]
    coeffs = scipy.fft.dst(interior, type=1) / (2.0 * n_int)
    return SineSeries(coeffs[:k_max])


def evaluate_series(s, n_points=DEFAULT_N_POINTS):
    """Grid values of 2 sum a_k sin(k pi x_i); endpoints are exactly zero."""
    if n_points < 3:
        raise ValueError(f"n_points must be >= 3, got {n_points}")
    n_int = n_points - 1
    coeffs = s.coeffs
    if coeffs.size > n_int - 1:
        # modes beyond the grid alias; evaluate them directly
        x = grid_points(n_points)
        k = s.wavenumbers
        out = 2.0 * np.sin(np.pi * np.outer(x, k)) @ coeffs
        out[0] = out[-1] = 0.0
        return GridFunction(out)
    padded = np.zeros(n_int - 1)
    padded[: coeffs.size] = coeffs
    out = np.zeros(n_points)
    out[1:-1] = scipy.fft.dst(padded, type=1)
    return GridFunction(out)


def trapezoid(values, h):
    values = np.asarray(values, dtype=float)
    return h * (values.sum() - 0.5 * (values[0] + values[-1]))


def norm_l2(f):
    """L2(0, 1) norm of a SineSeries (exact Parseval) or a grid function (trapezoid)."""
    if isinstance(f, SineSeries):
        return math.sqrt(2.0 * float(np.dot(f.coeffs, f.coeffs)))
    values = _values(f)
    return math.sqrt(max(trapezoid(values * values, 1.0 / (values.size - 1)), 0.0))


def norm_h01(s):
    """H^1_0 norm (int phi_x^2)^(1/2) of a sine series."""
    k = s.wavenumbers
    return math.sqrt(2.0 * math.pi**2 * float(np.sum(k * k * s.coeffs**2)))


def _snap(q, tol=1e-9):
    r = np.round(q)
    return np.where(np.abs(q - r) < tol, r, q)


def piece_count(length_l):
    """Smallest natural M with M * l >= 1."""
    length_l = check_length(length_l)
    return int(np.ceil(_snap(1.0 / length_l)))


def decompose_target(y_d, length_l):
    """Split ``y_d`` into M = ceil(1/l) pieces on consecutive length-l cells.

    Grid points sitting exactly on a cut j*l go to the lower piece, so the
    pieces sum back to ``y_d`` exactly and each vanishes off its support.
    """
    values = check_finite_array(_values(y_d), "y_d")
    if values.min() < 0:
        raise ValueError(f"y_d must be nonnegative (min {values.min():.3e})")
    length_l = check_length(length_l)
    M = piece_count(length_l)
    x = grid_points(values.size)
    # compare against the cut values themselves so every point lies in its piece's support
    cuts = np.array([j * length_l for j in range(1, M)])
    idx = np.searchsorted(cuts, x, side="left") + 1
    pieces = []
    for j in range(1, M + 1):
        lo = (j - 1) * length_l
        hi = 1.0 if j == M else min(j * length_l, 1.0)
        piece = np.where(idx == j, values, 0.0)
        pieces.append((Interval(lo, hi), GridFunction(piece)))
    return TargetDecomposition(pieces=pieces)


def smoothstep(s):
    """C1 ramp 3s^2 - 2s^3 clipped to [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


# fraction of the margin held at exactly zero before the ramp starts
_ZERO_BAND = 0.25


def cutoff(x, support, margin):
    """Nonnegative C1 cutoff: 0 outside (lo + margin/4, hi - margin/4), 1 on [lo + margin, hi - margin]."""
    lo, hi = support.lo, support.hi
    z = _ZERO_BAND * margin
    ramp = margin - z
    left = smoothstep((x - lo - z) / ramp)
    right = smoothstep((hi - z - x) / ramp)
    return left * right


def mollify_piece(piece, support, margin, tol, max_retries=30, min_cells=2):
    """Cut a nonnegative piece off smoothly inside its support.

    The margin is halved until the L2 distance to the input is at most
    ``tol``. Fails once the ramp would span fewer than ``min_cells`` grid cells.

    Returns
    -------
    result : GridFunction
    margin : float
        The margin actually used.
    distance : float
        ``||result - piece||_{L2}`` (trapezoid on the grid).
    """
    values = check_finite_array(_values(piece), "piece")
    if values.min() < 0:
        raise ValueError("piece must be nonnegative")
    x = grid_points(values.size)
    outside = ~support.contains(x, closed=True)
    if np.any(values[outside] != 0.0):
        raise ValueError("piece does not vanish outside its support")
    margin = check_scalar(margin, "margin", min_val=0.0, include_min=False,
                          max_val=support.length / 4, include_max=False)
    tol = check_scalar(tol, "tol", min_val=0.0)
    h = 1.0 / (values.size - 1)
    if not np.any(values):
        return GridFunction(np.zeros_like(values)), margin, 0.0
    for _ in range(max_retries + 1):
        if (1.0 - _ZERO_BAND) * margin < min_cells * h:
            break
        result = values * cutoff(x, support, margin)
        distance = norm_l2(result - values)
        if distance <= tol:
            return GridFunction(result), margin, distance
        margin *= 0.5
    raise MollificationError(
        f"cannot reach L2 tolerance {tol:.3e} on support ({support.lo}, {support.hi}) "
        f"with a {values.size}-point grid; refine the grid"
    )


def mollify_decomposition(decomposition, total_tol, margin=None):
    """Mollify every piece, splitting ``total_tol`` evenly over the nonzero pieces."""
    nonzero = [p for _, p in decomposition.pieces if np.any(p.values)]
    per_piece = total_tol / max(len(nonzero), 1)
    mollified = []
    for support, piece in decomposition.pieces:
        m0 = margin if margin is not None else 0.999 * support.length / 4
        result, used, _ = mollify_piece(piece, support, m0, per_piece)
        z = _ZERO_BAND * used
        inner = Interval(support.lo + z, support.hi - z)
        mollified.append((inner, result))
    return TargetDecomposition(pieces=decomposition.pieces, mollified=mollified)
