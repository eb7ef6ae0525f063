"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np


def check_finite_array(values, name="values", ndim=1):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_scalar(x, name, *, min_val=None, max_val=None, include_min=True, include_max=True):
    """Validate a real scalar against an (optionally open) interval and return it as float."""
    if isinstance(x, bool) or not isinstance(x, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(x).__name__}")
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x}")
    if min_val is not None:
        if x < min_val or (not include_min and x == min_val):
            op = ">=" if include_min else ">"
            raise ValueError(f"{name} must be {op} {min_val}, got {x}")
    if max_val is not None:
        if x > max_val or (not include_max and x == max_val):
            op = "<=" if include_max else "<"
            raise ValueError(f"{name} must be {op} {max_val}, got {x}")
    return x


def check_length(length_l):
    return check_scalar(length_l, "length_l", min_val=0.0, max_val=1.0,
                        include_min=False, include_max=True)


def check_nonnegative(values, name="y", atol=0.0):
    arr = check_finite_array(values, name)
    if arr.min(initial=0.0) < -atol:
        raise ValueError(f"{name} must be nonnegative (min {arr.min():.3e})")
    return arr


def check_grid_values(y, n_points=None, name="y"):
    """Coerce a GridFunction or a 1-D array into a float array of grid values."""
    from .fields import GridFunction

    if isinstance(y, GridFunction):
        arr = y.values
    else:
        arr = check_finite_array(y, name)
    if arr.size < 3:
        raise ValueError(f"{name} needs at least 3 grid points, got {arr.size}")
    if n_points is not None and arr.size != n_points:
        raise ValueError(f"{name} has {arr.size} points, expected {n_points}")
    return arr


def check_random_state(seed):
    """Return a numpy Generator (PCG64) for ``seed``; Generators pass through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
