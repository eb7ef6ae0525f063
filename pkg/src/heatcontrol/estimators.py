"""Estimator-style wrappers around the synthesis and verification routines.

Hyperparameters go to ``__init__`` and are exposed through ``get_params``;
``fit`` builds a plan or a certificate and stores it in trailing-underscore
attributes; ``predict``/``transform`` run the fitted plan forward.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .fields import GridFunction, norm_l2
from .obstruction import build_static_adjoint, duality_pairing_static, unreachability_gap
from .solvers import DEFAULT_DT, evolve_multiplicative
from .synthesis import (
    DEFAULT_M_GRID,
    damping_sweep,
    damping_windows,
    synthesize_mobile_additive,
    synthesize_multiplicative_mobile,
)
from .validation import check_grid_values


def _grid(X, name="X"):
    values = check_grid_values(X, name=name)
    if values.min() < 0:
        raise ValueError(f"{name} must be nonnegative")
    return values


class MobileAdditiveSynthesizer(BaseEstimator):
    """Nonnegative additive control on a moving support, fitted to a target profile.

    Parameters
    ----------
    length_l : float
        Width of the control support.
    T : float
        Final time.
    epsilon : float
        L2 error budget.
    """

    def __init__(self, length_l=0.4, T=1.0, epsilon=0.05):
        self.length_l = length_l
        self.T = T
        self.epsilon = epsilon

    def fit(self, X, y=None):
        """Build the plan steering 0 towards the target ``X`` (grid values)."""
        target = _grid(X, "y_d")
        self.plan_ = synthesize_mobile_additive(target, self.length_l, self.T, self.epsilon)
        self.target_ = target
        self.predicted_error_ = self.plan_.predicted_error
        return self

    def predict(self, X=None):
        """Final state of the fitted plan started from ``X`` (zero when omitted)."""
        check_is_fitted(self, "plan_")
        return self.plan_.simulate(None if X is None else _grid(X, "y0")).final_grid().values

    def score(self, X, y=None):
        """Negative L2 distance between the reached state and ``X``."""
        target = _grid(X, "y_d")
        return -norm_l2(GridFunction(self.predict() - target))


class DampingSweep(TransformerMixin, BaseEstimator):
    """Window-by-window damping driving a nonnegative state below ``epsilon / 2``."""

    def __init__(self, length_l=0.4, epsilon=0.1, T_budget=0.5, m_grid=DEFAULT_M_GRID,
                 dt=DEFAULT_DT, enforce_gap_cap=True):
        self.length_l = length_l
        self.epsilon = epsilon
        self.T_budget = T_budget
        self.m_grid = m_grid
        self.dt = dt
        self.enforce_gap_cap = enforce_gap_cap

    def fit(self, X, y=None):
        y0 = _grid(X, "y0")
        self.schedule_, self.trajectory_, self.certificate_ = damping_sweep(
            y0, self.length_l, self.epsilon, self.T_budget, self.m_grid, self.dt,
            enforce_gap_cap=self.enforce_gap_cap,
        )
        self.T_M_ = self.schedule_[-1][1]
        return self

    def transform(self, X):
        """Apply the fitted damping schedule to the state ``X`` and return it at T_M."""
        check_is_fitted(self, "trajectory_")
        y0 = _grid(X, "X")
        windows = damping_windows(self.schedule_, self.length_l)
        if not windows:
            return y0.copy()
        return evolve_multiplicative(y0, windows, self.T_M_, dt=self.dt).final.values


class MultiplicativeMobileSynthesizer(BaseEstimator):
    """Multiplicative control v on a moving support steering ``y0`` near ``y_d``."""

    def __init__(self, length_l=0.4, T=1.0, epsilon=0.1, m_grid=DEFAULT_M_GRID, dt=DEFAULT_DT,
                 floor_rho=1e-8):
        self.length_l = length_l
        self.T = T
        self.epsilon = epsilon
        self.m_grid = m_grid
        self.dt = dt
        self.floor_rho = floor_rho

    def fit(self, X, y):
        """``X`` is the initial state, ``y`` the target, both as grid values."""
        y0 = _grid(X, "y0")
        target = _grid(y, "y_d")
        self.plan_ = synthesize_multiplicative_mobile(
            y0, target, self.length_l, self.T, self.epsilon, m_grid=self.m_grid, dt=self.dt,
            floor_rho=self.floor_rho,
        )
        self.y0_ = y0
        return self

    def predict(self, X=None):
        """Final state of the multiplicative system under the fitted control."""
        check_is_fitted(self, "plan_")
        y0 = self.y0_ if X is None else _grid(X, "y0")
        return self.plan_.simulate(y0, dt=self.dt).final.values

    def score(self, X, y):
        return -norm_l2(GridFunction(self.predict(X) - _grid(y, "y_d")))


class StaticObstructionVerifier(BaseEstimator):
    """Duality certificate for controls confined to (1/m, 1)."""

    def __init__(self, m=2, T=1.0, n_points=1025):
        self.m = m
        self.T = T
        self.n_points = n_points

    def fit(self, X, y=None):
        """``X`` is a list of controls, each a list of SourceWindow."""
        self.adjoint_ = build_static_adjoint(self.m, self.T)
        self.gap_ = unreachability_gap(self.adjoint_)
        self.reports_ = [duality_pairing_static(self.adjoint_, c, self.n_points) for c in X]
        return self

    def predict(self, X=None):
        """Per-sample verdicts of the fitted reports."""
        check_is_fitted(self, "reports_")
        return np.array([r.passed for r in self.reports_])
