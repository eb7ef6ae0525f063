import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from heatcontrol.estimators import (
    DampingSweep,
    MobileAdditiveSynthesizer,
    MultiplicativeMobileSynthesizer,
    StaticObstructionVerifier,
)
from heatcontrol.fields import GridFunction, Interval, grid_points, norm_l2
from heatcontrol.solvers import SourceWindow

from conftest import sine_grid

ESTIMATORS = [MobileAdditiveSynthesizer, DampingSweep, MultiplicativeMobileSynthesizer, StaticObstructionVerifier]


@pytest.mark.parametrize("cls", ESTIMATORS)
def test_params_round_trip_through_clone(cls):
    est = cls()
    params = est.get_params()
    assert clone(est).get_params() == params
    assert "fit" in dir(est)


@pytest.mark.parametrize("cls, method", [
    (MobileAdditiveSynthesizer, "predict"),
    (DampingSweep, "transform"),
    (MultiplicativeMobileSynthesizer, "predict"),
    (StaticObstructionVerifier, "predict"),
])
def test_unfitted_estimators_raise(cls, method):
    with pytest.raises(NotFittedError):
        getattr(cls(), method)(sine_grid(1, 65))


def test_mobile_additive_fit_predict():
    x = grid_points(4097)
    target = x * (1 - x)
    est = MobileAdditiveSynthesizer(length_l=0.4, T=1.0, epsilon=0.05).fit(target)
    assert est.predict().shape == target.shape
    assert est.score(target) >= -0.05
    assert est.set_params(epsilon=0.1).epsilon == 0.1


def test_mobile_additive_rejects_negative_target():
    with pytest.raises(ValueError):
        MobileAdditiveSynthesizer().fit(-sine_grid(1, 65))


def test_damping_transform_is_small():
    y0 = sine_grid(1, 1025)
    est = DampingSweep(length_l=0.4, epsilon=0.1).fit(y0)
    out = est.transform(y0)
    assert norm_l2(out) <= 0.05
    assert norm_l2(out - est.trajectory_.final.values) <= 1e-3
    assert est.certificate_.passed
    # smaller data is damped at least as much
    assert norm_l2(est.transform(0.5 * y0)) <= norm_l2(out)


def test_multiplicative_zero_target():
    y0 = sine_grid(1, 1025)
    est = MultiplicativeMobileSynthesizer(epsilon=0.1).fit(y0, np.zeros(1025))
    assert est.score(y0, np.zeros(1025)) >= -0.1


def test_static_verifier_predicts_per_sample():
    n = 257
    x = grid_points(n)
    support = Interval(0.6, 0.9)
    control = [SourceWindow(0.0, 1.0, GridFunction(np.where(support.contains(x, True), 1.0, 0.0)), support)]
    est = StaticObstructionVerifier(m=2, n_points=n).fit([control, []])
    assert est.predict().tolist() == [True, True]
    assert est.gap_ == pytest.approx(0.3535533905932738)
