import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tgcc import ControlTimeEstimator
from tgcc.estimator import check_ray_table
from tgcc.gcc import CRITICAL, GRID


def test_fit_interval_control_time():
    est = ControlTimeEstimator(domain="interval", a=0.25, v=0.5).fit()
    assert est.t0_ == pytest.approx(1.0, abs=0.02)
    assert est.status_ == "finite"
    assert est.n_rays_ > 0
    assert est.worst_ray_ is not None


def test_predict_hit_times():
    est = ControlTimeEstimator(domain="interval", a=0.2, v=0.5).fit()
    X = np.array([[GRID, 0.9, -1.0, 0.0], [GRID, 0.1, 1.0, 0.0]])
    t = est.predict(X)
    assert t[0] == pytest.approx(7 / 15)
    assert t[1] == pytest.approx(0.0, abs=1e-9)


def test_fit_on_custom_table():
    X = np.array([[GRID, 0.9, -1.0, 0.0], [GRID, 0.5, 1.0, 0.0]])
    est = ControlTimeEstimator(domain="interval", a=0.2, v=0.5).fit(X)
    assert est.n_rays_ == 2


def test_params_and_clone():
    est = ControlTimeEstimator(domain="disk", a=1.0, eps=0.1, v=3.0, seed=5)
    p = est.get_params()
    assert p["seed"] == 5 and p["domain"] == "disk"
    c = clone(est)
    assert c.get_params() == p
    est.set_params(v=4.0)
    assert est.v == 4.0


def test_predict_before_fit():
    with pytest.raises(NotFittedError):
        ControlTimeEstimator().predict(np.zeros((1, 4)))


def test_ray_table_validation():
    with pytest.raises(ValueError):
        check_ray_table(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        check_ray_table(np.array([[CRITICAL + 5, 0, 0, 0]]))
    with pytest.raises(ValueError):
        check_ray_table(np.array([[0.5, 0, 0, 0]]))
    with pytest.raises(ValueError):
        check_ray_table(np.array([[0, math.nan, 0, 0]]))


def test_boundary_mode_fit_and_check():
    est = ControlTimeEstimator(domain="interval", a=1.0, mode="boundary", horizon=5.0).fit()
    # both ends observed: every ray reaches a wall within time 1
    assert est.t0_ == pytest.approx(1.0)
    assert est.check(1.01).satisfied
    assert not est.check(0.9).satisfied
