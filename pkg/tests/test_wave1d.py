import math

import numpy as np
import pytest

from tgcc.obsdomain import MovingDomainSpec
from tgcc.wave1d import (
    InitialData1D,
    dalembert_eval,
    damped_decay_rate,
    energy_at,
    fd_energy_error,
    obs_ratio_infimum,
    observed_energy,
    worst_ray_packets,
)

FULL = MovingDomainSpec("interval", a=1.0, v=0.0)
MOVING = MovingDomainSpec("interval", a=0.25, v=0.5)
X = np.linspace(0.0, 1.0, 101)


def test_eigenmode_example():
    u, ut = dalembert_eval(InitialData1D.eigenmode(1), 0.5, np.array([0.5]))
    assert u[0] == pytest.approx(0.0, abs=1e-14)
    assert ut[0] == pytest.approx(-math.pi)


@pytest.mark.parametrize("k", [1, 3, 7])
def test_eigenmode_separated_form(k):
    d = InitialData1D.eigenmode(k)
    for t in (0.13, 0.8, 2.7):
        u, ut = dalembert_eval(d, t, X)
        np.testing.assert_allclose(u, np.cos(k * math.pi * t) * np.sin(k * math.pi * X), atol=1e-12)
        np.testing.assert_allclose(ut, -k * math.pi * np.sin(k * math.pi * t) * np.sin(k * math.pi * X), atol=1e-11)


@pytest.mark.parametrize("data", [InitialData1D.random_modes(12, seed=2), InitialData1D.packet(0.4, 1, 0.05)])
def test_identity_at_time_zero(data):
    u, ut = dalembert_eval(data, 0.0, X)
    np.testing.assert_allclose(u, data.u0(X), atol=1e-12)
    np.testing.assert_allclose(ut, data.u1(X), atol=1e-12)


@pytest.mark.parametrize("direction", [1, -1])
def test_packet_travels_before_reflection(direction):
    d = InitialData1D.packet(0.5, direction, 0.05)
    for t in (0.1, 0.3):
        u, _ = dalembert_eval(d, t, X)
        np.testing.assert_allclose(u, d.u0(X - direction * t), atol=1e-12)


@pytest.mark.parametrize("data", [InitialData1D.random_modes(12, seed=4), InitialData1D.packet(0.3, -1, 0.04)])
def test_dirichlet_ends(data):
    for t in np.linspace(0, 5, 23):
        u, _ = dalembert_eval(data, t, np.array([0.0, 1.0]))
        assert np.max(np.abs(u)) < 1e-10


@pytest.mark.parametrize("data", [InitialData1D.random_modes(12, seed=5), InitialData1D.packet(0.6, 1, 0.03)])
def test_time_symmetry(data):
    back = data.negated_velocity()
    for t in (0.2, 1.1, 3.4):
        u_f, ut_f = dalembert_eval(data, t, X)
        u_b, ut_b = dalembert_eval(back, -t, X)
        np.testing.assert_allclose(u_b, u_f, atol=1e-12)
        np.testing.assert_allclose(ut_b, -ut_f, atol=1e-11)


@pytest.mark.parametrize("data", [InitialData1D.random_modes(16, seed=0), InitialData1D.packet(0.5, 1, 0.02)])
def test_energy_conservation(data):
    e0 = data.energy()
    for t in (0.0, 0.37, 1.0, 2.9):
        assert energy_at(data, t) == pytest.approx(e0, rel=1e-8)


def test_observed_energy_full_window():
    rep = observed_energy(InitialData1D.eigenmode(1), FULL, 2.0)
    assert rep.observed == pytest.approx(math.pi**2 / 2, rel=1e-10)
    assert rep.total == pytest.approx(math.pi**2 / 2, rel=1e-12)
    assert rep.ratio == pytest.approx(1.0, rel=1e-10)
    assert not rep.flagged


def test_observed_energy_empty_window():
    rep = observed_energy(InitialData1D.eigenmode(2), None, 1.0)
    assert rep.observed == 0.0 and rep.ratio == 0.0


def test_observed_energy_bounds():
    d = InitialData1D.random_modes(10, seed=3)
    rep = observed_energy(d, MOVING, 1.5)
    assert 0.0 <= rep.observed <= 1.5 * rep.total
    assert math.isfinite(rep.ratio)


def test_full_window_eigenmodes_at_least_one():
    for k in (1, 2, 5, 9):
        assert observed_energy(InitialData1D.eigenmode(k), FULL, 2.0).ratio >= 1.0 - 1e-9


def test_packet_ratios_shrink_below_control_time():
    packets = worst_ray_packets(MOVING, 0.8)
    ratios = [observed_energy(p, MOVING, 0.8).ratio for p in packets]
    assert ratios[0] > ratios[1] > ratios[2]


def test_ratio_infimum_positive_above_control_time():
    fam = [InitialData1D.eigenmode(k) for k in range(1, 9)] + worst_ray_packets(MOVING, 1.3)
    inf, reports = obs_ratio_infimum(MOVING, 1.3, fam)
    assert inf > 1e-3
    assert len(reports) == len(fam)


def test_packet_validation():
    with pytest.raises(ValueError):
        InitialData1D.packet(0.5, 1, 0.7)
    with pytest.raises(ValueError):
        InitialData1D.packet(0.01, 1, 0.05)


# -- damped finite differences -------------------------------------------------------------


def test_fd_second_order():
    d = InitialData1D.random_modes(8, seed=1)
    errs = [fd_energy_error(d, N, 1.0) for N in (128, 256, 512)]
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    assert all(3.5 <= r <= 4.5 for r in ratios), ratios


def test_full_damping_decays():
    fit = damped_decay_rate(FULL, N=256, periods=20)
    assert fit.nu > 0 and fit.residual < 0.1


def test_no_damping_conserves():
    fit = damped_decay_rate(None, N=256, periods=20)
    assert abs(fit.nu) < 1e-3


def test_moving_damping_decays():
    fit = damped_decay_rate(MOVING, N=512, periods=20)
    assert fit.nu > 0


def test_monotone_damping_in_window_size():
    nus = [damped_decay_rate(MovingDomainSpec("interval", a=a, v=0.5), N=256, periods=20).nu
           for a in (0.1, 0.25, 0.4)]
    assert nus[0] <= nus[1] <= nus[2]


def test_damped_requires_periodic_and_cfl():
    stop = MovingDomainSpec("disk", a=1.0, eps=0.1, v=1.0, motion="stop_and_go")
    with pytest.raises(ValueError):
        damped_decay_rate(stop, N=64, periods=2)
    with pytest.raises(ValueError):
        damped_decay_rate(MOVING, N=64, periods=2, cfl=1.5)
