import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tgcc.geometry import NoBoundaryError
from tgcc.obsdomain import (
    EmptyRegionError,
    MovingDomainSpec,
    RegionUnion,
    ShellSpec,
    boundary_shell,
    contains,
    min_feature_timescale,
)


def test_contains_interval_moving_window():
    spec = MovingDomainSpec("interval", a=0.2, v=0.5)
    assert contains(spec, 0.4, (0.35,))
    assert not contains(spec, 0.4, (0.45,))
    assert not contains(spec, 0.4, (0.15,))


def test_contains_disk_boundary_included():
    spec = MovingDomainSpec("disk", a=0.2, eps=0.1, v=0.0)
    p = (math.cos(0.1), math.sin(0.1))
    for t in (0.0, 3.7, 100.0):
        assert contains(spec, t, p)
    assert not contains(spec, 0.0, (0.85 * math.cos(0.1), 0.85 * math.sin(0.1)))


def test_contains_sphere_strict_latitude():
    spec = MovingDomainSpec("sphere", a=1.0, eps=0.2, v=0.0)
    assert not contains(spec, 0.0, (0.5, 0.2))
    assert contains(spec, 0.0, (0.5, 0.199))
    assert not contains(spec, 0.0, (0.5, -0.2))


def test_contains_square_chebyshev_window():
    spec = MovingDomainSpec("square", a=0.25, v=0.0)
    assert contains(spec, 0.0, (0.2, 0.2))
    assert not contains(spec, 0.0, (0.3, 0.1))
    moved = MovingDomainSpec("square", a=0.25, v=1.0)
    # the centre has travelled half an edge after t = 0.5
    assert contains(moved, 0.5, (0.5, 0.1))
    assert not contains(moved, 0.5, (0.1, 0.1))


def test_boundary_mode_tests_arcs_only():
    spec = MovingDomainSpec("disk", a=1.0, mode="boundary")
    assert contains(spec, 0.0, (math.cos(0.5), math.sin(0.5)))


def test_min_feature_timescale_examples():
    assert min_feature_timescale(MovingDomainSpec("disk", a=math.pi / 2, eps=0.1, v=2.0)) == pytest.approx(0.2 / 12)
    assert min_feature_timescale(MovingDomainSpec("interval", a=0.25, v=0.5)) == pytest.approx(0.25 / 6)
    assert min_feature_timescale(MovingDomainSpec("square", a=0.3, v=0.0)) == pytest.approx(0.3 / 4)


def test_empty_region_errors():
    with pytest.raises(EmptyRegionError, match="empty region"):
        MovingDomainSpec("disk", a=1.0, eps=0.0)
    with pytest.raises(EmptyRegionError, match="empty region"):
        MovingDomainSpec("interval", a=0.0)
    with pytest.raises(EmptyRegionError, match="empty region"):
        MovingDomainSpec("square", a=-0.1)
    with pytest.raises(NoBoundaryError):
        MovingDomainSpec("sphere", a=1.0, mode="boundary")


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.05, 0.4), st.floats(0.0, 5.0), st.floats(0.0, 20.0),
       st.floats(1.0, 2.0), st.floats(1.0, 2.0))
def test_disk_contains_monotone_in_size(a, eps, v, t, ka, ke):
    rng = np.random.default_rng(int(t * 1000))
    r = np.sqrt(rng.uniform(0, 1, 200))
    th = rng.uniform(0, 2 * math.pi, 200)
    coords = (r * np.cos(th), r * np.sin(th))
    small = MovingDomainSpec("disk", a=a, eps=eps, v=v)
    big = MovingDomainSpec("disk", a=min(a * ka, 2 * math.pi), eps=min(eps * ke, 1.0), v=v)
    tt = np.full(200, t)
    inside = small.contains_coords(tt, coords)
    assert np.all(big.contains_coords(tt, coords)[inside])


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.5), st.floats(0.0, 3.0), st.floats(0.0, 10.0), st.floats(1.0, 1.9))
def test_interval_contains_monotone_in_size(a, v, t, k):
    x = np.linspace(0, 1, 401)
    small = MovingDomainSpec("interval", a=a, v=v)
    big = MovingDomainSpec("interval", a=a * k, v=v)
    # the larger window starts at the same anchor while it has not reached the wall
    t = min(t, (1 - a * k) / v) if v > 0 else t
    tt = np.full_like(x, t)
    inside = small.contains_coords(tt, (x,))
    assert np.all(big.contains_coords(tt, (x,))[inside])


@pytest.mark.parametrize("kind, v", [("disk", 0.7), ("disk", 3.0), ("sphere", 1.3)])
def test_constant_speed_periodicity(kind, v):
    spec = MovingDomainSpec(kind, a=1.0, eps=0.2, v=v)
    rng = np.random.default_rng(3)
    t = rng.uniform(0, 10, 500)
    if kind == "disk":
        r = np.sqrt(rng.uniform(0.5, 1, 500))
        th = rng.uniform(0, 2 * math.pi, 500)
        coords = (r * np.cos(th), r * np.sin(th))
    else:
        coords = (rng.uniform(0, 2 * math.pi, 500), rng.uniform(-0.3, 0.3, 500))
    a = spec.contains_coords(t, coords)
    b = spec.contains_coords(t + 2 * math.pi / v, coords)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("v, a, delta", [(0.5, 0.25, 0.0), (2.0, 0.3, 0.1), (1.0, 0.5, 0.2)])
def test_reflecting_law_periodic_and_continuous(v, a, delta):
    spec = MovingDomainSpec("interval", a=a, v=v, delta=delta)
    P = spec.period_1d
    assert P == pytest.approx(2 * ((1 - a) / v + delta))
    t = np.linspace(0, 3 * P, 30001)
    x = np.asarray(spec.anchor(t))
    assert np.max(np.abs(np.diff(x))) <= v * (t[1] - t[0]) + 1e-12
    np.testing.assert_allclose(spec.anchor(t + P), x, atol=1e-9)
    assert x.min() >= -1e-12 and x.max() + a <= 1 + 1e-12
    # the window holds at the right wall for delta
    t_wall = (1 - a) / v
    np.testing.assert_allclose(spec.anchor(t_wall + 0.5 * delta), 1 - a, atol=1e-12)


def test_union_or_semantics():
    s1 = MovingDomainSpec("disk", a=0.5, eps=0.1, v=1.0)
    s2 = MovingDomainSpec("disk", a=0.5, eps=0.1, v=1.0, offset=math.pi)
    u = RegionUnion((s1, s2))
    p = (math.cos(math.pi + 0.2), math.sin(math.pi + 0.2))
    assert not contains(s1, 0.0, p) and contains(s2, 0.0, p)
    assert bool(u.contains_coords(np.array(0.0), (np.array(p[0]), np.array(p[1]))))
    with pytest.raises(ValueError):
        RegionUnion(())


# -- shells ----------------------------------------------------------------------


def _shell_hits(shell, t, xs):
    x = np.asarray(xs, dtype=float)
    return shell.contains_coords(np.full_like(x, t), (x,))


def test_shell_static_lateral_intervals():
    h = 0.02
    base = MovingDomainSpec("interval", a=0.2, v=0.0, offset=0.3)
    shell = boundary_shell(ShellSpec(base, 2.0, h))
    x = np.linspace(0, 1, 2001)
    got = _shell_hits(shell, 1.0, x)
    want = (np.abs(x - 0.3) < h) | (np.abs(x - 0.5) < h)
    assert np.array_equal(got[np.abs(np.abs(x - 0.4) - 0.1 - h) > 1e-9],
                          want[np.abs(np.abs(x - 0.4) - 0.1 - h) > 1e-9])


def test_shell_cap_region():
    h = 0.02
    base = MovingDomainSpec("interval", a=0.2, v=0.0, offset=0.3)
    shell = boundary_shell(ShellSpec(base, 2.0, h))
    assert np.all(_shell_hits(shell, 0.5 * h, np.linspace(0.3 - 0.9 * h, 0.5 + 0.9 * h, 101)))
    assert np.all(_shell_hits(shell, 2.0 - 0.5 * h, np.linspace(0.31, 0.49, 50)))


def test_shell_moving_intervals_drift():
    h = 0.02
    base = MovingDomainSpec("interval", a=0.2, v=0.5)
    shell = boundary_shell(ShellSpec(base, 1.0, h))
    for t in (0.3, 0.7):
        assert _shell_hits(shell, t, [0.5 * t])[0]
        assert _shell_hits(shell, t, [0.5 * t + 0.2])[0]
        assert not _shell_hits(shell, t, [0.5 * t + 0.1])[0]


def test_shell_contains_boundary_and_excludes_far_points():
    h = 0.03
    T = 3.0
    base = MovingDomainSpec("interval", a=0.25, v=0.5, delta=0.1)
    shell = boundary_shell(ShellSpec(base, T, h))
    rng = np.random.default_rng(0)
    # random points on the lateral boundary and on the caps
    t = rng.uniform(0, T, 1000)
    left = np.asarray(base.anchor(t))
    side = rng.integers(0, 2, 1000)
    x = left + side * 0.25
    keep = (x > 1e-9) & (x < 1 - 1e-9)
    assert np.all(shell.contains_coords(t[keep], (x[keep],)))
    xc = rng.uniform(0, 0.25, 200)
    assert np.all(shell.contains_coords(np.zeros(200), (np.asarray(base.anchor(0.0)) + xc,)))
    # points farther than h from the boundary set
    tp = rng.uniform(0, T, 4000)
    xp = rng.uniform(0, 1, 4000)
    far = shell.distance(tp, xp) > h
    assert np.sum(far) > 1000
    assert not np.any(shell.contains_coords(tp[far], (xp[far],)))


def test_shell_errors():
    base = MovingDomainSpec("interval", a=0.2, v=0.0)
    with pytest.raises(ValueError):
        boundary_shell(ShellSpec(base, 1.0, 0.0))
    with pytest.raises(ValueError):
        boundary_shell(ShellSpec(base, 1.0, 0.5))
