"""Closed-form control times, precession speeds, speed thresholds and the
regular-polygon vertex lemma."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..geometry import DomainKind

TWO_PI = 2.0 * math.pi


class UndefinedFormula(ValueError):
    """Parameter combination for which no closed form is available."""


# ---------------------------------------------------------------------------
# one-dimensional window


def t0_1d_case(v: float, a: float, delta: float) -> str:
    """Which branch of the piecewise 1D control time applies."""
    if not 0.0 < a < 1.0:
        raise ValueError("a must lie in (0, 1)")
    if v < 0 or delta < 0:
        raise ValueError("v and delta must be non-negative")
    if v < 1.0:
        return "slow"
    if v == 1.0:
        if delta > 0:
            return "unit_hold"
        raise UndefinedFormula("formula undefined in paper for v = 1, delta = 0")
    return "fast_no_hold" if delta == 0 else "fast_hold"


FLAGGED_CASES = frozenset({"fast_hold"})


def t0_1d(v: float, a: float, delta: float) -> float:
    """Piecewise control time of the reflecting 1D window (v, a, delta).

    The ``fast_hold`` branch (v > 1, delta > 0) is returned as printed,
    (2(1 - a) + v delta)(1 + v); it is dimensionally inconsistent with the
    other branches and is only ever reported next to a measured value.
    """
    case = t0_1d_case(v, a, delta)
    if case == "slow":
        return 2.0 * (1.0 - a) / (1.0 + v)
    if case == "unit_hold":
        return 1.0 - a
    if case == "fast_no_hold":
        return (1.0 - a) * (3.0 * v + 1.0) / (v * (1.0 + v))
    return (2.0 * (1.0 - a) + v * delta) * (1.0 + v)


# ---------------------------------------------------------------------------
# disk precession speeds


def precession_ccw(alpha):
    """Angular speed alpha / (2 sin(alpha/2)) of the bounce pattern, alpha in (0, 2 pi)."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any((alpha <= 0) | (alpha >= TWO_PI)):
        raise ValueError("alpha must lie in the open interval (0, 2 pi)")
    out = alpha / (2.0 * np.sin(alpha / 2.0))
    return float(out) if out.ndim == 0 else out


def precession_cw(alpha):
    """(alpha - pi) / (2 sin(alpha/2)) for alpha in (pi, 2 pi)."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any((alpha <= math.pi) | (alpha >= TWO_PI)):
        raise ValueError("alpha must lie in the open interval (pi, 2 pi)")
    out = (alpha - math.pi) / (2.0 * np.sin(alpha / 2.0))
    return float(out) if out.ndim == 0 else out


def _invert(f, target, lo, hi):
    # both speed maps are strictly increasing; bracket away from the poles
    lo_t, hi_t = lo, hi
    for _ in range(200):
        if f(hi_t) > target:
            break
        hi_t = 0.5 * (hi_t + hi)
    return brentq(lambda x: f(x) - target, lo_t, hi_t, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def invert_precession_ccw(w: float) -> float:
    """alpha in (0, 2 pi) with precession_ccw(alpha) = w (needs w > 1)."""
    if not w > 1.0:
        raise ValueError("counter-clockwise precession speeds exceed 1")
    return _invert(precession_ccw, w, 1e-12, TWO_PI - 1e-15)


def invert_precession_cw(w: float) -> float:
    """alpha in (pi, 2 pi) with precession_cw(alpha) = w (needs w > 0)."""
    if not w > 0.0:
        raise ValueError("clockwise precession speeds are positive")
    return _invert(precession_cw, w, math.pi + 1e-15, TWO_PI - 1e-15)


def stop_and_go_interval(a: float) -> tuple:
    """Admissible speeds (v_lo, v_hi) of the stop-and-go disk window.

    Outside 4 pi / 5 < a < pi the interval is empty and (nan, nan) is returned.
    """
    if not 4.0 * math.pi / 5.0 <= a <= math.pi:
        return (math.nan, math.nan)
    s = math.sin(a / 2.0)
    return ((math.pi - a) / (2.0 * s), (3.0 * a - 2.0 * math.pi) / (4.0 * s))


def stop_and_go_bound(a: float) -> float:
    """h(a) = (3a - 2 pi) / (4 sin(a/2)), the upper admissible speed."""
    return (3.0 * a - 2.0 * math.pi) / (4.0 * math.sin(a / 2.0))


# ---------------------------------------------------------------------------
# regular polygons


def polygon_vertex_indices(p: int, q: int) -> frozenset:
    """Vertex set {k p pi / q mod 2 pi : k = 1..2q} as integers j (angle j pi / q)
    predicted by the parity rule."""
    _check_coprime(p, q)
    if p % 2:
        return frozenset(k % (2 * q) for k in range(1, 2 * q + 1))
    return frozenset((2 * k) % (2 * q) for k in range(1, q + 1))


def polygon_vertex_indices_brute(p: int, q: int) -> frozenset:
    """Direct enumeration of k p mod 2q for k = 1..2q."""
    _check_coprime(p, q)
    return frozenset((k * p) % (2 * q) for k in range(1, 2 * q + 1))


def polygon_vertex_set(p: int, q: int) -> list:
    """Sorted angles in [0, 2 pi) of the vertex set of the (p, q) rotation."""
    return [j * math.pi / q for j in sorted(polygon_vertex_indices(p, q))]


def _check_coprime(p: int, q: int):
    if int(p) != p or int(q) != q or p <= 0 or q <= 0:
        raise ValueError("p and q must be positive integers")
    if math.gcd(int(p), int(q)) != 1:
        raise ValueError(f"p = {p} and q = {q} are not coprime")


# ---------------------------------------------------------------------------
# speed thresholds and asymptotic bounds


@dataclass(frozen=True)
class SpeedThresholds:
    geometry: DomainKind
    v0: float
    v1: float | None = None


def speed_thresholds(geometry, a: float, eps: float | None = None) -> SpeedThresholds:
    g = DomainKind.parse(geometry)
    if g is DomainKind.SPHERE:
        _need_eps(eps)
        return SpeedThresholds(g, a / TWO_PI, (TWO_PI - a + 2.0 * eps) / (2.0 * eps))
    if g is DomainKind.DISK:
        _need_eps(eps)
        return SpeedThresholds(g, (TWO_PI + 2.0 * eps - a) / (2.0 * eps))
    if g is DomainKind.SQUARE:
        if not a > 0:
            raise ValueError("a must be positive")
        return SpeedThresholds(g, (2.0 - a) / a)
    raise UndefinedFormula("no speed thresholds for the interval")


def _need_eps(eps):
    if eps is None or not eps > 0:
        raise ValueError("eps must be positive")


def asymptotic_bounds(geometry, v: float, a: float, eps: float | None = None) -> tuple:
    """Two-sided bounds (lower, upper) on the control time in the regimes
    where they are available."""
    g = DomainKind.parse(geometry)
    th = speed_thresholds(g, a, eps)
    if g is DomainKind.SPHERE:
        if v > th.v1:
            lo = math.pi - 2.0 * eps
            return (lo, lo + 2.0 * (math.pi + eps) / v)
        if 0 < v < th.v0:
            lo = (math.pi - a) / v
            return (lo, lo + TWO_PI)
    elif g is DomainKind.DISK:
        if v > th.v0:
            lo = 2.0 - 2.0 * eps
            return (lo, lo + (TWO_PI + 2.0 * eps) / v)
    elif v > th.v0:
        lo = max(math.sqrt(2.0) * (1.0 - 2.0 * a), 0.0)
        return (lo, lo + (4.0 + 2.0 * a) / v)
    raise UndefinedFormula("no closed-form bound in paper for this speed regime")


__all__ = [
    "FLAGGED_CASES", "SpeedThresholds", "UndefinedFormula", "asymptotic_bounds",
    "invert_precession_ccw", "invert_precession_cw", "polygon_vertex_indices",
    "polygon_vertex_indices_brute", "polygon_vertex_set", "precession_ccw", "precession_cw",
    "speed_thresholds", "stop_and_go_bound", "stop_and_go_interval", "t0_1d", "t0_1d_case",
]
