"""Constructive counterexamples for rational (or resonant) window speeds.

Each generator builds a ray whose contacts with the slow set where the
window lives (disk boundary ring, sphere equatorial band, square perimeter)
occur at finitely many positions relative to the window, brute-forces a
phase that keeps these positions away from the window, turns the clearance
into explicit smallness bounds ``a0`` (and ``eps0``) and replays the ray
against the region to confirm that it never hits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..geometry import TWO_PI, DomainKind, fold, square_perimeter_point
from ..obsdomain import MovingDomainSpec
from ..rayflow import GreatCircleRay, RayState, great_circle_state
from .closed_forms import invert_precession_ccw, invert_precession_cw

PHASE_GRID = 10_000
DEFAULT_HORIZON = {DomainKind.DISK: 200.0, DomainKind.SQUARE: 200.0, DomainKind.SPHERE: 100.0}
OBSTRUCTIONS = {
    DomainKind.SPHERE: ("equatorial", "meridian"),
    DomainKind.DISK: ("polygon", "precession", "clockwise"),
    DomainKind.SQUARE: ("slope",),
}


class ObstructionFails(ValueError):
    """No phase with positive clearance: the window is too large."""


@dataclass(frozen=True)
class Counterexample:
    geometry: DomainKind
    obstruction: str
    params: dict
    ray: RayState
    v: float
    valid_a0: float
    valid_eps0: float | None
    clearance: float
    forward_clearance: float
    horizon: float
    notes: tuple = field(default=())

    def spec(self, a: float | None = None, eps: float | None = None) -> MovingDomainSpec:
        """The region the ray is guaranteed to avoid (defaults: a0, eps0)."""
        a = self.valid_a0 if a is None else a
        if self.geometry is DomainKind.SQUARE:
            return MovingDomainSpec(self.geometry, a=a, v=self.v)
        eps = self.valid_eps0 if eps is None else eps
        return MovingDomainSpec(self.geometry, a=a, eps=eps, v=self.v)

    def sharp_spec(self) -> MovingDomainSpec:
        """A region twice as long as the forward clearance; the ray must hit it."""
        if self.geometry is DomainKind.SQUARE:
            return self.spec(a=2.0 * self.forward_clearance)
        a = min(2.0 * self.forward_clearance, TWO_PI - 1e-9)
        return self.spec(a=a)


@dataclass(frozen=True)
class ReplayResult:
    hit_time: float | None
    horizon: float
    clearance: float

    @property
    def hit_free(self) -> bool:
        return self.hit_time is None


def replay(cx: Counterexample, spec: MovingDomainSpec | None = None,
           horizon: float | None = None) -> ReplayResult:
    from ..gcc import first_hit_time

    spec = spec or cx.spec()
    horizon = cx.horizon if horizon is None else horizon
    t = first_hit_time(cx.geometry, spec, cx.ray, horizon)
    return ReplayResult(t, horizon, cx.clearance)


def _circ_clearance(rho):
    """min over contacts of the angular distance to the window anchor."""
    r = np.mod(rho, TWO_PI)
    return np.minimum(r, TWO_PI - r).min(axis=-1)


def _best_phase(offsets: np.ndarray) -> tuple:
    """Phase phi maximising min_k dist(phi + offsets_k, 0) over a fixed grid
    (first index wins ties).  Returns (phi, clearance, forward clearance)."""
    offsets = np.unique(np.round(np.mod(offsets, TWO_PI), 12))
    phis = TWO_PI * (np.arange(PHASE_GRID) + 0.5) / PHASE_GRID
    best_i, best_c = 0, -1.0
    chunk = max(1, 2_000_000 // max(len(offsets), 1))
    for s in range(0, PHASE_GRID, chunk):
        ph = phis[s:s + chunk, None]
        c = _circ_clearance(ph + offsets[None, :])
        i = int(np.argmax(c))
        if c[i] > best_c:
            best_i, best_c = s + i, float(c[i])
    phi = float(phis[best_i])
    fwd = float(np.mod(phi + offsets, TWO_PI).min())
    return phi, best_c, fwd


def _ring_excursion(alpha: float, eps: float) -> float:
    """Arc length of a chord (opening alpha) spent in the ring 1 - eps < r
    next to one endpoint; inf when the whole chord lies in the ring."""
    h = math.sin(alpha / 2.0)
    rad = h * h - (2.0 * eps - eps * eps)
    if rad <= 0.0:
        return math.inf
    return h - math.sqrt(rad)


def _eps_for_excursion(alpha: float, v: float, budget: float) -> float:
    """Largest eps (bisection) whose ring excursion moves the ray relative to
    the window by at most ``budget`` radians."""
    def excess(eps):
        s = _ring_excursion(alpha, eps)
        return s * (1.0 / (1.0 - eps) + v) - budget

    lo, hi = 0.0, 0.5
    if excess(hi) <= 0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# disk


def _disk_chord_counterexample(alpha: float, v: float, obstruction: str, params: dict,
                               horizon: float, a: float | None) -> Counterexample:
    L = 2.0 * math.sin(alpha / 2.0)
    n_b = int(math.ceil(horizon / L)) + 2
    k = np.arange(n_b)
    # relative position of bounce k when the ray bounces at angle phi at t = 0
    offsets = k * (alpha - v * L)
    phi, c, fwd = _best_phase(offsets)
    return _disk_finish(phi, alpha, v, c, fwd, obstruction, params, horizon, a)


def _disk_finish(phi, alpha, v, c, fwd, obstruction, params, horizon, a):
    if not c > 1e-9:
        raise ObstructionFails("obstruction fails, region too large: no phase with positive clearance")
    a0 = c / 2.0
    if a is not None and a >= a0:
        raise ObstructionFails(f"obstruction fails, region too large: a = {a} exceeds a0 = {a0}")
    eps0 = _eps_for_excursion(alpha, v, c / 4.0)
    mid = phi + 0.5 * alpha
    ray = RayState(DomainKind.DISK, (math.cos(phi), math.sin(phi)), (-math.sin(mid), math.cos(mid)), 0.0)
    return Counterexample(DomainKind.DISK, obstruction, dict(params, alpha=alpha, phase=phi), ray, v,
                          a0, eps0, c, fwd, horizon)


def disk_polygon(n: int, p: int, q: int, horizon: float = 200.0, a: float | None = None) -> Counterexample:
    """Regular n-gon ray against a window with v sin(pi/n) = p pi / q."""
    if n < 2 or p <= 0 or q <= 0:
        raise ValueError("need n >= 2 and positive p, q")
    alpha = TWO_PI / n
    v = p * math.pi / (q * math.sin(math.pi / n))
    # exact bounce offsets: k (2 pi / n - 2 pi p / q) mod 2 pi, in units of 2 pi / (n q)
    step = Fraction(1, n) - Fraction(p, q)
    n_b = int(math.ceil(horizon / (2.0 * math.sin(math.pi / n)))) + 2
    offsets = np.array([TWO_PI * float((k * step) % 1) for k in range(min(n_b, 4 * n * q + 1))])
    phi, c, fwd = _best_phase(offsets)
    return _disk_finish(phi, alpha, v, c, fwd, "polygon", {"n": n, "p": p, "q": q}, horizon, a)


def disk_precession(v: float, horizon: float = 200.0, a: float | None = None) -> Counterexample:
    """Chord ray whose bounce pattern precesses at the window speed v > 1."""
    alpha = invert_precession_ccw(v)
    return _disk_chord_counterexample(alpha, v, "precession", {}, horizon, a)


def disk_clockwise(v: float, horizon: float = 200.0, a: float | None = None) -> Counterexample:
    """Clockwise family: alternate bounces advance with the window."""
    alpha = invert_precession_cw(v)
    return _disk_chord_counterexample(alpha, v, "clockwise", {}, horizon, a)


# ---------------------------------------------------------------------------
# sphere


def sphere_equatorial(horizon: float = 100.0, a: float | None = None) -> Counterexample:
    """v = 1: an equatorial ray co-rotating with the window, half a turn away."""
    v = 1.0
    phi, c, fwd = _best_phase(np.zeros(1))
    a0 = c / 2.0
    if a is not None and a >= a0:
        raise ObstructionFails(f"obstruction fails, region too large: a = {a} exceeds a0 = {a0}")
    ray = great_circle_state(GreatCircleRay(0.0, 0.0, phi), 0.0)
    # the ray never leaves the band, so any latitude width works
    return Counterexample(DomainKind.SPHERE, "equatorial", {"p": 1, "q": 1, "phase": phi}, ray, v,
                          a0, math.pi / 2.0, c, fwd, horizon, ("eps0 is unconstrained",))


def sphere_meridian(p: int, q: int, horizon: float = 100.0, a: float | None = None) -> Counterexample:
    """v = p/q: a meridian ray crossing the equator at times t_k = k pi."""
    if p <= 0 or q <= 0 or math.gcd(p, q) != 1:
        raise ValueError("need coprime positive p, q")
    v = p / q
    step = Fraction(1, 2) * (1 - Fraction(p, q))  # in turns
    n_c = int(math.ceil(horizon / math.pi)) + 2
    offsets = np.array([TWO_PI * float((k * step) % 1) for k in range(min(n_c, 4 * q + 1))])
    phi, c, fwd = _best_phase(offsets)
    if not c > 1e-9:
        raise ObstructionFails("obstruction fails, region too large: no phase with positive clearance")
    a0 = c / 2.0
    if a is not None and a >= a0:
        raise ObstructionFails(f"obstruction fails, region too large: a = {a} exceeds a0 = {a0}")
    # a meridian keeps its longitude inside the band; the window moves v * eps meanwhile
    eps0 = min(c / (4.0 * v), math.pi / 2.0)
    # the ray crosses the equator (upwards) at longitude phi at t = 0
    ray = great_circle_state(GreatCircleRay(phi, math.pi / 2.0, 0.0), 0.0)
    return Counterexample(DomainKind.SPHERE, "meridian", {"p": p, "q": q, "phase": phi}, ray, v,
                          a0, eps0, c, fwd, horizon)


# ---------------------------------------------------------------------------
# square


def _square_paths(x0, y0, c, s, v, t):
    """Ray positions and window centres at times t (broadcast)."""
    x = fold(x0 + c * t)
    y = fold(y0 + s * t)
    cx, cy = square_perimeter_point(v * t)
    return x, y, cx, cy


def _chebyshev_min(x0, y0, c, s, v, t_end):
    """Exact min over [0, t_end] of max(|x - cx|, |y - cy|) for one ray.

    Both paths are piecewise linear; on each piece the minimum of the max of
    two absolute values of linear functions sits at a piece end or at a root
    of f, g, f - g or f + g.
    """
    bps = [0.0, t_end]
    for u0, cu in ((x0, c), (y0, s)):
        if abs(cu) > 1e-15:
            m = np.arange(math.floor(min(u0, u0 + cu * t_end)) - 1, math.ceil(max(u0, u0 + cu * t_end)) + 2)
            bps.extend((m - u0) / cu)
    if v > 0:
        bps.extend(np.arange(0.0, v * t_end + 1.0) / v)
    t = np.unique(np.asarray(bps, dtype=float))
    t = t[(t >= 0.0) & (t <= t_end)]
    ta, tb = t[:-1], t[1:]
    mid = 0.5 * (ta + tb)
    xa, ya, cxa, cya = _square_paths(x0, y0, c, s, v, ta)
    xm, ym, cxm, cym = _square_paths(x0, y0, c, s, v, mid)
    h = 0.5 * (tb - ta)
    # slopes from the mid-point evaluation (paths are linear on each piece)
    f0, g0 = xa - cxa, ya - cya
    fs = np.where(h > 0, ((xm - cxm) - f0) / np.where(h > 0, h, 1.0), 0.0)
    gs = np.where(h > 0, ((ym - cym) - g0) / np.where(h > 0, h, 1.0), 0.0)
    cands = [np.zeros_like(ta), tb - ta]
    with np.errstate(divide="ignore", invalid="ignore"):
        for num, den in ((f0, fs), (g0, gs), (f0 - g0, fs - gs), (f0 + g0, fs + gs)):
            cands.append(np.where(den != 0, -num / den, 0.0))
    best = math.inf
    for r in cands:
        r = np.clip(r, 0.0, tb - ta)
        val = np.maximum(np.abs(f0 + fs * r), np.abs(g0 + gs * r))
        best = min(best, float(val.min()))
    return best


def square_slope(p: int, q: int, m: int, n: int, horizon: float = 200.0, a: float | None = None,
                 grid: int = 100) -> Counterexample:
    """Slope p/q ray against a perimeter window of speed v = (m/n) sqrt(p^2 + q^2)."""
    if p < 0 or q < 0 or (p, q) == (0, 0) or math.gcd(p, q) != 1 or m <= 0 or n <= 0:
        raise ValueError("need coprime p, q >= 0 (not both 0) and positive m, n")
    S = p * p + q * q
    root = math.sqrt(S)
    v = m / n * root
    c, s = q / root, p / root
    period_ray = 2.0 * root
    A = (2 * n) // math.gcd(2 * n, S * m)
    joint = period_ray * A
    # coarse search over (start offset along the left/bottom edge, time shift)
    us = (np.arange(grid) + 0.5) / grid
    taus = period_ray * np.arange(grid) / grid
    tt = np.linspace(0.0, joint, int(max(400, joint * 100)) + 1)
    U, TAU = np.meshgrid(us, taus, indexing="ij")
    U, TAU = U.ravel(), TAU.ravel()
    if q > 0:
        X0, Y0 = c * TAU, U + s * TAU
    else:
        X0, Y0 = U + c * TAU, s * TAU
    best_i, best_d = 0, -1.0
    chunk = max(1, 4_000_000 // len(tt))
    for st in range(0, len(U), chunk):
        x, y, cx, cy = _square_paths(X0[st:st + chunk, None], Y0[st:st + chunk, None], c, s, v, tt[None, :])
        d = np.maximum(np.abs(x - cx), np.abs(y - cy)).min(axis=1)
        i = int(np.argmax(d))
        if d[i] > best_d:
            best_i, best_d = st + i, float(d[i])
    x0, y0 = float(X0[best_i]), float(Y0[best_i])
    D = _chebyshev_min(x0, y0, c, s, v, max(joint, horizon))
    if not D > 1e-9:
        raise ObstructionFails("obstruction fails, region too large: no phase with positive clearance")
    a0 = D / 2.0
    if a is not None and a >= a0:
        raise ObstructionFails(f"obstruction fails, region too large: a = {a} exceeds a0 = {a0}")
    from ..geometry import fold_slope

    dx = c * float(fold_slope(x0 + 1e-9 * c)) if c else 0.0
    dy = s * float(fold_slope(y0 + 1e-9 * s)) if s else 0.0
    ray = RayState(DomainKind.SQUARE, (fold(x0), fold(y0)), (dx, dy), 0.0)
    return Counterexample(DomainKind.SQUARE, "slope", {"p": p, "q": q, "m": m, "n": n, "x0": x0, "y0": y0},
                          ray, v, a0, None, D, D, horizon)


# ---------------------------------------------------------------------------


def make_counterexample(geometry, obstruction: str, horizon: float | None = None,
                        a: float | None = None, **params) -> Counterexample:
    """Dispatch to the generator for ``geometry`` and ``obstruction``.

    sphere: equatorial (v = 1) or meridian (p, q: v = p/q);
    disk: polygon (n, p, q), precession (v > 1), clockwise (v > 0);
    square: slope (p, q, m, n: slope p/q, v = (m/n) sqrt(p^2 + q^2)).
    """
    g = DomainKind.parse(geometry)
    if g not in OBSTRUCTIONS or obstruction not in OBSTRUCTIONS[g]:
        raise ValueError(f"unknown obstruction {obstruction!r} for the {g.value}")
    h = DEFAULT_HORIZON[g] if horizon is None else horizon
    if g is DomainKind.SPHERE:
        if obstruction == "equatorial":
            if Fraction(params.get("p", 1), params.get("q", 1)) != 1:
                raise ValueError("the equatorial obstruction needs v = 1")
            return sphere_equatorial(h, a)
        return sphere_meridian(int(params["p"]), int(params["q"]), h, a)
    if g is DomainKind.DISK:
        if obstruction == "polygon":
            return disk_polygon(int(params["n"]), int(params["p"]), int(params["q"]), h, a)
        if obstruction == "precession":
            return disk_precession(float(params["v"]), h, a)
        return disk_clockwise(float(params["v"]), h, a)
    return square_slope(int(params["p"]), int(params["q"]), int(params["m"]), int(params["n"]), h, a)


__all__ = [
    "Counterexample", "ObstructionFails", "ReplayResult", "disk_clockwise", "disk_polygon",
    "disk_precession", "make_counterexample", "replay", "sphere_equatorial", "sphere_meridian",
    "square_slope",
]
