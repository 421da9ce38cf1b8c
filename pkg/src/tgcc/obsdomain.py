"""Moving observation regions omega(t) and boundary regions Gamma(t).

Membership tests are vectorised: ``contains_coords(t, coords)`` takes a time
array and a tuple of coordinate arrays in the batch layout used by
:mod:`tgcc.rayflow` (interval ``(x,)``, disk/square ``(x, y)``, sphere
``(theta, phi)``) and returns a boolean array.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import TWO_PI, DomainKind, NoBoundaryError, square_perimeter_point, vec_to_sphere

ANGLE_GUARD = 1e-12
MOTIONS = ("constant_speed", "reflecting_1d", "stop_and_go", "custom")
MODES = ("interior", "boundary")


class EmptyRegionError(ValueError):
    """Degenerate region parameters (a <= 0 or eps <= 0)."""


@dataclass(frozen=True)
class MovingDomainSpec:
    """A rigidly moving observation window.

    ``a`` is the angular length (disk, sphere), the window length (interval),
    the half-side of the Chebyshev window (square, interior mode) or the arc
    length of Gamma(t) (square, boundary mode).  ``eps`` is the radial or
    latitudinal width.  ``offset`` is the anchor position at t = 0.
    ``t_start`` is the stop-and-go release time and ``schedule`` a tuple of
    (t, anchor) knots for the custom piecewise-linear law.
    """

    kind: DomainKind
    a: float
    eps: float | None = None
    v: float = 0.0
    motion: str = "constant_speed"
    delta: float = 0.0
    t_start: float = 0.0
    schedule: tuple = ()
    mode: str = "interior"
    offset: float = 0.0
    endpoints: tuple = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind.parse(self.kind))
        if self.motion not in MOTIONS:
            raise ValueError(f"unknown motion law {self.motion!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown region mode {self.mode!r}")
        if self.mode == "boundary" and self.kind is DomainKind.SPHERE:
            raise NoBoundaryError("boundaryless: the sphere has no boundary region")
        if self.motion == "reflecting_1d" and self.kind is not DomainKind.INTERVAL:
            raise ValueError("the reflecting law is defined on the interval only")
        if self.kind is DomainKind.INTERVAL and self.motion == "constant_speed":
            # a window moving inside the interval must turn back at the walls
            object.__setattr__(self, "motion", "reflecting_1d")
        if self.kind is DomainKind.INTERVAL and self.mode == "interior" and not 0.0 < self.a <= 1.0:
            raise EmptyRegionError("empty region: need 0 < a <= 1 on the interval")
        if self.mode == "interior" and self.kind in (DomainKind.DISK, DomainKind.SPHERE):
            if self.eps is None or self.eps <= 0:
                raise EmptyRegionError("empty region: eps must be positive")
        if self.mode == "interior" and self.kind is not DomainKind.INTERVAL and self.a <= 0:
            raise EmptyRegionError("empty region: a must be positive")
        if self.motion == "custom":
            knots = np.asarray(self.schedule, dtype=float)
            if knots.ndim != 2 or knots.shape[1] != 2 or len(knots) < 2 or np.any(np.diff(knots[:, 0]) <= 0):
                raise ValueError("custom schedule needs >= 2 (t, anchor) knots with increasing t")
            object.__setattr__(self, "schedule", tuple(map(tuple, knots.tolist())))
        if self.v < 0:
            raise ValueError("speed must be non-negative")

    # -- motion -------------------------------------------------------------

    @property
    def period_1d(self) -> float:
        return 2.0 * ((1.0 - self.a) / self.v + self.delta)

    @property
    def v_max(self) -> float:
        if self.motion == "custom":
            k = np.asarray(self.schedule)
            return float(np.max(np.abs(np.diff(k[:, 1]) / np.diff(k[:, 0]))))
        return abs(self.v)

    @property
    def is_periodic(self) -> bool:
        if self.motion == "reflecting_1d":
            return self.v >= 0  # a static window is trivially periodic
        if self.motion == "constant_speed":
            return True
        return False

    def anchor(self, t):
        """Window anchor at time t: left edge (interval), start angle
        (disk/sphere), perimeter coordinate of the centre (square interior)
        or of the arc start (square boundary)."""
        t = np.asarray(t, dtype=float)
        if self.motion == "reflecting_1d":
            return self._reflecting_left_edge(t)
        if self.motion == "stop_and_go":
            return self.offset + self.v * np.maximum(t - self.t_start, 0.0)
        if self.motion == "custom":
            k = np.asarray(self.schedule)
            return np.interp(t, k[:, 0], k[:, 1])
        return self.offset + self.v * t

    def _reflecting_left_edge(self, t):
        span = 1.0 - self.a
        if self.v == 0 or span <= 0:
            return np.full_like(t, self.offset) if np.ndim(t) else float(self.offset)
        run = span / self.v
        period = 2.0 * (run + self.delta)
        u = np.mod(t + self.offset / self.v, period)
        return np.select(
            [u < run, u < run + self.delta, u < 2.0 * run + self.delta],
            [self.v * u, np.full_like(u, span), span - self.v * (u - run - self.delta)],
            0.0,
        )

    def breakpoints(self, t_lo: float, t_hi: float) -> np.ndarray:
        """Kinks of the anchor law in [t_lo, t_hi] (1D and stop-and-go)."""
        pts = []
        if self.motion == "reflecting_1d" and self.v > 0 and self.a < 1.0:
            run = (1.0 - self.a) / self.v
            period = 2.0 * (run + self.delta)
            shift = self.offset / self.v
            base = np.array([0.0, run, run + self.delta, 2 * run + self.delta])
            k0 = math.floor((t_lo + shift) / period) - 1
            k1 = math.floor((t_hi + shift) / period) + 1
            for k in range(k0, k1 + 1):
                pts.extend(base + k * period - shift)
        elif self.motion == "stop_and_go":
            pts.append(self.t_start)
        elif self.motion == "custom":
            pts.extend(k[0] for k in self.schedule)
        pts = np.unique(np.asarray(pts, dtype=float))
        return pts[(pts > t_lo) & (pts < t_hi)]

    # -- membership ----------------------------------------------------------

    def _angular(self, theta, t):
        if self.a >= TWO_PI:
            return np.ones(np.broadcast(theta, t).shape, dtype=bool)
        rho = np.mod(theta - self.anchor(t), TWO_PI)
        return (rho > ANGLE_GUARD) & (rho < self.a - ANGLE_GUARD)

    def contains_coords(self, t, coords) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        k = self.kind
        if self.mode == "boundary":
            return self.boundary_contains_coords(t, coords)
        if k is DomainKind.INTERVAL:
            x = coords[0]
            left = self.anchor(t)
            return (x > left) & (x < left + self.a)
        if k is DomainKind.DISK:
            x, y = coords
            r2 = x * x + y * y
            return (r2 > (1.0 - self.eps) ** 2) & self._angular(np.arctan2(y, x), t)
        if k is DomainKind.SPHERE:
            theta, phi = coords
            return (np.abs(phi) < self.eps) & self._angular(theta, t)
        x, y = coords
        cx, cy = square_perimeter_point(self.anchor(t))
        return (np.abs(x - cx) < self.a) & (np.abs(y - cy) < self.a)

    def boundary_contains_coords(self, t, coords) -> np.ndarray:
        """Membership of boundary points in Gamma(t)."""
        k = self.kind
        if k is DomainKind.INTERVAL:
            x = np.asarray(coords[0], dtype=float)
            hit = np.zeros(np.broadcast(x, t).shape, dtype=bool)
            for e in self.endpoints:
                hit |= np.abs(x - e) <= 1e-12
            return hit
        if k is DomainKind.DISK:
            x, y = coords
            return self._angular(np.arctan2(y, x), t)
        s = coords[0] if len(coords) == 1 else _perimeter_coord(*coords)
        if self.a >= 4.0:
            return np.ones(np.broadcast(s, t).shape, dtype=bool)
        rho = np.mod(s - self.anchor(t), 4.0)
        return (rho > ANGLE_GUARD) & (rho < self.a - ANGLE_GUARD)

    def min_feature_timescale(self) -> float:
        return min_feature_timescale(self)


def _perimeter_coord(x, y):
    from .geometry import square_perimeter_coord

    return square_perimeter_coord(x, y, tol=1e-7)


def to_coords(kind: DomainKind, p):
    """Convert a user-level point to the coordinate tuple layout."""
    p = np.asarray(p, dtype=float)
    if kind is DomainKind.SPHERE and p.shape[-1] == 3:
        return vec_to_sphere(p)
    return tuple(p[..., i] for i in range(p.shape[-1]))


def contains(spec, t, p) -> bool:
    """Scalar membership test of point ``p`` in omega(t) (or Gamma(t))."""
    coords = to_coords(spec.kind, np.atleast_1d(p))
    return bool(np.asarray(spec.contains_coords(np.asarray(t, dtype=float), coords)))


def min_feature_timescale(spec) -> float:
    """Bracketing step that any crossing of the region spans at least twice."""
    if isinstance(spec, RegionUnion):
        return min(min_feature_timescale(s) for s in spec.specs)
    if isinstance(spec, ShellRegion):
        return spec.h / (4.0 * (1.0 + spec.base.v_max))
    if spec.a <= 0:
        raise EmptyRegionError("empty region: a must be positive")
    feature = spec.a
    if spec.mode == "interior" and spec.kind in (DomainKind.DISK, DomainKind.SPHERE):
        if spec.eps is None or spec.eps <= 0:
            raise EmptyRegionError("empty region: eps must be positive")
        feature = min(spec.a, 2.0 * spec.eps)
    return feature / (4.0 * (1.0 + spec.v_max))


@dataclass(frozen=True)
class RegionUnion:
    """Finite union of moving regions (OR semantics) on one domain."""

    specs: tuple

    def __post_init__(self):
        specs = tuple(self.specs)
        if not specs:
            raise ValueError("a union needs at least one region")
        kinds = {s.kind for s in specs}
        modes = {s.mode for s in specs}
        if len(kinds) != 1 or len(modes) != 1:
            raise ValueError("all regions of a union must share domain and mode")
        object.__setattr__(self, "specs", specs)

    @property
    def kind(self):
        return self.specs[0].kind

    @property
    def mode(self):
        return self.specs[0].mode

    @property
    def v_max(self):
        return max(s.v_max for s in self.specs)

    def contains_coords(self, t, coords):
        out = self.specs[0].contains_coords(t, coords)
        for s in self.specs[1:]:
            out = out | s.contains_coords(t, coords)
        return out

    def boundary_contains_coords(self, t, coords):
        out = self.specs[0].boundary_contains_coords(t, coords)
        for s in self.specs[1:]:
            out = out | s.boundary_contains_coords(t, coords)
        return out

    def breakpoints(self, t_lo, t_hi):
        return np.unique(np.concatenate([s.breakpoints(t_lo, t_hi) for s in self.specs]))

    def min_feature_timescale(self):
        return min_feature_timescale(self)


# ---------------------------------------------------------------------------
# thin shell around the space-time boundary of Q (interval only)


@dataclass(frozen=True)
class ShellSpec:
    base: MovingDomainSpec
    T: float
    h: float


@dataclass(frozen=True)
class ShellRegion:
    """h-neighbourhood (product metric in (t, x)) of the boundary of
    Q within [0, T] x [0, 1], end caps included."""

    base: MovingDomainSpec
    T: float
    h: float
    segments: np.ndarray = field(repr=False, default=None)

    @property
    def kind(self):
        return self.base.kind

    @property
    def mode(self):
        return "interior"

    @property
    def v_max(self):
        return self.base.v_max

    def distance(self, t, x):
        """Distance from (t, x) to the boundary polyline set."""
        t = np.asarray(t, dtype=float)[..., None]
        x = np.asarray(x, dtype=float)[..., None]
        seg = self.segments
        t0, x0, t1, x1 = seg[:, 0], seg[:, 1], seg[:, 2], seg[:, 3]
        dt, dx = t1 - t0, x1 - x0
        ll = dt * dt + dx * dx
        lam = np.clip(((t - t0) * dt + (x - x0) * dx) / np.where(ll > 0, ll, 1.0), 0.0, 1.0)
        d2 = (t - t0 - lam * dt) ** 2 + (x - x0 - lam * dx) ** 2
        return np.sqrt(d2.min(axis=-1))

    def contains_coords(self, t, coords):
        x = coords[0]
        t_b, x_b = np.broadcast_arrays(np.asarray(t, dtype=float), x)
        out = np.zeros(t_b.shape, dtype=bool)
        # only points in the t-slab can be within h of the set
        near = (t_b > -self.h) & (t_b < self.T + self.h)
        if np.any(near):
            out[near] = self.distance(t_b[near], x_b[near]) < self.h
        return out

    def breakpoints(self, t_lo, t_hi):
        return np.zeros(0)

    def min_feature_timescale(self):
        return min_feature_timescale(self)


def boundary_shell(s: ShellSpec) -> ShellRegion:
    """Space-time shell of thickness h around the boundary of Q on [0, T]."""
    if s.h <= 0:
        raise ValueError("shell thickness h must be positive")
    base = s.base
    if base.kind is not DomainKind.INTERVAL or base.mode != "interior":
        raise ValueError("shells are implemented for interior interval regions")
    feature = base.a if base.a < 1.0 else 1.0
    if s.h >= feature:
        raise ValueError("shell thickness must be below the region's minimal feature")
    knots = np.concatenate([[0.0], base.breakpoints(0.0, s.T), [s.T]])
    left = np.asarray(base.anchor(knots), dtype=float)
    right = left + base.a
    segs = []
    tol = 1e-12
    for i in range(len(knots) - 1):
        for edge, wall in ((left, 0.0), (right, 1.0)):
            p, q = edge[i], edge[i + 1]
            # pieces lying on the walls are not boundary relative to [0, 1]
            if abs(p - wall) <= tol and abs(q - wall) <= tol:
                continue
            segs.append((knots[i], p, knots[i + 1], q))
    for tc, lo, hi in ((0.0, left[0], right[0]), (s.T, left[-1], right[-1])):
        segs.append((tc, lo, tc, hi))
    return ShellRegion(base, s.T, s.h, np.asarray(segs, dtype=float))


def with_changes(spec, **kw):
    return replace(spec, **kw)


__all__ = [
    "EmptyRegionError", "MovingDomainSpec", "RegionUnion", "ShellRegion", "ShellSpec",
    "boundary_shell", "contains", "min_feature_timescale", "to_coords", "with_changes",
]
