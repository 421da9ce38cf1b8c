"""Unit-speed generalised rays on the model domains.

Two layers live here:

* scalar, event-driven tracing (:func:`next_bounce`, :func:`trace`) that
  produces bounce metadata, and
* closed-form evaluators, both scalar (:func:`eval_square_unfolded`,
  :func:`eval_great_circle`, :func:`eval_disk_chord`, :func:`glide`) and
  vectorised over many rays (the ``*Rays`` batch classes), which the control
  checks use for positions.

Disk rays are carried as chord sequences (first bounce angle, opening angle,
time of that bounce); square rays as straight lines in the unfolded plane;
sphere rays as great circles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    CORNER_TOL,
    TANGENT_TOL,
    TWO_PI,
    DomainKind,
    GlancingIncidence,
    NoBoundaryError,
    UnfoldState,
    corner_reflect,
    fold,
    is_square_corner,
    outward_normal,
    reflect_specular,
    square_perimeter_coord,
    square_perimeter_point,
    vec_to_sphere,
    wrap_angle,
)

MAX_BOUNCES = 10**7
INTERIOR = "interior"
GLIDING_CCW = "gliding_ccw"
GLIDING_CW = "gliding_cw"
MODES = (INTERIOR, GLIDING_CCW, GLIDING_CW)


class BounceOverflow(RuntimeError):
    """More than the allowed number of bounces before the requested time."""


@dataclass(frozen=True)
class RayState:
    """A point of a ray: position, unit direction (interior mode) and time.

    Sphere positions are unit 3-vectors and directions unit tangent
    3-vectors.  In gliding mode ``pos`` lies on the boundary and ``dir`` is
    ignored.
    """

    kind: DomainKind
    pos: tuple
    dir: tuple | None = None
    t: float = 0.0
    mode: str = INTERIOR

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind.parse(self.kind))
        object.__setattr__(self, "pos", tuple(float(c) for c in np.atleast_1d(self.pos)))
        if self.dir is not None:
            d = np.atleast_1d(np.asarray(self.dir, dtype=float))
            object.__setattr__(self, "dir", tuple(float(c) for c in d))
        if self.mode not in MODES:
            raise ValueError(f"unknown ray mode {self.mode!r}")
        if self.mode == INTERIOR:
            if self.dir is None:
                raise ValueError("interior rays need a direction")
            if abs(float(np.linalg.norm(self.dir)) - 1.0) > 1e-9:
                raise ValueError("direction must be a unit vector")
        elif self.kind in (DomainKind.INTERVAL, DomainKind.SPHERE):
            raise ValueError(f"gliding is meaningless on the {self.kind.value}")

    def reversed(self) -> "RayState":
        if self.mode == INTERIOR:
            return RayState(self.kind, self.pos, tuple(-c for c in self.dir), self.t)
        flip = GLIDING_CW if self.mode == GLIDING_CCW else GLIDING_CCW
        return RayState(self.kind, self.pos, None, self.t, flip)


@dataclass(frozen=True)
class BounceEvent:
    t: float
    point: tuple
    s: float
    dir_in: tuple
    dir_out: tuple
    transversal: bool
    corner: bool = False


@dataclass(frozen=True)
class DiskChordRay:
    """Disk ray as a chord sequence.

    The ray bounces at angle ``theta0 + k * alpha`` at time
    ``t0 + 2 k sin(alpha / 2)``.  ``alpha == 0`` encodes a gliding ray whose
    sense is ``orientation``.
    """

    theta0: float
    alpha: float
    t0: float = 0.0
    orientation: int = 1

    @property
    def chord_time(self) -> float:
        return 2.0 * math.sin(self.alpha / 2.0)


@dataclass(frozen=True)
class GreatCircleRay:
    """Unit-speed great circle with ascending node ``node`` and inclination ``incl``."""

    node: float
    incl: float
    phase: float = 0.0
    orientation: int = 1


# ---------------------------------------------------------------------------
# closed-form scalar evaluators


def eval_square_unfolded(u: UnfoldState, t: float) -> tuple:
    dt = t - u.t0
    return (fold(u.x0 + dt * u.c), fold(u.y0 + dt * u.s))


def eval_great_circle(r: GreatCircleRay, t: float) -> tuple:
    """(theta, phi) of a great-circle ray at time ``t``."""
    w = t + r.phase
    phi = math.asin(max(-1.0, min(1.0, math.sin(r.incl) * math.sin(w))))
    theta = r.node + r.orientation * math.atan2(math.cos(r.incl) * math.sin(w), math.cos(w))
    return (float(wrap_angle(theta)), phi)


def eval_disk_chord(r: DiskChordRay, t: float) -> tuple:
    x, y = DiskRays.from_chords([r]).coords(np.array([[t]]))
    return (float(x[0, 0]), float(y[0, 0]))


def glide(state: RayState, t: float) -> tuple:
    """Boundary position of a gliding ray at time ``t``."""
    if state.mode == INTERIOR:
        raise ValueError("glide() needs a gliding ray state")
    sign = 1.0 if state.mode == GLIDING_CCW else -1.0
    dt = t - state.t
    if state.kind is DomainKind.DISK:
        theta = math.atan2(state.pos[1], state.pos[0]) + sign * dt
        return (math.cos(theta), math.sin(theta))
    if state.kind is DomainKind.SQUARE:
        s0 = float(square_perimeter_coord(state.pos[0], state.pos[1]))
        if math.isnan(s0):
            raise ValueError("gliding square ray must start on the boundary")
        x, y = square_perimeter_point(s0 + sign * dt)
        return (float(x), float(y))
    raise ValueError(f"gliding is meaningless on the {state.kind.value}")


# ---------------------------------------------------------------------------
# vectorised batches.  ``coords(t)`` takes t broadcastable to (n_rays, k) and
# returns a tuple of coordinate arrays of that shape.


class _Batch:
    kind: DomainKind
    _fields: tuple = ()

    def __len__(self):
        return len(getattr(self, self._fields[0]))

    def take(self, idx):
        return type(self)(*(np.asarray(getattr(self, f))[idx] for f in self._fields))

    def _col(self, name):
        return np.asarray(getattr(self, name))[:, None]


class IntervalRays(_Batch):
    kind = DomainKind.INTERVAL
    _fields = ("x0", "d")

    def __init__(self, x0, d):
        self.x0 = np.asarray(x0, dtype=float).reshape(-1)
        self.d = np.sign(np.asarray(d, dtype=float).reshape(-1))
        if np.any(self.d == 0):
            raise ValueError("interval rays need direction +1 or -1")

    def unfolded(self, t):
        return self._col("x0") + self._col("d") * t

    def coords(self, t):
        return (fold(self.unfolded(t)),)


class DiskRays(_Batch):
    kind = DomainKind.DISK
    _fields = ("theta0", "alpha", "t0", "orientation")

    def __init__(self, theta0, alpha, t0, orientation):
        self.theta0 = np.asarray(theta0, dtype=float).reshape(-1)
        self.alpha = np.asarray(alpha, dtype=float).reshape(-1)
        self.t0 = np.asarray(t0, dtype=float).reshape(-1)
        self.orientation = np.asarray(orientation, dtype=float).reshape(-1)

    @classmethod
    def from_chords(cls, rays):
        rays = list(rays)
        return cls([r.theta0 for r in rays], [r.alpha for r in rays],
                   [r.t0 for r in rays], [r.orientation for r in rays])

    def chord(self, i) -> DiskChordRay:
        return DiskChordRay(float(self.theta0[i]), float(self.alpha[i]),
                            float(self.t0[i]), int(self.orientation[i]))

    @property
    def gliding(self):
        return self.alpha <= 0.0

    @property
    def chord_time(self):
        return 2.0 * np.sin(self.alpha / 2.0)

    @classmethod
    def from_points(cls, px, py, dx, dy, t=0.0):
        """Rays through points (px, py) with directions (dx, dy) at time t.

        Tangential boundary incidences (|d.n| <= tol) become gliding rays.
        """
        px, py, dx, dy = (np.asarray(a, dtype=float).reshape(-1) for a in (px, py, dx, dy))
        t = np.broadcast_to(np.asarray(t, dtype=float), px.shape)
        b = px * dx + py * dy
        c = px * px + py * py - 1.0
        disc = np.sqrt(np.maximum(b * b - c, 0.0))
        # forward distance to the circle, written to avoid cancellation
        s_f = np.where(b <= 0.0, disc - b, np.where(disc + b > 0.0, -c / np.maximum(disc + b, 1e-300), 0.0))
        s_f = np.maximum(s_f, 0.0)
        qx, qy = px + s_f * dx, py + s_f * dy
        th1 = np.arctan2(qy, qx)
        half = np.mod(th1 + 0.5 * math.pi - np.arctan2(dy, dx), TWO_PI)
        half = np.where(half > math.pi, 0.0, half)
        alpha = 2.0 * half
        glancing = np.sin(half) <= TANGENT_TOL
        chord = 2.0 * np.sin(half)
        orient_g = np.where(qx * dy - qy * dx >= 0.0, 1.0, -1.0)
        theta0 = np.where(glancing, th1, th1 - alpha)
        t0 = np.where(glancing, t + s_f, t + s_f - chord)
        alpha = np.where(glancing, 0.0, alpha)
        orient = np.where(glancing, orient_g, 1.0)
        return cls(theta0, alpha, t0, orient)

    def coords(self, t):
        alpha = self._col("alpha")
        glide_mask = alpha <= 0.0
        L = 2.0 * np.sin(alpha / 2.0)
        Ls = np.where(glide_mask, 1.0, L)
        u = t - self._col("t0")
        k = np.floor(u / Ls)
        tau = u - k * Ls
        thk = self._col("theta0") + k * alpha
        mid = thk + 0.5 * alpha
        x = np.cos(thk) - tau * np.sin(mid)
        y = np.sin(thk) + tau * np.cos(mid)
        if np.any(glide_mask):
            thg = self._col("theta0") + self._col("orientation") * u
            x = np.where(glide_mask, np.cos(thg), x)
            y = np.where(glide_mask, np.sin(thg), y)
        return x, y


class SquareRays(_Batch):
    """Unfolded square rays; ``glide`` = +-1 marks perimeter-gliding rays
    whose perimeter coordinate at t = 0 is stored in ``x0``."""

    kind = DomainKind.SQUARE
    _fields = ("x0", "y0", "c", "s", "glide")

    def __init__(self, x0, y0, c, s, glide=None):
        self.x0 = np.asarray(x0, dtype=float).reshape(-1)
        self.y0 = np.asarray(y0, dtype=float).reshape(-1)
        self.c = np.asarray(c, dtype=float).reshape(-1)
        self.s = np.asarray(s, dtype=float).reshape(-1)
        self.glide = np.zeros_like(self.x0) if glide is None else np.asarray(glide, dtype=float).reshape(-1)

    def coords(self, t):
        x = fold(self._col("x0") + self._col("c") * t)
        y = fold(self._col("y0") + self._col("s") * t)
        g = self._col("glide")
        if np.any(g != 0):
            gx, gy = square_perimeter_point(self._col("x0") + g * t)
            x = np.where(g != 0, gx, x)
            y = np.where(g != 0, gy, y)
        return np.asarray(x), np.asarray(y)


class SphereRays(_Batch):
    kind = DomainKind.SPHERE
    _fields = ("node", "incl", "phase", "orientation")

    def __init__(self, node, incl, phase, orientation=None):
        self.node = np.asarray(node, dtype=float).reshape(-1)
        self.incl = np.asarray(incl, dtype=float).reshape(-1)
        self.phase = np.asarray(phase, dtype=float).reshape(-1)
        self.orientation = (np.ones_like(self.node) if orientation is None
                            else np.asarray(orientation, dtype=float).reshape(-1))

    def latitude(self, t):
        return np.arcsin(np.clip(np.sin(self._col("incl")) * np.sin(t + self._col("phase")), -1.0, 1.0))

    def longitude(self, t):
        w = t + self._col("phase")
        return wrap_angle(self._col("node") + self._col("orientation")
                          * np.arctan2(np.cos(self._col("incl")) * np.sin(w), np.cos(w)))

    def coords(self, t):
        return self.longitude(t), self.latitude(t)


def rays_from_state(state: RayState):
    """Closed-form batch (length 1) describing the ray through ``state``."""
    k = state.kind
    if k is DomainKind.INTERVAL:
        return IntervalRays([state.pos[0] - state.dir[0] * state.t], [state.dir[0]])
    if k is DomainKind.SQUARE:
        if state.mode != INTERIOR:
            s0 = float(square_perimeter_coord(state.pos[0], state.pos[1]))
            g = 1.0 if state.mode == GLIDING_CCW else -1.0
            return SquareRays([s0 - g * state.t], [0.0], [0.0], [0.0], [g])
        c, s = state.dir
        return SquareRays([state.pos[0] - c * state.t], [state.pos[1] - s * state.t], [c], [s])
    if k is DomainKind.DISK:
        if state.mode != INTERIOR:
            g = 1.0 if state.mode == GLIDING_CCW else -1.0
            th = math.atan2(state.pos[1], state.pos[0])
            return DiskRays([th], [0.0], [state.t], [g])
        return DiskRays.from_points(state.pos[0], state.pos[1], state.dir[0], state.dir[1], state.t)
    gc = great_circle_from_state(state)
    return SphereRays([gc.node], [gc.incl], [gc.phase], [gc.orientation])


def great_circle_from_state(state: RayState) -> GreatCircleRay:
    p = np.asarray(state.pos, dtype=float)
    p = p / np.linalg.norm(p)
    d = np.asarray(state.dir, dtype=float)
    d = d - (d @ p) * p
    d = d / np.linalg.norm(d)
    nrm = np.cross(p, d)
    cos_i = float(np.clip(nrm[2], -1.0, 1.0))
    orientation = 1
    if cos_i < 0.0:
        orientation, nrm, cos_i = -1, -nrm, -cos_i
    incl = math.acos(cos_i)
    if incl < 1e-15:
        node = 0.0
        w = math.atan2(p[1], p[0]) - node
        if orientation < 0:
            w = -w
        return GreatCircleRay(node, 0.0, w - state.t, orientation)
    # ascending node direction: z-axis x normal (points where z = 0 going up)
    n_hat = np.cross([0.0, 0.0, 1.0], nrm)
    n_hat /= np.linalg.norm(n_hat)
    node = math.atan2(n_hat[1], n_hat[0])
    e_hat = np.cross(nrm, n_hat)
    w = math.atan2(float(p @ e_hat), float(p @ n_hat))
    if orientation < 0:
        # a westward traversal of (node, incl) is the eastward circle mirrored
        node = node + math.pi
        n_hat = -n_hat
        e_hat = np.cross(-nrm, n_hat)
        w = math.atan2(float(p @ e_hat), float(p @ n_hat))
    return GreatCircleRay(float(node), incl, w - state.t, orientation)


def great_circle_state(r: GreatCircleRay, t: float) -> RayState:
    """Position (unit vector) and unit tangent of a great-circle ray at time t."""
    w = t + r.phase
    n_hat = np.array([math.cos(r.node), math.sin(r.node), 0.0])
    e_hat = r.orientation * np.array([-math.sin(r.node), math.cos(r.node), 0.0])
    up = math.cos(r.incl) * e_hat + np.array([0.0, 0.0, math.sin(r.incl)])
    p = math.cos(w) * n_hat + math.sin(w) * up
    d = -math.sin(w) * n_hat + math.cos(w) * up
    return RayState(DomainKind.SPHERE, tuple(p / np.linalg.norm(p)), tuple(d / np.linalg.norm(d)), t)


# ---------------------------------------------------------------------------
# event-driven tracing


def _disk_chord_for_state(state: RayState) -> DiskChordRay:
    batch = rays_from_state(state)
    return batch.chord(0)


def next_bounce(state: RayState) -> BounceEvent:
    """First boundary contact of an interior ray after (or at) ``state.t``."""
    k = state.kind
    if k is DomainKind.SPHERE:
        raise NoBoundaryError("boundaryless: the sphere has no bounces")
    if state.mode != INTERIOR:
        raise ValueError("next_bounce() needs an interior ray")
    if k is DomainKind.INTERVAL:
        x, d = state.pos[0], state.dir[0]
        dt = (1.0 - x) if d > 0 else x
        p = 1.0 if d > 0 else 0.0
        return BounceEvent(state.t + dt, (p,), p, (d,), (-d,), True, False)
    if k is DomainKind.DISK:
        ch = _disk_chord_for_state(state)
        if ch.alpha <= 0.0:
            th = ch.theta0
            p = (math.cos(th), math.sin(th))
            return BounceEvent(ch.t0, p, float(wrap_angle(th)), state.dir, state.dir, False)
        th1 = ch.theta0 + ch.alpha
        L = ch.chord_time
        t_hit = ch.t0 + L
        if t_hit < state.t - 1e-12:  # already past: take the next one
            t_hit += L
            th1 += ch.alpha
        p = np.array([math.cos(th1), math.sin(th1)])
        mid = th1 - 0.5 * ch.alpha
        d_in = np.array([-math.sin(mid), math.cos(mid)])
        d_out = reflect_specular(d_in, p)
        return BounceEvent(t_hit, tuple(float(c) for c in p), float(wrap_angle(th1)),
                           tuple(float(c) for c in d_in), tuple(float(c) for c in d_out), True)
    # square
    x, y = state.pos
    c, s = state.dir
    tx = (1.0 - x) / c if c > TANGENT_TOL else (-x / c if c < -TANGENT_TOL else math.inf)
    ty = (1.0 - y) / s if s > TANGENT_TOL else (-y / s if s < -TANGENT_TOL else math.inf)
    dt = max(min(tx, ty), 0.0)
    px = min(max(x + dt * c, 0.0), 1.0)
    py = min(max(y + dt * s, 0.0), 1.0)
    d = np.array([c, s])
    corner = (abs(tx - ty) <= CORNER_TOL) or is_square_corner((px, py))
    if corner:
        px, py = round(px), round(py)
        d_out = corner_reflect(d)
        transversal = True
    else:
        n = outward_normal(DomainKind.SQUARE, (px, py))
        try:
            d_out = reflect_specular(d, n)
            transversal = True
        except GlancingIncidence:
            d_out, transversal = d, False
    s_coord = float(square_perimeter_coord(px, py))
    return BounceEvent(state.t + dt, (float(px), float(py)), s_coord, (c, s),
                       tuple(float(v) for v in d_out), transversal, corner)


@dataclass
class Trajectory:
    """Bounce events plus a closed-form evaluator for positions."""

    kind: DomainKind
    t_start: float
    t_end: float
    events: list
    rays: object
    mode: str = INTERIOR
    flags: list = field(default_factory=list)

    def position(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        coords = self.rays.coords(t[None, :])
        if self.kind is DomainKind.SPHERE:
            from .geometry import sphere_to_vec

            return sphere_to_vec(coords[0][0], coords[1][0])
        return np.stack([c[0] for c in coords], axis=-1)

    def polyline(self, samples_per_unit: int = 64) -> np.ndarray:
        """Vertices suitable for drawing: bounce points for straight segments,
        dense samples for arcs."""
        if self.kind in (DomainKind.INTERVAL, DomainKind.SQUARE) and self.mode == INTERIOR:
            ts = [self.t_start] + [e.t for e in self.events] + [self.t_end]
        elif self.kind is DomainKind.DISK and self.mode == INTERIOR and not np.any(self.rays.gliding):
            ts = [self.t_start] + [e.t for e in self.events] + [self.t_end]
        else:
            n = max(2, int((self.t_end - self.t_start) * samples_per_unit) + 1)
            ts = np.linspace(self.t_start, self.t_end, n)
        return self.position(np.asarray(ts))


def trace(state: RayState, t_max: float, max_bounces: int = MAX_BOUNCES) -> Trajectory:
    """Trace a ray from ``state`` until ``t_max``; deterministic, unit speed."""
    if not t_max > state.t:
        raise ValueError("t_max must exceed the starting time")
    k = state.kind
    rays = rays_from_state(state)
    if k is DomainKind.SPHERE:
        return Trajectory(k, state.t, t_max, [], rays)
    if state.mode != INTERIOR:
        flags = []
        if k is DomainKind.SQUARE:
            s0 = float(square_perimeter_coord(state.pos[0], state.pos[1]))
            sign = 1.0 if state.mode == GLIDING_CCW else -1.0
            s1 = s0 + sign * (t_max - state.t)
            if math.floor(min(s0, s1)) != math.floor(max(s0, s1)) or abs(s0 - round(s0)) < CORNER_TOL:
                flags.append("corner_glide")
        return Trajectory(k, state.t, t_max, [], rays, state.mode, flags)
    if k is DomainKind.DISK:
        ch = rays.chord(0)
        if ch.alpha <= 0.0:
            flags = ["glancing_start"]
            mode = GLIDING_CCW if ch.orientation > 0 else GLIDING_CW
            return Trajectory(k, state.t, t_max, [], rays, mode, flags)
        return Trajectory(k, state.t, t_max, _disk_events(ch, state.t, t_max, max_bounces), rays)
    events = []
    cur = state
    while True:
        ev = next_bounce(cur)
        if ev.t > t_max:
            break
        events.append(ev)
        if len(events) > max_bounces:
            raise BounceOverflow(f"more than {max_bounces} bounces before t = {t_max}")
        cur = RayState(k, ev.point, ev.dir_out, ev.t)
        if not ev.transversal:
            break
    return Trajectory(k, state.t, t_max, events, rays)


def _disk_events(ch: DiskChordRay, t_from: float, t_max: float, max_bounces: int) -> list:
    L = ch.chord_time
    k_lo = math.floor((t_from - ch.t0) / L) + 1
    k_hi = math.floor((t_max - ch.t0) / L)
    if k_hi - k_lo + 1 > max_bounces:
        raise BounceOverflow(f"more than {max_bounces} bounces before t = {t_max}")
    events = []
    transversal = math.sin(ch.alpha / 2.0) > TANGENT_TOL
    for kk in range(k_lo, k_hi + 1):
        th = ch.theta0 + kk * ch.alpha
        mid_in = th - 0.5 * ch.alpha
        mid_out = th + 0.5 * ch.alpha
        events.append(BounceEvent(
            ch.t0 + kk * L, (math.cos(th), math.sin(th)), float(wrap_angle(th)),
            (-math.sin(mid_in), math.cos(mid_in)), (-math.sin(mid_out), math.cos(mid_out)),
            transversal))
    return events


def state_at(traj: Trajectory, t: float) -> RayState:
    """Reconstruct the interior ray state of a trajectory at time t (not at a bounce)."""
    h = 1e-7
    p = traj.position([t])[0]
    q = traj.position([t + h])[0]
    d = (q - p) / np.linalg.norm(q - p)
    if traj.kind is DomainKind.SPHERE:
        d = d - (d @ p) * p
        d /= np.linalg.norm(d)
    return RayState(traj.kind, tuple(p), tuple(d), t)


__all__ = [
    "BounceEvent", "BounceOverflow", "DiskChordRay", "DiskRays", "GLIDING_CCW", "GLIDING_CW",
    "GreatCircleRay", "INTERIOR", "IntervalRays", "RayState", "SphereRays", "SquareRays",
    "Trajectory", "eval_disk_chord", "eval_great_circle", "eval_square_unfolded", "glide",
    "great_circle_from_state", "great_circle_state", "next_bounce", "rays_from_state",
    "state_at", "trace", "vec_to_sphere",
]
