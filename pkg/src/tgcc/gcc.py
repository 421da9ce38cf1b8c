"""t-GCC checks and control-time estimation.

A ray *hits* the moving region Q at the first time t in (0, horizon) at
which its position lies in omega(t).  The control time is the supremum of
these first-hit times over all rays; here it is estimated from below by
sampling initial conditions and refining the worst ones by a compass
pattern search.

Rays are handled in batches described by a family code and three real
parameters per ray:

========  ==========================  ==============================
domain    regular rays                gliding rays (family GLIDING)
========  ==========================  ==============================
interval  (x0, d, -): x0 + d t folded  n/a
disk      (theta0, alpha, t0) chords  (theta0, orientation, -)
square    (x0, y0, psi) unfolded      (s0, orientation, -)
sphere    (node, incl, phase)         n/a (incl in [0, pi])
========  ==========================  ==============================
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    TANGENT_TOL,
    TWO_PI,
    DomainKind,
    NoBoundaryError,
    fold,
    fold_slope,
    square_perimeter_coord,
    square_perimeter_point,
)
from .obsdomain import MovingDomainSpec, RegionUnion, min_feature_timescale
from .rayflow import (
    GLIDING_CCW,
    GLIDING_CW,
    INTERIOR,
    DiskRays,
    GreatCircleRay,
    IntervalRays,
    RayState,
    SphereRays,
    SquareRays,
    great_circle_from_state,
    great_circle_state,
    rays_from_state,
)

HIT_AT_START = 1e-12
BISECT_TOL = 1e-10
ELEMENT_BUDGET = 4_000_000
BOUNCE_CAP = 10**7

# family codes
GRID, GLIDING, POLYGON, PRECESSION, RATIONAL, AXIS, EQUATORIAL, CRITICAL = range(8)
FAMILY_NAMES = ("grid", "gliding", "polygon", "precession", "rational_slope",
                "axis_parallel", "equatorial", "critical")
# hit intervals shorter than this are grazing contacts with the region's edge
GRAZE_TOL = 1e-12


@dataclass(frozen=True)
class RaySampling:
    """Sampling densities for the worst-ray search.

    Grid families: interval ``n_interval`` starts per direction; disk
    ``disk_radii x disk_angles`` start points times ``disk_dirs``
    directions; square ``square_grid^2`` start points times
    ``square_dirs`` directions; sphere ``sphere_n^3`` (node, inclination,
    phase).  Special families (gliding rays, disk polygons with n <= n_max,
    rational square slopes with p, q <= q_max, axis-parallel rays,
    equatorial sphere rays) are always included.
    """

    n_interval: int = 512
    disk_radii: int = 16
    disk_angles: int = 16
    disk_dirs: int = 256
    disk_glide: int = 64
    n_max: int = 64
    polygon_phases: int = 16
    polygon_offsets: int = 4
    square_grid: int = 23
    square_dirs: int = 256
    q_max: int = 12
    slope_offsets: int = 32
    square_glide: int = 64
    sphere_n: int = 64
    seed: int = 0
    refine_top: int = 4
    refine_levels: int = 40
    threads: int = 1

    def scaled(self, factor: float) -> "RaySampling":
        """Coarser/finer copy (grid densities only; special families kept)."""
        def sc(n, lo=2):
            return max(lo, int(round(n * factor)))

        from dataclasses import replace

        return replace(self, n_interval=sc(self.n_interval), disk_radii=sc(self.disk_radii),
                       disk_angles=sc(self.disk_angles), disk_dirs=sc(self.disk_dirs, 4),
                       square_grid=sc(self.square_grid), square_dirs=sc(self.square_dirs, 4),
                       sphere_n=sc(self.sphere_n, 4))


@dataclass
class RaySet:
    kind: DomainKind
    family: np.ndarray
    params: np.ndarray

    def __len__(self):
        return len(self.family)

    def take(self, idx) -> "RaySet":
        return RaySet(self.kind, self.family[idx], self.params[idx])

    @staticmethod
    def concat(kind, parts) -> "RaySet":
        parts = [p for p in parts if len(p[0])]
        fam = np.concatenate([np.full(len(p[1]), p[0][0], dtype=int) if np.ndim(p[0]) == 1 and len(p[0]) == 1
                              else np.asarray(p[0], dtype=int) for p in parts])
        par = np.concatenate([np.asarray(p[1], dtype=float).reshape(-1, 3) for p in parts])
        return RaySet(kind, fam, par)


@dataclass(frozen=True)
class WorstRay:
    family: str
    params: tuple
    state: RayState

    def describe(self) -> str:
        return self.family + ":" + ";".join(repr(float(p)) for p in self.params)


@dataclass
class TgccVerdict:
    """Result of a t-GCC check or a control-time estimate.

    ``t0_estimate`` is a sampling lower bound on the control time (``inf``
    when some sampled ray never hits before the horizon).
    """

    satisfied: bool
    T: float
    t0_estimate: float
    worst_ray: WorstRay | None
    margin: float
    status: str
    hit_times: np.ndarray | None = field(default=None, repr=False)
    n_rays: int = 0
    n_indeterminate: int = 0
    label: str = "sampling lower bound"


# ---------------------------------------------------------------------------
# ray batches from parameters


def build_batch(rs: RaySet):
    k = rs.kind
    p = rs.params
    glide = rs.family == GLIDING
    if k is DomainKind.INTERVAL:
        return IntervalRays(p[:, 0], p[:, 1])
    if k is DomainKind.DISK:
        alpha = np.where(glide, 0.0, np.clip(p[:, 1], 1e-9, TWO_PI - 1e-9))
        orient = np.where(glide, np.sign(p[:, 1]) + (p[:, 1] == 0), 1.0)
        t0 = np.where(glide, 0.0, p[:, 2])
        return DiskRays(p[:, 0], alpha, t0, orient)
    if k is DomainKind.SQUARE:
        g = np.where(glide, np.sign(p[:, 1]) + (p[:, 1] == 0), 0.0)
        c = np.where(glide, 0.0, np.cos(p[:, 2]))
        s = np.where(glide, 0.0, np.sin(p[:, 2]))
        return SquareRays(p[:, 0], np.where(glide, 0.0, p[:, 1]), c, s, g)
    return SphereRays(p[:, 0], np.clip(p[:, 1], 0.0, math.pi), p[:, 2])


def ray_state(kind, family: int, params) -> RayState:
    """The ray with the given parameters, as a state at t = 0."""
    kind = DomainKind.parse(kind)
    p = [float(x) for x in params]
    if kind is DomainKind.INTERVAL:
        d = p[1] * _slope_ahead(p[0], p[1])
        return RayState(kind, (fold(p[0]),), (math.copysign(1.0, d),), 0.0)
    if kind is DomainKind.DISK:
        b = build_batch(RaySet(kind, np.array([family]), np.array([p])))
        x, y = b.coords(np.array([[0.0]]))
        pos = (float(x[0, 0]), float(y[0, 0]))
        if family == GLIDING:
            return RayState(kind, pos, None, 0.0, GLIDING_CCW if p[1] >= 0 else GLIDING_CW)
        alpha, L = b.alpha[0], 2.0 * math.sin(b.alpha[0] / 2.0)
        kk = math.floor(-b.t0[0] / L)
        mid = b.theta0[0] + kk * alpha + 0.5 * alpha
        return RayState(kind, pos, (-math.sin(mid), math.cos(mid)), 0.0)
    if kind is DomainKind.SQUARE:
        if family == GLIDING:
            x, y = square_perimeter_point(p[0])
            return RayState(kind, (float(x), float(y)), None, 0.0, GLIDING_CCW if p[1] >= 0 else GLIDING_CW)
        c = math.cos(p[2]) * _slope_ahead(p[0], math.cos(p[2]))
        s = math.sin(p[2]) * _slope_ahead(p[1], math.sin(p[2]))
        return RayState(kind, (fold(p[0]), fold(p[1])), (c, s), 0.0)
    return great_circle_state(GreatCircleRay(p[0], min(max(p[1], 0.0), math.pi), p[2]), 0.0)


def _slope_ahead(u0: float, c: float) -> float:
    # branch of the fold just after t = 0 (matters when starting on a wall)
    return float(fold_slope(u0 + math.copysign(1e-9, c)))


def params_from_state(state: RayState) -> tuple:
    """(family, params) describing the ray through ``state`` from time 0."""
    k = state.kind
    if k is DomainKind.SPHERE:
        g = great_circle_from_state(state)
        # a westward circle of inclination i is the eastward formula with pi - i
        incl = g.incl if g.orientation > 0 else math.pi - g.incl
        return GRID, (float(g.node), float(incl), float(g.phase))
    b = rays_from_state(state)
    if k is DomainKind.INTERVAL:
        return GRID, (float(b.x0[0]), float(b.d[0]), 0.0)
    if k is DomainKind.DISK:
        if b.alpha[0] <= 0.0:
            th = b.theta0[0] - b.orientation[0] * b.t0[0]
            return GLIDING, (float(th), float(b.orientation[0]), 0.0)
        return GRID, (float(b.theta0[0]), float(b.alpha[0]), float(b.t0[0]))
    if b.glide[0] != 0:
        return GLIDING, (float(b.x0[0]), float(b.glide[0]), 0.0)
    return GRID, (float(b.x0[0]), float(b.y0[0]), math.atan2(b.s[0], b.c[0]))


# ---------------------------------------------------------------------------
# sampling


def sample_rays(kind, sampling: RaySampling, spec=None) -> RaySet:
    kind = DomainKind.parse(kind)
    rng = np.random.default_rng(sampling.seed)
    parts = []
    if kind is DomainKind.INTERVAL:
        x = np.linspace(0.0, 1.0, sampling.n_interval)
        for d in (1.0, -1.0):
            parts.append(([GRID], np.column_stack([x, np.full_like(x, d), np.zeros_like(x)])))
        if isinstance(spec, MovingDomainSpec) and spec.mode == "interior":
            parts.append(([CRITICAL], _interval_critical_rays(spec)))
    elif kind is DomainKind.DISK:
        parts = _disk_families(sampling, rng, spec)
    elif kind is DomainKind.SQUARE:
        parts = _square_families(sampling, rng)
    else:
        parts = _sphere_families(sampling, rng)
    return RaySet.concat(kind, parts)


def _interval_critical_rays(spec: MovingDomainSpec) -> np.ndarray:
    """Rays through the corners of the space-time region Q.

    First-hit times are piecewise linear in the starting point with jumps at
    rays that graze a corner of Q, so the supremum is attained on these.
    """
    span = 4.0
    if spec.v > 0 and spec.a < 1.0:
        span = max(span, 3.0 * spec.period_1d)
    times = np.concatenate([[0.0], spec.breakpoints(0.0, span)])
    left = np.asarray(spec.anchor(times), dtype=float)
    pts = [(t, x) for t, l in zip(times, left) for x in (l, l + spec.a)]
    rows = []
    for t, x in pts:
        for d in (1.0, -1.0):
            rows.append((float(np.mod(x - d * t, 2.0)), d, 0.0))
    return np.unique(np.array(rows), axis=0)


def _disk_families(sp: RaySampling, rng, spec):
    parts = []
    r = np.linspace(0.0, 1.0, sp.disk_radii)
    phi = TWO_PI * np.arange(sp.disk_angles) / sp.disk_angles
    psi = TWO_PI * (np.arange(sp.disk_dirs) + rng.uniform()) / sp.disk_dirs
    R, PHI, PSI = np.meshgrid(r, phi, psi, indexing="ij")
    R, PHI, PSI = R.ravel(), PHI.ravel(), PSI.ravel()
    # the centre needs only one angle
    keep = (R > 0) | (PHI == 0)
    R, PHI, PSI = R[keep], PHI[keep], PSI[keep]
    b = DiskRays.from_points(R * np.cos(PHI), R * np.sin(PHI), np.cos(PSI), np.sin(PSI))
    g = b.alpha <= 0
    parts.append((np.where(g, GLIDING, GRID), np.column_stack(
        [b.theta0, np.where(g, b.orientation, b.alpha), np.where(g, 0.0, b.t0)])))
    th = TWO_PI * np.arange(sp.disk_glide) / sp.disk_glide
    for o in (1.0, -1.0):
        parts.append(([GLIDING], np.column_stack([th, np.full_like(th, o), np.zeros_like(th)])))
    alphas = []
    for n in range(2, sp.n_max + 1):
        alphas.append(TWO_PI / n)
        if n > 2:
            alphas.append(TWO_PI - TWO_PI / n)
    parts.append(([POLYGON], _chord_family(np.array(alphas), sp.polygon_phases, sp.polygon_offsets)))
    if spec is not None:
        alphas = _precession_alphas(spec)
        if alphas:
            parts.append(([PRECESSION], _chord_family(np.array(alphas), 64, 8)))
    return parts


def _chord_family(alphas, n_phase, n_off):
    th = TWO_PI * np.arange(n_phase) / n_phase
    off = np.arange(n_off) / n_off
    A, TH, OFF = np.meshgrid(alphas, th, off, indexing="ij")
    A, TH, OFF = A.ravel(), TH.ravel(), OFF.ravel()
    return np.column_stack([TH, A, -OFF * 2.0 * np.sin(A / 2.0)])


def _precession_alphas(spec):
    """Opening angles whose bounce pattern co-rotates with the window."""
    from .paperlib.closed_forms import invert_precession_ccw, invert_precession_cw

    specs = spec.specs if isinstance(spec, RegionUnion) else (spec,)
    out = []
    for s in specs:
        v = getattr(s, "v", 0.0)
        if not isinstance(s, MovingDomainSpec) or v <= 0:
            continue
        if v > 1.0:
            out.append(invert_precession_ccw(v))
        out.append(invert_precession_cw(v))
    return out


def _square_families(sp: RaySampling, rng):
    parts = []
    g = np.linspace(0.0, 1.0, sp.square_grid)
    psi = TWO_PI * (np.arange(sp.square_dirs) + rng.uniform()) / sp.square_dirs
    X, Y, PSI = np.meshgrid(g, g, psi, indexing="ij")
    parts.append(([GRID], np.column_stack([X.ravel(), Y.ravel(), PSI.ravel()])))
    off = (np.arange(sp.slope_offsets) + 0.5) / sp.slope_offsets
    slopes = []
    for p in range(0, sp.q_max + 1):
        for q in range(0, sp.q_max + 1):
            if (p, q) != (0, 0) and math.gcd(p, q) == 1:
                for sx in (1, -1):
                    for sy in (1, -1):
                        if (sx < 0 and q == 0) or (sy < 0 and p == 0):
                            continue
                        slopes.append(math.atan2(sy * p, sx * q))
    slopes = np.array(slopes)
    axis = np.isclose(np.mod(slopes, math.pi / 2), 0.0) | np.isclose(np.mod(slopes, math.pi / 2), math.pi / 2)
    for fam, sl in ((RATIONAL, slopes[~axis]), (AXIS, slopes[axis])):
        S, O = np.meshgrid(sl, off, indexing="ij")
        S, O = S.ravel(), O.ravel()
        # start on the bottom edge and on the left edge
        parts.append(([fam], np.column_stack([O, np.zeros_like(O), S])))
        parts.append(([fam], np.column_stack([np.zeros_like(O), O, S])))
    s0 = 4.0 * np.arange(sp.square_glide) / sp.square_glide
    for o in (1.0, -1.0):
        parts.append(([GLIDING], np.column_stack([s0, np.full_like(s0, o), np.zeros_like(s0)])))
    return parts


def _sphere_families(sp: RaySampling, rng):
    n = sp.sphere_n
    node = TWO_PI * (np.arange(n) + rng.uniform()) / n
    incl = math.pi * np.arange(n) / n
    phase = TWO_PI * (np.arange(n) + rng.uniform()) / n
    N, I, P = np.meshgrid(node, incl, phase, indexing="ij")
    parts = [([GRID], np.column_stack([N.ravel(), I.ravel(), P.ravel()]))]
    th = TWO_PI * np.arange(64) / 64
    for i in (0.0, math.pi):
        parts.append(([EQUATORIAL], np.column_stack([th, np.full_like(th, i), np.zeros_like(th)])))
    return parts


# ---------------------------------------------------------------------------
# first-hit times


def _inside(spec, batch, t):
    """Membership of the rays' positions at times t (broadcast (n, k))."""
    if (isinstance(spec, MovingDomainSpec) and spec.kind is DomainKind.SPHERE
            and isinstance(batch, SphereRays)):
        # cheap latitude prefilter: |phi| < eps  <=>  |sin i sin w| < sin eps
        z = np.sin(batch._col("incl")) * np.sin(t + batch._col("phase"))
        band = np.abs(z) < math.sin(min(spec.eps, math.pi / 2))
        out = np.zeros(band.shape, dtype=bool)
        if np.any(band):
            if spec.a >= TWO_PI:
                return band
            tb = np.broadcast_to(t, band.shape)
            rows, cols = np.nonzero(band)
            sub_t = tb[rows, cols]
            lon = batch.take(rows).longitude(sub_t[:, None])[:, 0]
            out[rows, cols] = spec._angular(lon, sub_t)
        return out
    return spec.contains_coords(t, batch.coords(t))


def _hit_times_generic(spec, batch, horizon: float) -> np.ndarray:
    n = len(batch)
    out = np.full(n, math.inf)
    if n == 0:
        return out
    tau = min_feature_timescale(spec)
    start = _inside(spec, batch, np.zeros((n, 1)))[:, 0]
    out[start] = HIT_AT_START
    active = np.nonzero(~start)[0]
    k_total = int(math.ceil(horizon / tau))
    k = 0  # index of the last examined grid time
    while active.size and k < k_total:
        width = max(1, min(k_total - k, ELEMENT_BUDGET // max(active.size, 1)))
        ks = np.arange(k + 1, k + width + 1)
        ts = np.minimum(ks * tau, horizon)
        sub = batch.take(active)
        ins = _inside(spec, sub, ts[None, :])
        any_in = ins.any(axis=1)
        if np.any(any_in):
            rows = np.nonzero(any_in)[0]
            first = ins[rows].argmax(axis=1)
            hi = ts[first]
            lo = np.where(first > 0, ts[np.maximum(first - 1, 0)], k * tau)
            out[active[rows]] = _bisect(spec, sub.take(rows), lo, hi)
            active = active[~any_in]
        k += width
    out[out >= horizon] = math.inf
    return out


def _bisect(spec, batch, lo, hi):
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    while True:
        gap = hi - lo
        if np.all(gap <= BISECT_TOL):
            return hi
        mid = 0.5 * (lo + hi)
        ins = _inside(spec, batch, mid[:, None])[:, 0]
        hi = np.where(ins, mid, hi)
        lo = np.where(ins, lo, mid)


def _hit_times_interval_exact(spec: MovingDomainSpec, batch: IntervalRays, horizon: float) -> np.ndarray:
    """Exact first-hit times for the reflecting 1D window (piecewise linear)."""
    kinks = spec.breakpoints(0.0, horizon)
    out = np.full(len(batch), math.inf)
    a = spec.a
    for i in range(len(batch)):
        x0, d = float(batch.x0[i]), float(batch.d[i])
        # times where the unfolded coordinate crosses an integer
        u0, u1 = x0, x0 + d * horizon
        m_lo, m_hi = math.floor(min(u0, u1)), math.ceil(max(u0, u1))
        bounces = [(m - x0) / d for m in range(m_lo, m_hi + 1)]
        times = np.unique(np.concatenate([[0.0, horizon], kinks,
                                          [b for b in bounces if 0.0 < b < horizon]]))
        x_start = float(fold(x0))
        if x_start > spec.anchor(0.0) and x_start < spec.anchor(0.0) + a:
            out[i] = HIT_AT_START
            continue
        for ta, tb in zip(times[:-1], times[1:]):
            tm = 0.5 * (ta + tb)
            xa = float(fold(x0 + d * ta))
            slope = d * float(fold_slope(x0 + d * tm))
            la = float(spec.anchor(ta))
            w = (float(spec.anchor(tb)) - la) / (tb - ta)
            # x - L > 0 and L + a - x > 0 on (ta, tb), both linear in s = t - ta
            lo, hi = 0.0, tb - ta
            ok = True
            for c0, c1 in ((xa - la, slope - w), (la + a - xa, w - slope)):
                if c1 == 0.0:
                    if c0 <= 0.0:
                        ok = False
                elif c1 > 0.0:
                    lo = max(lo, -c0 / c1)
                else:
                    hi = min(hi, -c0 / c1)
            if ok and lo < hi - GRAZE_TOL:
                out[i] = ta + lo if ta + lo > 0.0 else HIT_AT_START
                break
    out[out >= horizon] = math.inf
    return out


def hit_times(spec, rays: RaySet, horizon: float, threads: int = 1) -> np.ndarray:
    """First-hit times of every ray of ``rays`` before ``horizon`` (inf: none)."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if spec.mode == "boundary":
        return boundary_hit_times(spec, rays, horizon)[0]
    batch = build_batch(rays)
    exact = (isinstance(spec, MovingDomainSpec) and spec.kind is DomainKind.INTERVAL)

    def work(idx):
        sub = batch.take(idx)
        if exact:
            return _hit_times_interval_exact(spec, sub, horizon)
        return _hit_times_generic(spec, sub, horizon)

    n = len(rays)
    threads = max(1, int(threads))
    if threads == 1 or n < 2 * threads:
        return work(np.arange(n))
    chunks = np.array_split(np.arange(n), threads)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        results = list(ex.map(work, chunks))
    return np.concatenate(results)


def first_hit_time(domain, spec, ray: RayState, horizon: float):
    """First time in (0, horizon) at which ``ray`` lies in omega(t); None if none."""
    domain = DomainKind.parse(domain)
    if ray.kind is not domain or spec.kind is not domain:
        raise ValueError("ray, region and domain disagree")
    fam, params = params_from_state(ray)
    rs = RaySet(domain, np.array([fam]), np.array([params], dtype=float))
    if spec.mode == "boundary":
        h, ind = boundary_hit_times(spec, rs, horizon)
        if ind[0]:
            return None
        t = h[0]
    else:
        t = hit_times(spec, rs, horizon)[0]
    return None if math.isinf(t) else float(t)


# ---------------------------------------------------------------------------
# boundary observability (transversal bounces only)


def boundary_hit_times(spec, rays: RaySet, horizon: float):
    """First transversal bounce in Gamma(t) per ray; returns (times, indeterminate)."""
    kind = rays.kind
    if kind is DomainKind.SPHERE:
        raise NoBoundaryError("boundaryless: no boundary observation on the sphere")
    n = len(rays)
    out = np.full(n, math.inf)
    indet = np.zeros(n, dtype=bool)
    p = rays.params
    glide = rays.family == GLIDING
    if kind is DomainKind.DISK:
        # gliding rays never produce transversal contacts
        idx = np.nonzero(~glide)[0]
        b = build_batch(rays.take(idx))
        out[idx], over = _disk_bounce_hits(spec, b, horizon)
        indet[idx[over]] = True
        return out, indet
    if kind is DomainKind.SQUARE:
        indet |= glide
        idx = np.nonzero(~glide)[0]
        x0, y0, psi = p[idx, 0], p[idx, 1], p[idx, 2]
        c, s = np.cos(psi), np.sin(psi)
        # rays running along an edge touch it tangentially all the time
        on_edge = (((np.abs(s) <= TANGENT_TOL) & _on_wall(y0)) | ((np.abs(c) <= TANGENT_TOL) & _on_wall(x0)))
        indet[idx[on_edge]] = True
        best = np.full(len(idx), math.inf)
        for tt in (_axis_bounces(x0, c, horizon), _axis_bounces(y0, s, horizon)):
            if tt.size == 0:
                continue
            valid = np.isfinite(tt)
            t_safe = np.where(valid, tt, 0.0)
            bx = fold(x0[:, None] + c[:, None] * t_safe)
            by = fold(y0[:, None] + s[:, None] * t_safe)
            sc = square_perimeter_coord(bx, by, tol=1e-9)
            ok = valid & np.isfinite(sc) & spec.boundary_contains_coords(t_safe, (np.nan_to_num(sc),))
            best = np.minimum(best, np.where(ok, tt, math.inf).min(axis=1))
        best[on_edge] = math.inf
        out[idx] = best
        return out, indet
    # interval
    x0, d = p[:, 0], p[:, 1]
    tb = _axis_bounces(x0, d, horizon)
    if tb.size:
        valid = np.isfinite(tb)
        bx = np.where(valid, np.round(fold(x0[:, None] + d[:, None] * np.where(valid, tb, 0.0))), 0.5)
        ok = valid & spec.boundary_contains_coords(np.where(valid, tb, 0.0), (bx,))
        out = np.where(ok.any(axis=1), np.where(ok, tb, math.inf).min(axis=1), math.inf)
    return out, indet


def _on_wall(u):
    f = fold(u)
    return (np.abs(f) <= 1e-12) | (np.abs(f - 1.0) <= 1e-12)


def _axis_bounces(u0, c, horizon):
    """Times in (0, horizon) at which u0 + c t crosses an integer, padded with inf."""
    u0 = np.asarray(u0, dtype=float)
    c = np.asarray(c, dtype=float)
    moving = np.abs(c) > TANGENT_TOL
    if not np.any(moving):
        return np.zeros((len(u0), 0))
    kmax = int(math.ceil(horizon * np.max(np.abs(c[moving])))) + 2
    j = np.arange(kmax)
    cs = np.where(moving, c, 1.0)
    # first integer strictly ahead of u0 in the direction of motion
    first = np.where(cs > 0, np.floor(u0) + 1.0, np.ceil(u0) - 1.0)
    m = first[:, None] + np.sign(cs)[:, None] * j[None, :]
    t = (m - u0[:, None]) / cs[:, None]
    t = np.where(moving[:, None] & (t > 0) & (t < horizon), t, math.inf)
    return t


def _disk_bounce_hits(spec, b: DiskRays, horizon: float):
    n = len(b)
    out = np.full(n, math.inf)
    over = np.zeros(n, dtype=bool)
    if n == 0:
        return out, over
    L = b.chord_time
    transversal = np.sin(b.alpha / 2.0) > TANGENT_TOL
    k_first = np.floor((0.0 - b.t0) / L) + 1.0  # first bounce with time > 0
    count = np.floor((horizon - b.t0) / L) - k_first + 1.0
    over = count > BOUNCE_CAP
    active = np.nonzero(transversal & ~over & (count > 0))[0]
    done = np.zeros(n)
    while active.size:
        width = int(max(1, min(ELEMENT_BUDGET // active.size, np.max(count[active] - done[active]))))
        j = done[active][:, None] + np.arange(width)[None, :]
        kk = k_first[active][:, None] + j
        tt = b.t0[active][:, None] + kk * L[active][:, None]
        th = b.theta0[active][:, None] + kk * b.alpha[active][:, None]
        valid = (j < count[active][:, None]) & (tt > 0) & (tt < horizon)
        ok = valid & spec.boundary_contains_coords(tt, (np.cos(th), np.sin(th)))
        hit = ok.any(axis=1)
        out[active[hit]] = np.where(ok[hit], tt[hit], math.inf).min(axis=1)
        done[active] += width
        keep = ~hit & (done[active] < count[active])
        active = active[keep]
    return out, over


# ---------------------------------------------------------------------------
# verdicts


def _v_max(spec):
    return spec.v_max


def _worst(kind, rays, i) -> WorstRay:
    fam = int(rays.family[i])
    return WorstRay(FAMILY_NAMES[fam], tuple(float(x) for x in rays.params[i]),
                    ray_state(kind, fam, rays.params[i]))


def _verdict(kind, rays, times, T, indet=None, margin=0.0) -> TgccVerdict:
    indet = np.zeros(len(rays), dtype=bool) if indet is None else indet
    missing = ~np.isfinite(times) & ~indet
    satisfied = bool(np.all(np.isfinite(times) & ~indet & (times < T)))
    if missing.any() or indet.any():
        status = "exceeded_horizon" if missing.any() else "indeterminate"
        worst = int(np.nonzero(missing if missing.any() else indet)[0][0])
        t0 = math.inf
    else:
        status = "finite"
        worst = int(np.argmax(times))
        t0 = float(times[worst])
    return TgccVerdict(satisfied, T, t0, _worst(kind, rays, worst), margin, status, times,
                       len(rays), int(indet.sum()))


def check_tgcc(domain, spec, T: float, sampling: RaySampling | None = None, rays: RaySet | None = None) -> TgccVerdict:
    """Does every sampled ray meet Q at some time in (0, T)?"""
    domain = DomainKind.parse(domain)
    if not T > 0:
        raise ValueError("T must be positive")
    sampling = sampling or RaySampling()
    rays = rays if rays is not None else sample_rays(domain, sampling, spec)
    times = hit_times(spec, rays, T, sampling.threads)
    return _verdict(domain, rays, times, T)


def check_tgcc_boundary(domain, spec, T: float, sampling: RaySampling | None = None,
                        rays: RaySet | None = None) -> TgccVerdict:
    """Boundary variant: hits are transversal bounces landing in Gamma(t)."""
    domain = DomainKind.parse(domain)
    if domain is DomainKind.SPHERE:
        raise NoBoundaryError("boundaryless: no boundary observation on the sphere")
    if spec.mode != "boundary":
        raise ValueError("boundary checks need a boundary-mode region")
    sampling = sampling or RaySampling()
    rays = rays if rays is not None else sample_rays(domain, sampling, spec)
    times, indet = boundary_hit_times(spec, rays, T)
    return _verdict(domain, rays, times, T, indet)


def estimate_T0(domain, spec, sampling: RaySampling | None = None, horizon_cap: float = 100.0,
                rays: RaySet | None = None) -> TgccVerdict:
    """Sampling lower bound on the control time, refined by pattern search."""
    domain = DomainKind.parse(domain)
    if not horizon_cap > 0:
        raise ValueError("horizon_cap must be positive")
    sampling = sampling or RaySampling()
    rays = rays if rays is not None else sample_rays(domain, sampling, spec)
    times = hit_times(spec, rays, horizon_cap, sampling.threads)
    if not np.all(np.isfinite(times)):
        return _verdict(domain, rays, times, horizon_cap, margin=0.0)
    verdict = _verdict(domain, rays, times, horizon_cap)
    order = np.argsort(-times, kind="stable")[: max(0, sampling.refine_top)]
    final_step = 0.0
    for i in order:
        t_ref, p_ref, step = pattern_search(spec, rays.take([i]), float(times[i]), horizon_cap,
                                            sampling.refine_levels)
        final_step = max(final_step, step)
        if t_ref > verdict.t0_estimate:
            fam = int(rays.family[i])
            verdict.t0_estimate = t_ref
            verdict.worst_ray = WorstRay(FAMILY_NAMES[fam], tuple(float(x) for x in p_ref),
                                         ray_state(domain, fam, p_ref))
    if math.isinf(verdict.t0_estimate):
        verdict.status, verdict.satisfied = "exceeded_horizon", False
    verdict.margin = 1e-6 + final_step * (1.0 + _v_max(spec))
    return verdict


# ---------------------------------------------------------------------------
# pattern search over ray parameters


def _search_dims(kind, family):
    """(initial step, lower, upper, period) per searched parameter index."""
    if kind is DomainKind.INTERVAL:
        return {0: (1.0 / 64, None, None, 2.0)}
    if kind is DomainKind.DISK:
        if family == GLIDING:
            return {0: (TWO_PI / 64, None, None, TWO_PI)}
        return {0: (TWO_PI / 64, None, None, TWO_PI), 1: (TWO_PI / 64, 1e-9, TWO_PI - 1e-9, None),
                2: (0.05, None, None, None)}
    if kind is DomainKind.SQUARE:
        if family == GLIDING:
            return {0: (4.0 / 64, None, None, 4.0)}
        return {0: (1.0 / 32, None, None, 2.0), 1: (1.0 / 32, None, None, 2.0), 2: (TWO_PI / 256, None, None, TWO_PI)}
    return {0: (TWO_PI / 64, None, None, TWO_PI), 1: (math.pi / 64, 0.0, math.pi, None),
            2: (TWO_PI / 64, None, None, TWO_PI)}


def pattern_search(spec, ray: RaySet, t_start: float, horizon: float, levels: int = 40,
                   max_moves: int = 8):
    """Compass search maximising the first-hit time of a single ray.

    Returns (best time, best params, final step).  Only strict improvements
    are accepted, so the value never decreases.  ``inf`` (a ray that never
    hits before ``horizon``) ends the search.
    """
    kind = ray.kind
    fam = int(ray.family[0])
    dims = _search_dims(kind, fam)
    p = ray.params[0].astype(float).copy()
    best = t_start
    steps = {d: v[0] for d, v in dims.items()}
    for _ in range(levels):
        for _ in range(max_moves):
            cands = []
            for d, (_, lo, hi, period) in dims.items():
                for sgn in (1.0, -1.0):
                    q = p.copy()
                    q[d] += sgn * steps[d]
                    if period is not None:
                        q[d] = np.mod(q[d], period)
                    elif lo is not None:
                        q[d] = min(max(q[d], lo), hi)
                    cands.append(q)
            cands = np.array(cands)
            rs = RaySet(kind, np.full(len(cands), fam), cands)
            if spec.mode == "boundary":
                vals = boundary_hit_times(spec, rs, horizon)[0]
            else:
                vals = hit_times(spec, rs, horizon)
            j = int(np.argmax(vals))
            if vals[j] > best:
                best, p = float(vals[j]), cands[j]
                if math.isinf(best):
                    return best, p, max(steps.values())
            else:
                break
        for d in steps:
            steps[d] *= 0.5
    return best, p, max(steps.values())


def worst_rays(verdict: TgccVerdict, rays: RaySet, k: int = 3) -> list:
    """The k rays with the latest first-hit times (inf first), as states."""
    times = verdict.hit_times
    order = np.argsort(-np.where(np.isfinite(times), times, np.inf), kind="stable")[:k]
    return [ray_state(rays.kind, int(rays.family[i]), rays.params[i]) for i in order]


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("TGCC_THREADS", "1")))
    except ValueError:
        return 1


__all__ = [
    "FAMILY_NAMES", "RaySampling", "RaySet", "TgccVerdict", "WorstRay", "boundary_hit_times",
    "build_batch", "check_tgcc", "check_tgcc_boundary", "estimate_T0", "first_hit_time",
    "hit_times", "params_from_state", "pattern_search", "ray_state", "sample_rays",
]
