"""Exact 1D Dirichlet waves on (0, 1) and observability/damping experiments.

Solutions come from d'Alembert's formula with the odd 2-periodic
extensions of the data, evaluated by reducing arguments to [-1, 1).
Observed energies are integrated with Gauss-Legendre panels split at the
kinks of the integrand (window motion, window edges crossing
characteristics, data support edges).  The damped equation
u_tt - u_xx + chi_omega(t) u_t = 0 is integrated by leapfrog.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DomainKind

GAUSS_NODES = 8
REL_TOL = 1e-6


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class InitialData1D:
    """Initial position u0 and velocity u1 on [0, 1], u0(0) = u0(1) = 0.

    family ``modes``: u0 = sum b_k sin(k pi x), u1 = sum c_k sin(k pi x)
    (``eigenmode(k)`` is the single-mode case); family ``packet``: u0 = psi,
    u1 = -dir psi' with the C^2 bump psi(x) = (1 - ((x - x0)/sigma)^2)^3.
    """

    family: str
    params: dict = field(default_factory=dict)
    n_samples: int = 1025

    # -- constructors -------------------------------------------------------

    @classmethod
    def eigenmode(cls, k: int, n_samples: int = 1025):
        if k < 1:
            raise ValueError("mode index must be >= 1")
        return cls("modes", {"b": (0.0,) * (k - 1) + (1.0,), "c": (), "tag": f"eigenmode({k})"}, n_samples)

    @classmethod
    def modes(cls, b, c=(), n_samples: int = 1025):
        return cls("modes", {"b": tuple(float(x) for x in b), "c": tuple(float(x) for x in c)}, n_samples)

    @classmethod
    def random_modes(cls, n_modes: int = 16, seed: int = 0, n_samples: int = 1025):
        rng = np.random.default_rng(seed)
        k = np.arange(1, n_modes + 1)
        b = rng.normal(size=n_modes) / k**2
        c = rng.normal(size=n_modes) / k
        return cls.modes(b, c, n_samples)

    @classmethod
    def packet(cls, x0: float, direction: int, sigma: float, n_samples: int = 1025):
        if not 0.0 < sigma < 0.5:
            raise ValueError("packet width must lie in (0, 0.5)")
        if not sigma <= x0 <= 1.0 - sigma:
            raise ValueError("packet support must stay inside [0, 1]")
        d = 1 if direction >= 0 else -1
        return cls("packet", {"x0": float(x0), "dir": d, "sigma": float(sigma)}, n_samples)

    # -- evaluation on [0, 1] -----------------------------------------------

    @property
    def tag(self) -> str:
        if self.family == "packet":
            p = self.params
            return f"packet({p['x0']:.6g},{p['dir']},{p['sigma']:.6g})"
        return self.params.get("tag", "modes")

    @property
    def scale(self) -> float:
        """Length scale of the data (used to size quadrature panels)."""
        if self.family == "packet":
            return self.params["sigma"]
        n = max(len(self.params["b"]), len(self.params["c"]), 1)
        return 1.0 / n

    @property
    def panel_length(self) -> float:
        """Largest quadrature panel needed between kinks.

        Packets are piecewise polynomial of low degree between their kink
        lines, so Gauss panels split only at kinks are already exact."""
        return 1.0 if self.family == "packet" else self.scale

    def kinks(self) -> np.ndarray:
        """Points of [-1, 1] where the extended data lose smoothness."""
        base = [-1.0, 0.0, 1.0]
        if self.family == "packet":
            x0, s = self.params["x0"], self.params["sigma"]
            base += [x0 - s, x0 + s, -x0 + s, -x0 - s]
        return np.unique(np.asarray(base))

    def _series(self, coef, z, deriv=0, integral=False):
        out = np.zeros_like(z)
        for k, ck in enumerate(coef, start=1):
            if ck == 0.0:
                continue
            w = k * math.pi
            if integral:
                out += ck * (1.0 - np.cos(w * z)) / w
            elif deriv:
                out += ck * w * np.cos(w * z)
            else:
                out += ck * np.sin(w * z)
        return out

    def _bump(self, z, deriv=0):
        x0, s = self.params["x0"], self.params["sigma"]
        y = (z - x0) / s
        inside = np.abs(y) < 1.0
        q = np.where(inside, 1.0 - y * y, 0.0)
        if deriv:
            return np.where(inside, -6.0 * y * q * q / s, 0.0)
        return q**3

    def u0(self, z):
        z = np.asarray(z, dtype=float)
        return self._bump(z) if self.family == "packet" else self._series(self.params["b"], z)

    def du0(self, z):
        z = np.asarray(z, dtype=float)
        return self._bump(z, 1) if self.family == "packet" else self._series(self.params["b"], z, deriv=1)

    def u1(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "packet":
            return -self.params["dir"] * self._bump(z, 1)
        return self._series(self.params["c"], z)

    def U1(self, z):
        """Antiderivative of u1 vanishing at 0."""
        z = np.asarray(z, dtype=float)
        if self.family == "packet":
            return -self.params["dir"] * self._bump(z)
        return self._series(self.params["c"], z, integral=True)

    def sample(self, n: int | None = None):
        x = np.linspace(0.0, 1.0, n or self.n_samples)
        return x, self.u0(x), self.u1(x)

    def negated_velocity(self) -> "InitialData1D":
        if self.family == "packet":
            p = dict(self.params, dir=-self.params["dir"])
            return InitialData1D("packet", p, self.n_samples)
        p = dict(self.params, c=tuple(-x for x in self.params["c"]))
        return InitialData1D("modes", p, self.n_samples)

    def energy(self) -> float:
        """E0 = 1/2 int (u0'^2 + u1^2)."""
        if self.family == "modes":
            b = np.asarray(self.params["b"])
            c = np.asarray(self.params["c"])
            kb = np.arange(1, len(b) + 1) * math.pi
            return 0.25 * float(np.sum((kb * b) ** 2) + np.sum(c**2))
        x0, s = self.params["x0"], self.params["sigma"]
        val, _ = _gauss_integrate(lambda z: self.du0(z) ** 2 + self.u1(z) ** 2, [x0 - s, x0, x0 + s], 16)
        return 0.5 * val


# ---------------------------------------------------------------------------
# d'Alembert evaluation


def _reduce(z):
    # odd 2-periodic extension bookkeeping: y in [-1, 1)
    y = np.mod(np.asarray(z, dtype=float) + 1.0, 2.0) - 1.0
    return np.abs(y), np.where(y < 0.0, -1.0, 1.0)


def _ext(data, z):
    """F, F', G, H at z: odd extension of u0, its derivative, odd extension
    of u1 and the (even) antiderivative of G."""
    r, sg = _reduce(z)
    return sg * data.u0(r), data.du0(r), sg * data.u1(r), data.U1(r)


def dalembert_eval(data: InitialData1D, t, x, with_ux: bool = False):
    """(u, u_t) (and u_x if requested) at (t, x), broadcasting."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    Fp, dFp, Gp, Hp = _ext(data, x + t)
    Fm, dFm, Gm, Hm = _ext(data, x - t)
    u = 0.5 * (Fp + Fm) + 0.5 * (Hp - Hm)
    ut = 0.5 * (dFp - dFm) + 0.5 * (Gp + Gm)
    if with_ux:
        ux = 0.5 * (dFp + dFm) + 0.5 * (Gp - Gm)
        return u, ut, ux
    return u, ut


# ---------------------------------------------------------------------------
# quadrature


def _gauss_integrate(f, breaks, n):
    """Composite Gauss-Legendre over consecutive breakpoints; returns
    (value, |value - value with 2n nodes|)."""
    breaks = np.asarray(breaks, dtype=float)
    a, b = breaks[:-1], breaks[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    if a.size == 0:
        return 0.0, 0.0
    vals = []
    for m in (n, 2 * n):
        xg, wg = np.polynomial.legendre.leggauss(m)
        z = 0.5 * (a[:, None] + b[:, None]) + 0.5 * (b - a)[:, None] * xg[None, :]
        vals.append(float(np.sum(0.5 * (b - a)[:, None] * wg[None, :] * f(z))))
    return vals[1], abs(vals[1] - vals[0])


def _refine(breaks, h):
    out = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        m = max(1, int(math.ceil((b - a) / h)))
        out.extend(np.linspace(a, b, m + 1)[1:])
    return np.asarray(out)


@dataclass(frozen=True)
class ObservedEnergyReport:
    observed: float
    total: float
    ratio: float
    error: float
    flagged: bool


def _window(spec, t):
    if spec is None:
        return 0.0, 0.0
    left = float(spec.anchor(t))
    return max(left, 0.0), min(left + spec.a, 1.0)


def _time_breaks(data, spec, T):
    pts = {0.0, T}
    pts.update(np.arange(0.5, T, 0.5).tolist())
    law = np.concatenate([[0.0], spec.breakpoints(0.0, T), [T]])
    kinks = data.kinks()
    for ta, tb in zip(law[:-1], law[1:]):
        la = float(spec.anchor(ta))
        w = (float(spec.anchor(tb)) - la) / (tb - ta) if tb > ta else 0.0
        for e in (la, la + spec.a):
            for sgn in (1.0, -1.0):
                # edge(t) + sgn t crosses kappa + 2 m
                rate = w + sgn
                if rate == 0.0:
                    continue
                lo = e + sgn * ta
                hi = e + w * (tb - ta) + sgn * tb
                m_lo = math.floor((min(lo, hi) - 1.0) / 2.0) - 1
                m_hi = math.ceil((max(lo, hi) + 1.0) / 2.0) + 1
                for kappa in kinks:
                    for m in range(m_lo, m_hi + 1):
                        t = ta + (kappa + 2.0 * m - lo) / rate
                        if ta < t < tb:
                            pts.add(float(t))
    pts.update(law.tolist())
    return np.array(sorted(p for p in pts if 0.0 <= p <= T))


def _x_breaks(data, t, lo, hi, h):
    """Sorted x-breakpoints for each row of t (clipped to [lo, hi]).

    Candidates are the characteristic kink lines x = kappa + 2m -+ t and a
    uniform h-grid, so every gap is at most h and no panel straddles a kink.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    lo = np.broadcast_to(np.atleast_1d(lo), t.shape[:1])[:, None]
    hi = np.broadcast_to(np.atleast_1d(hi), t.shape[:1])[:, None]
    kinks = data.kinks()
    m_max = int(math.ceil((float(np.max(np.abs(t))) + 2.0) / 2.0)) + 1
    base = (kinks[:, None] + 2.0 * np.arange(-m_max, m_max + 1)[None, :]).ravel()
    cand = np.concatenate([base[None, :] - t, base[None, :] + t], axis=1)
    # keep only kink lines that can fall into [0, 1]
    cand = np.where((cand > 0.0) & (cand < 1.0), cand, 0.0)
    grid = np.linspace(0.0, 1.0, int(math.ceil(1.0 / h)) + 1)[None, :]
    allp = np.concatenate([np.broadcast_to(grid, (t.shape[0], grid.shape[1])), cand], axis=1)
    allp = np.clip(allp, lo, hi)
    return np.sort(np.concatenate([lo, allp, hi], axis=1), axis=1)


def _slab_integral(data, t, lo, hi, n, h, density=None):
    """int_lo^hi density(t, x) dx for every t (vectorized); returns
    (values with 2n nodes, |2n - n| per row)."""
    xb = _x_breaks(data, t, lo, hi, h)
    a, b = xb[:, :-1], xb[:, 1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    tt = np.atleast_1d(t)[:, None, None]
    out = []
    for m in (n, 2 * n):
        xg, wg = _leggauss(m)
        z = mid[..., None] + half[..., None] * xg
        if density is None:
            f = dalembert_eval(data, tt, z)[1] ** 2
        else:
            f = density(tt, z)
        out.append(np.sum(half * np.sum(wg * f, axis=-1), axis=1))
    return out[1], np.abs(out[1] - out[0])


_GAUSS_CACHE = {}


def _leggauss(m):
    if m not in _GAUSS_CACHE:
        _GAUSS_CACHE[m] = np.polynomial.legendre.leggauss(m)
    return _GAUSS_CACHE[m]


CHUNK = 256


def observed_energy(data: InitialData1D, spec, T: float, nodes: int = GAUSS_NODES) -> ObservedEnergyReport:
    """Space-time integral of |u_t|^2 over Q on (0, T), with 2 E0 as total."""
    if not T > 0:
        raise ValueError("T must be positive")
    total = 2.0 * data.energy()
    if spec is None:
        return ObservedEnergyReport(0.0, total, 0.0, 0.0, False)
    if spec.kind is not DomainKind.INTERVAL:
        raise ValueError("observed energies are computed on the interval only")
    h = data.panel_length
    tb = _refine(_time_breaks(data, spec, T), h)
    a, b = tb[:-1], tb[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    vals, x_err = [], 0.0
    for m in (nodes, 2 * nodes):
        xg, wg = _leggauss(m)
        ts = (mid[:, None] + half[:, None] * xg).ravel()
        ws = (half[:, None] * wg).ravel()
        left = np.asarray(spec.anchor(ts), dtype=float)
        lo, hi = np.maximum(left, 0.0), np.minimum(left + spec.a, 1.0)
        hi = np.maximum(hi, lo)
        acc = 0.0
        for s in range(0, ts.size, CHUNK):
            sl = slice(s, s + CHUNK)
            v, e = _slab_integral(data, ts[sl], lo[sl], hi[sl], nodes, h)
            acc += float(ws[sl] @ v)
            if m == 2 * nodes:
                x_err += float(ws[sl] @ e)
        vals.append(acc)
    observed = vals[1]
    err = abs(vals[1] - vals[0]) + x_err
    flagged = bool(err > REL_TOL * max(abs(observed), total * 1e-12, 1e-300))
    return ObservedEnergyReport(float(observed), float(total), float(observed / total), float(err), flagged)


def energy_at(data: InitialData1D, t: float, nodes: int = 16) -> float:
    """E0(t) = 1/2 int (u_t^2 + u_x^2) dx computed from the exact solution."""
    h = data.panel_length

    def dens(tt, z):
        _, ut, ux = dalembert_eval(data, tt, z, with_ux=True)
        return ut**2 + ux**2

    v, _ = _slab_integral(data, np.array([float(t)]), 0.0, 1.0, nodes, h, dens)
    return 0.5 * float(v[0])


def default_family(spec, T: float, sigmas=(0.04, 0.02, 0.01), k_max: int = 32, worst=None) -> list:
    """Eigenmodes k <= k_max plus packets launched along the worst rays."""
    fam = [InitialData1D.eigenmode(k) for k in range(1, k_max + 1)]
    fam.extend(worst_ray_packets(spec, T, sigmas, worst))
    return fam


def worst_ray_packets(spec, T: float, sigmas=(0.04, 0.02, 0.01), worst=None) -> list:
    """Packets centred on the latest-hitting ray of the control-time search."""
    if worst is None:
        from .gcc import estimate_T0

        verdict = estimate_T0(DomainKind.INTERVAL, spec, horizon_cap=max(4.0 * T, 10.0))
        worst = [verdict.worst_ray.state]
    out = []
    for state in worst:
        for s in sigmas:
            x0 = min(max(state.pos[0], s), 1.0 - s)
            out.append(InitialData1D.packet(x0, int(state.dir[0]), s))
    return out


def obs_ratio_infimum(spec, T: float, family: list | None = None) -> tuple:
    """(min ratio over the family, per-member reports)."""
    family = family if family is not None else default_family(spec, T)
    if not family:
        raise ValueError("empty data family")
    reports = [observed_energy(d, spec, T) for d in family]
    return min(r.ratio for r in reports), reports


# ---------------------------------------------------------------------------
# damped wave, leapfrog


@dataclass(frozen=True)
class DecayFit:
    mu: float
    nu: float
    residual: float
    times: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)


def damped_wave(data: InitialData1D, spec, N: int, t_end: float, cfl: float = 0.9,
                sample_every: float | None = None, damping: str = "window"):
    """Leapfrog for u_tt - u_xx + chi u_t = 0 with Dirichlet ends.

    ``damping``: ``window`` (chi = indicator of omega(t)), ``none``.
    Returns (times, energies, final u) with energies sampled at multiples of
    ``sample_every`` (or every step).
    """
    if not 0 < cfl <= 1.0:
        raise ValueError("CFL violation: need 0 < dt/dx <= 1")
    dx = 1.0 / N
    if sample_every:
        # whole number of steps per sampling interval
        per = int(math.ceil(sample_every / (cfl * dx)))
        every = per
        n_steps = per * max(1, int(round(t_end / sample_every)))
        dt = sample_every / per
    else:
        every = 1
        n_steps = int(math.ceil(t_end / (cfl * dx)))
        dt = t_end / n_steps
    if dt > dx * (1 + 1e-12):
        raise ValueError("CFL violation: dt exceeds dx")
    lam2 = (dt / dx) ** 2
    x = np.linspace(0.0, 1.0, N + 1)
    u0 = data.u0(x)
    u0[0] = u0[-1] = 0.0
    v0 = data.u1(x)
    v0[0] = v0[-1] = 0.0

    damped = damping != "none" and spec is not None

    def window_slice(t):
        # grid nodes j with lo < j dx < lo + a
        lo = float(spec.anchor(t))
        i0 = max(int(math.floor(lo * N)) + 1, 1)
        i1 = min(int(math.ceil((lo + spec.a) * N)), N)
        return slice(i0, max(i0, i1))

    # second-order start: u1 = u0 + dt v0 + dt^2/2 (u0_xx - chi v0)
    acc = np.zeros_like(u0)
    acc[1:-1] = (u0[2:] - 2.0 * u0[1:-1] + u0[:-2]) / dx**2
    if damped:
        s0 = window_slice(0.0)
        acc[s0] -= v0[s0]
    u_prev = u0
    u = u0 + dt * v0 + 0.5 * dt * dt * acc
    u[0] = u[-1] = 0.0

    def energy(u_new, u_old):
        vel = (u_new - u_old) / dt
        gx_new = np.diff(u_new) / dx
        gx_old = np.diff(u_old) / dx
        return 0.5 * dx * (float(vel @ vel) + float(gx_new @ gx_old))

    times = [0.5 * dt]
    energies = [energy(u, u_prev)]
    g = 0.5 * dt
    u_next = np.zeros_like(u)
    for n in range(1, n_steps):
        t = n * dt
        # undamped update, then the centred damping correction on the window
        u_next[1:-1] = (2.0 - 2.0 * lam2) * u[1:-1] - u_prev[1:-1] + lam2 * (u[2:] + u[:-2])
        if damped:
            sl = window_slice(t)
            u_next[sl] = (u_next[sl] + g * u_prev[sl]) / (1.0 + g)
        u_prev, u, u_next = u, u_next, u_prev
        if (n + 1) % every == 0:
            times.append(t + 0.5 * dt)
            energies.append(energy(u, u_prev))
    return np.array(times), np.array(energies), u


def damped_decay_rate(spec, N: int = 4096, periods: int = 40, data: InitialData1D | None = None,
                      cfl: float = 0.9, seed: int = 0) -> DecayFit:
    """Fit E(t) ~ mu E(0) exp(-nu t) for the periodically damped wave."""
    if spec is not None:
        if spec.kind is not DomainKind.INTERVAL:
            raise ValueError("damping experiments run on the interval")
        if not spec.is_periodic:
            raise ValueError("non-periodic spec")
        # static window: any sampling period will do
        period = spec.period_1d if spec.v > 0 else 1.0
    else:
        period = 1.0
    data = data or InitialData1D.random_modes(16, seed)
    t_end = periods * period
    times, energies, _ = damped_wave(data, spec, N, t_end, cfl, sample_every=period)
    e0 = energies[0]
    sel = times >= 0.2 * t_end
    tt = times[sel]
    le = np.log(np.maximum(energies[sel], 1e-300))
    A = np.column_stack([np.ones_like(tt), -tt])
    coef, *_ = np.linalg.lstsq(A, le, rcond=None)
    resid = le - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    mu = float(math.exp(coef[0]) / e0)
    return DecayFit(mu, float(coef[1]), rms, times, energies)


def fd_energy_error(data: InitialData1D, N: int, t_end: float, cfl: float = 0.5) -> float:
    """|discrete energy at t_end - exact energy| for the undamped scheme."""
    times, energies, _ = damped_wave(data, None, N, t_end, cfl, damping="none")
    return abs(energies[-1] - data.energy())


__all__ = [
    "DecayFit", "InitialData1D", "ObservedEnergyReport", "damped_decay_rate", "damped_wave",
    "dalembert_eval", "default_family", "energy_at", "fd_energy_error", "obs_ratio_infimum",
    "observed_energy", "worst_ray_packets",
]
