"""Acceptance criteria, one test per criterion.

Each test prints a ``PASS``/``FAIL`` line (also collected into the terminal
summary).  Every criterion computes its results as CSV text; the
determinism criterion recomputes all of them and compares bytes.
"""
import csv
import io
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from tgcc.gcc import (
    AXIS,
    FAMILY_NAMES,
    GLIDING,
    POLYGON,
    PRECESSION,
    RaySampling,
    boundary_hit_times,
    check_tgcc,
    check_tgcc_boundary,
    estimate_T0,
    sample_rays,
)
from tgcc.harness.records import SweepRow, format_rows
from tgcc.obsdomain import MovingDomainSpec, ShellSpec, boundary_shell
from tgcc.paperlib import (
    FLAGGED_CASES,
    asymptotic_bounds,
    make_counterexample,
    polygon_vertex_indices,
    polygon_vertex_indices_brute,
    replay,
    stop_and_go_interval,
    t0_1d,
    t0_1d_case,
)
from tgcc.wave1d import (
    InitialData1D,
    damped_decay_rate,
    default_family,
    energy_at,
    fd_energy_error,
    obs_ratio_infimum,
    observed_energy,
    worst_ray_packets,
)

SEED = 0
CSV_OUT = {}


def report(n, ok, msg):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {msg}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def verdict_row(spec, v, T=None):
    return SweepRow(spec.kind.value, spec.mode, spec.v, spec.a, spec.eps, spec.delta, T,
                    v.t0_estimate, v.status, v.worst_ray.describe() if v.worst_ray else "", None)


# ---------------------------------------------------------------------------------------
# computations (each returns (ok, message, csv text))


def c1_interval_closed_form():
    sampling = RaySampling(seed=SEED)
    cells = [(v, a, 0.0) for v in (0.25, 0.5, 0.75, 1.5, 2.0, 3.0) for a in (0.1, 0.25, 0.5)]
    cells += [(1.0, a, 0.1) for a in (0.1, 0.25, 0.5)]
    flagged = [(v, a, 0.1) for v in (1.5, 2.0, 3.0) for a in (0.1, 0.25, 0.5)]
    rows, worst, t_start = [], 0.0, time.perf_counter()
    for v, a, d in cells:
        spec = MovingDomainSpec("interval", a=a, v=v, delta=d)
        est = estimate_T0("interval", spec, sampling).t0_estimate
        ref = t0_1d(v, a, d)
        worst = max(worst, abs(est - ref) / ref)
        rows.append(("asserted", v, a, d, est, ref, abs(est - ref) / ref))
    elapsed = time.perf_counter() - t_start
    side = []
    for v, a, d in flagged:
        assert t0_1d_case(v, a, d) in FLAGGED_CASES
        spec = MovingDomainSpec("interval", a=a, v=v, delta=d)
        est = estimate_T0("interval", spec, sampling).t0_estimate
        ref = t0_1d(v, a, d)
        rows.append(("flagged", v, a, d, est, ref, abs(est - ref) / ref))
        side.append(f"(v={v}, a={a}, delta={d}): measured {est:.4f} vs printed {ref:.4f}")
    print("flagged cells (reported, not asserted):\n  " + "\n  ".join(side))
    ok = worst < 0.02 and elapsed < 30.0
    msg = f"max relative error {worst:.2e} over {len(cells)} cells in {elapsed:.1f} s; {len(flagged)} flagged cells reported"
    return ok, msg, table(("kind", "v", "a", "delta", "t0_estimate", "closed_form", "rel_err"), rows)


def c2_static_oracles():
    sampling = RaySampling(seed=SEED)
    ring = MovingDomainSpec("disk", a=2 * math.pi, eps=0.2)
    band = MovingDomainSpec("sphere", a=2 * math.pi, eps=0.3)
    t0 = time.perf_counter()
    vr = estimate_T0("disk", ring, sampling)
    t1 = time.perf_counter()
    vb = estimate_T0("sphere", band, sampling)
    t2 = time.perf_counter()
    ok_r = 1.6 - vr.margin <= vr.t0_estimate <= 1.62
    ok_b = math.pi - 0.6 - vb.margin <= vb.t0_estimate <= math.pi - 0.58
    ok = ok_r and ok_b and t1 - t0 < 120 and t2 - t1 < 120
    msg = (f"ring {vr.t0_estimate:.6f} in [1.6, 1.62] ({t1 - t0:.1f} s); band {vb.t0_estimate:.6f} in "
           f"[{math.pi - 0.6:.6f}, {math.pi - 0.58:.6f}] ({t2 - t1:.1f} s)")
    return ok, msg, format_rows([verdict_row(ring, vr), verdict_row(band, vb)])


def c3_asymptotic_sandwiches():
    sampling = RaySampling(seed=SEED)
    cases = [
        ("disk", MovingDomainSpec("disk", a=math.pi / 2, eps=0.1, v=50.0), 100.0),
        ("sphere", MovingDomainSpec("sphere", a=math.pi / 2, eps=math.pi / 12, v=20.0), 100.0),
        ("square", MovingDomainSpec("square", a=0.25, v=20.0), 100.0),
        ("sphere", MovingDomainSpec("sphere", a=0.5, eps=0.2, v=0.01), 400.0),
    ]
    rows, parts, ok, t_start = [], [], True, time.perf_counter()
    for kind, spec, cap in cases:
        v = estimate_T0(kind, spec, sampling, horizon_cap=cap)
        lo, hi = asymptotic_bounds(kind, spec.v, spec.a, spec.eps)
        inside = lo - v.margin <= v.t0_estimate <= hi
        ok &= inside
        rows.append(verdict_row(spec, v))
        parts.append(f"{kind} v={spec.v}: {v.t0_estimate:.4f} in [{lo:.4f}, {hi:.4f}]")
    elapsed = time.perf_counter() - t_start
    ok &= elapsed < 300
    return ok, "; ".join(parts) + f" ({elapsed:.1f} s)", format_rows(rows)


def c4_polygon_lemma():
    t0 = time.perf_counter()
    rows, ok = [], True
    for p in range(1, 31):
        for q in range(1, 31):
            if math.gcd(p, q) == 1:
                same = polygon_vertex_indices(p, q) == polygon_vertex_indices_brute(p, q)
                ok &= same
                rows.append((p, q, len(polygon_vertex_indices(p, q)), same))
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    return ok, f"{len(rows)} coprime pairs, all equal: {ok} ({elapsed * 1000:.0f} ms)", table(("p", "q", "size", "equal"), rows)


def c5_counterexamples():
    cases = [
        ("sphere", "equatorial", {}),
        ("disk", "polygon", {"n": 2, "p": 1, "q": 1}),
        ("disk", "precession", {"v": 2.0}),
        ("square", "slope", {"p": 0, "q": 1, "m": 1, "n": 2}),
    ]
    want_h = {"sphere": 100.0, "disk": 200.0, "square": 200.0}
    rows, parts, ok, t0 = [], [], True, time.perf_counter()
    for geom, obs, params in cases:
        cx = make_counterexample(geom, obs, **params)
        r = replay(cx)
        good = r.hit_free and cx.clearance > 0 and cx.horizon >= want_h[geom]
        ok &= good
        alpha = ""
        if obs == "precession":
            alpha = f", alpha={cx.params.get('alpha', float('nan')):.4f}" if "alpha" in cx.params else ""
        rows.append((geom, obs, cx.v, cx.horizon, cx.valid_a0, cx.clearance, r.hit_free))
        parts.append(f"{geom}/{obs} v={cx.v:.4f}{alpha}: hit-free over {cx.horizon:g}, clearance {cx.clearance:.4f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    return ok, "; ".join(parts) + f" ({elapsed:.1f} s)", table(
        ("geometry", "obstruction", "v", "horizon", "a0", "clearance", "hit_free"), rows)


def c6_stop_and_go():
    a, v = 0.9 * math.pi, 0.35
    lo, hi = stop_and_go_interval(a)
    t_rel = 2 * math.pi + 0.1
    spec = MovingDomainSpec("disk", a=a, eps=0.1, v=v, motion="stop_and_go", t_start=t_rel)
    sampling = RaySampling(seed=SEED)
    rays = sample_rays("disk", sampling, spec)
    n_poly = int(np.sum(rays.family == POLYGON))
    n_glide = int(np.sum(rays.family == GLIDING))
    polys = {round(x, 9) for x in rays.params[rays.family == POLYGON, 1]}
    t0 = time.perf_counter()
    verdict = check_tgcc("disk", spec, t_rel + 30.0, sampling, rays=rays)
    elapsed = time.perf_counter() - t0
    ok = lo < v < hi and verdict.satisfied and n_glide > 0 and len(polys) >= 63 and elapsed < 180
    msg = (f"v={v} in ({lo:.4f}, {hi:.4f}); satisfied={verdict.satisfied} at T={t_rel + 30:.4f}, "
           f"sup hit {verdict.t0_estimate:.4f}; {len(rays)} rays incl. {n_poly} polygon ({len(polys)} openings), "
           f"{n_glide} gliding ({elapsed:.1f} s)")
    return ok, msg, format_rows([verdict_row(spec, verdict, t_rel + 30.0)])


def c7_shell():
    base = MovingDomainSpec("interval", a=0.25, v=0.0, offset=0.3)
    shell = boundary_shell(ShellSpec(base, 2.0, 0.02))
    sampling = RaySampling(seed=SEED)
    t0 = time.perf_counter()
    rows, first = [], None
    for Tp in (1.0, 2.0, 3.0, 4.0):
        v = check_tgcc("interval", shell, Tp, sampling)
        rows.append(("shell", Tp, v.satisfied, v.t0_estimate))
        if v.satisfied and first is None:
            first = Tp
    elapsed = time.perf_counter() - t0
    ok = first is not None and first <= 4.0 and elapsed < 60
    return ok, f"shell (h=0.02) satisfied first at T'={first} (sup hit {rows[-1][3]:.4f}) ({elapsed:.1f} s)", table(
        ("region", "T_prime", "satisfied", "sup_hit"), rows)


def c8_boundary_mode():
    spec = MovingDomainSpec("disk", a=math.pi / 2, v=100.0, mode="boundary")
    sampling = RaySampling(seed=SEED)
    t0 = time.perf_counter()
    rays = sample_rays("disk", sampling, spec)
    verdict = check_tgcc_boundary("disk", spec, 50.0, sampling, rays=rays)
    times, indet = boundary_hit_times(spec, rays, 50.0)
    elapsed = time.perf_counter() - t0
    none = ~np.isfinite(times) | indet
    glide = rays.family == GLIDING
    near = (rays.family != GLIDING) & (rays.params[:, 1] < 0.05) & (rays.family != AXIS)
    rows = [(FAMILY_NAMES[f], int(np.sum(rays.family == f)), int(np.sum(none & (rays.family == f))))
            for f in np.unique(rays.family)]
    ok = (not verdict.satisfied) and bool(np.all(none[glide])) and elapsed < 60
    msg = (f"satisfied={verdict.satisfied} at T=50 (status {verdict.status}); gliding NONE "
           f"{int(none[glide].sum())}/{int(glide.sum())}; near-tangent chords (alpha<0.05) NONE "
           f"{int(none[near].sum())}/{int(near.sum())} (reported); precession NONE "
           f"{int(none[rays.family == PRECESSION].sum())}/{int(np.sum(rays.family == PRECESSION))} ({elapsed:.1f} s)")
    return ok, msg, table(("family", "n", "none_or_indeterminate"), rows)


def c9_observability():
    spec = MovingDomainSpec("interval", a=0.25, v=0.5)
    t0 = time.perf_counter()
    inf, reports = obs_ratio_infimum(spec, 1.3)
    packets = worst_ray_packets(spec, 0.8)
    ratios = [observed_energy(p, spec, 0.8).ratio for p in packets]
    family = default_family(spec, 1.3)
    cons = 0.0
    for d in family[::6]:
        e0 = d.energy()
        for t in (0.5, 1.3, 2.7):
            cons = max(cons, abs(energy_at(d, t) - e0) / e0)
    elapsed = time.perf_counter() - t0
    monotone = ratios[0] > ratios[1] > ratios[2]
    ok = inf > 1e-3 and monotone and cons < 1e-8 and elapsed < 120
    msg = (f"T=1.3 infimum {inf:.4g} over {len(reports)} data; T=0.8 packet ratios "
           f"{', '.join(f'{r:.4g}' for r in ratios)}; energy drift {cons:.1e} ({elapsed:.1f} s)")
    rows = [(r_tag, rep.ratio) for r_tag, rep in zip([d.tag for d in family], reports)]
    rows += [(p.tag + "@T=0.8", r) for p, r in zip(packets, ratios)]
    return ok, msg, table(("data", "ratio"), rows)


def c10_stabilization():
    spec = MovingDomainSpec("interval", a=0.25, v=0.5)
    t0 = time.perf_counter()
    fit = damped_decay_rate(spec, seed=SEED)
    data = InitialData1D.random_modes(8, seed=1)
    errs = [fd_energy_error(data, N, 1.0) for N in (128, 256, 512, 1024)]
    ratios = [errs[i] / errs[i + 1] for i in range(3)]
    elapsed = time.perf_counter() - t0
    ok = fit.nu > 0 and fit.residual < 0.1 and all(3.5 <= r <= 4.5 for r in ratios) and elapsed < 120
    msg = (f"nu={fit.nu:.4f} mu={fit.mu:.4f} residual={fit.residual:.4f}; undamped error ratios "
           f"{', '.join(f'{r:.3f}' for r in ratios)} ({elapsed:.1f} s)")
    rows = [("decay", fit.mu, fit.nu, fit.residual)] + [("fd_error", float(N), e, 0.0)
                                                        for N, e in zip((128, 256, 512, 1024), errs)]
    return ok, msg, table(("quantity", "a", "b", "c"), rows)


CRITERIA = {
    1: c1_interval_closed_form, 2: c2_static_oracles, 3: c3_asymptotic_sandwiches, 4: c4_polygon_lemma,
    5: c5_counterexamples, 6: c6_stop_and_go, 7: c7_shell, 8: c8_boundary_mode, 9: c9_observability,
    10: c10_stabilization,
}


def _run(n):
    ok, msg, text = CRITERIA[n]()
    CSV_OUT[n] = text
    assert report(n, ok, msg), msg


def test_criterion_01_interval_closed_form():
    _run(1)


def test_criterion_02_static_oracles():
    _run(2)


def test_criterion_03_asymptotic_sandwiches():
    _run(3)


def test_criterion_04_polygon_lemma():
    _run(4)


def test_criterion_05_counterexamples_replay():
    _run(5)


def test_criterion_06_stop_and_go():
    _run(6)


def test_criterion_07_shell():
    _run(7)


def test_criterion_08_boundary_mode():
    _run(8)


def test_criterion_09_observability_trend():
    _run(9)


def test_criterion_10_stabilization():
    _run(10)


def test_criterion_11_determinism():
    differing = []
    for n, fn in CRITERIA.items():
        first = CSV_OUT.get(n)
        if first is None:
            first = fn()[2]
        second = fn()[2]
        if first.encode() != second.encode():
            differing.append(n)
    ok = not differing
    assert report(11, ok, f"second run of criteria 1-10 byte-identical: {ok}"
                  + (f" (differs: {differing})" if differing else "")), differing
