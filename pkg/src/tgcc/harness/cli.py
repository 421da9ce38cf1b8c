"""``tgcc`` command-line front end.

Usage: ``tgcc <command> key=value ... [--config F] [--out DIR] [--seed S]
[--threads N] [--svg] [--timing]``.  Exit codes: 0 success, 1 a check is
violated (or a replayed ray hits its window), 2 configuration or I/O error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from itertools import product

import numpy as np

from .. import gcc
from ..geometry import DomainKind
from ..obsdomain import EmptyRegionError, MovingDomainSpec, ShellSpec, boundary_shell
from ..paperlib.counterexamples import OBSTRUCTIONS, make_counterexample, replay as replay_cx
from ..rayflow import RayState, trace
from . import svg
from .config import COMMANDS, ConfigError, RunConfig, build_config, sampling_from
from .records import SweepRow, format_rows, read_replay, write_replay

EXIT_OK, EXIT_VIOLATED, EXIT_CONFIG = 0, 1, 2

EPILOG = """commands:
  trace           trace a ray: domain=... pos=x,y dir=dx,dy t_max=...
  check           t-GCC check at horizon T (exit 1 when violated)
  t0              control-time estimate (sampling lower bound)
  sweep           t0 (or check when T is given) over ranges start:stop:step
  counterexample  obstruction ray + replay file (obstruction=... n/p/q/m/v)
  replay          replay a counterexample file (file=...)
  wave1d          observability ratios (task=ratio) or damped decay (task=decay)
  shell           t-GCC check of the space-time shell around Q (1D)

domain keys: domain (interval|disk|square|sphere), mode (interior|boundary),
  motion (constant_speed|reflecting_1d|stop_and_go|custom), v, a, eps, delta,
  t_start, offset, schedule (t:anchor;t:anchor...).
Angles are in radians, lengths in domain units.  TGCC_THREADS is used when
--threads is not given.
"""


class _Timer:
    def __init__(self, enabled):
        self.enabled = enabled
        self.t0 = time.perf_counter()

    def ms(self):
        return round((time.perf_counter() - self.t0) * 1000.0, 3) if self.enabled else None


# ---------------------------------------------------------------------------
# helpers


def _floats(text, n=None, key="value"):
    try:
        vals = tuple(float(x) for x in str(text).split(","))
    except ValueError:
        raise ConfigError(f"bad {key}: {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"{key} needs {n} components, got {len(vals)}")
    return vals


def spec_from(cfg: RunConfig, **over) -> MovingDomainSpec:
    vals = dict(cfg.values, **over)
    if "domain" not in vals:
        raise ConfigError("missing required key 'domain'")
    if "a" not in vals:
        raise ConfigError("missing required key 'a'")
    schedule = ()
    if vals.get("schedule"):
        try:
            schedule = tuple(tuple(float(x) for x in kn.split(":")) for kn in vals["schedule"].split(";"))
        except ValueError:
            raise ConfigError(f"bad schedule {vals['schedule']!r}") from None
    try:
        kind = DomainKind.parse(vals["domain"])
        return MovingDomainSpec(kind, a=vals["a"], eps=vals.get("eps"), v=vals.get("v", 0.0),
                                motion=vals.get("motion", "constant_speed"), delta=vals.get("delta", 0.0),
                                t_start=vals.get("t_start", 0.0), schedule=schedule,
                                mode=vals.get("mode", "interior"), offset=vals.get("offset", 0.0))
    except (EmptyRegionError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _row(spec, verdict=None, T=None, mode=None, timer=None, **kw) -> SweepRow:
    base = dict(geometry=spec.kind.value, mode=mode or spec.mode, v=float(spec.v), a=float(spec.a),
                eps=None if spec.eps is None else float(spec.eps), delta=float(spec.delta),
                T=None if T is None else float(T))
    if verdict is not None:
        base.update(t0_estimate=float(verdict.t0_estimate), status=verdict.status,
                    worst_ray=verdict.worst_ray.describe() if verdict.worst_ray else "")
    base.update(kw)
    if timer is not None:
        base["wall_ms"] = timer.ms()
    return SweepRow(**base)


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return path


def _check(spec, T, sampling):
    if spec.mode == "boundary":
        return gcc.check_tgcc_boundary(spec.kind, spec, T, sampling)
    return gcc.check_tgcc(spec.kind, spec, T, sampling)


# ---------------------------------------------------------------------------
# commands


def cmd_trace(cfg, args):
    domain = DomainKind.parse(cfg.require("domain"))
    dim = {DomainKind.INTERVAL: 1, DomainKind.DISK: 2, DomainKind.SQUARE: 2, DomainKind.SPHERE: 3}[domain]
    pos = _floats(cfg.require("pos"), dim, "pos")
    d = np.asarray(_floats(cfg.require("dir"), dim, "dir"))
    if domain is DomainKind.SPHERE:
        p = np.asarray(pos) / np.linalg.norm(pos)
        d = d - (d @ p) * p
        pos = tuple(p)
    if not np.linalg.norm(d) > 0:
        raise ConfigError("dir must be a non-zero vector tangent to the domain")
    d = tuple(d / np.linalg.norm(d))
    t_max = cfg.require("t_max")
    try:
        traj = trace(RayState(domain, pos, d, 0.0), t_max)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    lines = ["t,x,y,z,transversal,corner"]
    for ev in traj.events:
        pt = list(ev.point) + [None] * (3 - len(ev.point))
        lines.append(",".join([repr(float(ev.t))] + ["" if c is None else repr(float(c)) for c in pt]
                              + [str(bool(ev.transversal)).lower(), str(bool(getattr(ev, "corner", False))).lower()]))
    _write(args.out, "trace.csv", "\n".join(lines) + "\n")
    print(f"{len(traj.events)} bounces up to t = {t_max!r}" + (f" ({', '.join(traj.flags)})" if traj.flags else ""))
    if args.svg:
        spec = spec_from(cfg) if "a" in cfg.values else None
        if domain is DomainKind.INTERVAL:
            text = svg.space_time_svg(spec, t_max, [(pos[0], 1.0 if d[0] > 0 else -1.0)], "trace")
        else:
            text = svg.snapshot_svg(domain, spec, (0.0,), traj.polyline(), "trace")
        _write(args.out, "trace.svg", text)
    return EXIT_OK


def cmd_check(cfg, args):
    spec = spec_from(cfg)
    T = cfg.require("T")
    timer = _Timer(args.timing)
    try:
        verdict = _check(spec, T, sampling_from(cfg))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    row = _row(spec, verdict, T, timer=timer)
    _write(args.out, "results.csv", format_rows([row]))
    print(("satisfied" if verdict.satisfied else "violated") + f": status={verdict.status} "
          f"sup_hit={verdict.t0_estimate!r} rays={verdict.n_rays}")
    if args.svg:
        _emit_region_svg(spec, T, verdict, args, "check.svg")
    return EXIT_OK if verdict.satisfied else EXIT_VIOLATED


def _t0_point(spec, sampling, horizon, T=None, timing=False):
    timer = _Timer(timing)
    if T is not None:
        verdict = _check(spec, T, sampling)
        return _row(spec, verdict, T, timer=timer), verdict
    if spec.mode == "boundary":
        verdict = gcc.check_tgcc_boundary(spec.kind, spec, horizon, sampling)
    else:
        verdict = gcc.estimate_T0(spec.kind, spec, sampling, horizon)
    return _row(spec, verdict, timer=timer), verdict


def cmd_t0(cfg, args):
    spec = spec_from(cfg)
    row, verdict = _t0_point(spec, sampling_from(cfg), cfg.get("horizon", 100.0), timing=args.timing)
    _write(args.out, "results.csv", format_rows([row]))
    print(f"t0_estimate={verdict.t0_estimate!r} margin={verdict.margin!r} status={verdict.status} "
          f"worst_ray={row.worst_ray}")
    if args.svg:
        _emit_region_svg(spec, verdict.t0_estimate if math.isfinite(verdict.t0_estimate) else 10.0,
                         verdict, args, "t0.svg")
    return EXIT_OK


def cmd_sweep(cfg, args):
    axes = {}
    for k in ("v", "a", "eps", "delta", "T"):
        val = cfg.get(k)
        if val is None:
            continue
        axes[k] = val if isinstance(val, list) else [val]
    if "a" not in axes:
        raise ConfigError("missing required key 'a'")
    names = list(axes)
    grid = list(product(*(axes[n] for n in names)))
    sampling = sampling_from(cfg)
    horizon = cfg.get("horizon", 100.0)
    point_threads = max(1, cfg.threads)
    # parallelism across grid points; each point runs single-threaded
    inner = replace(sampling, threads=1) if point_threads > 1 else sampling

    def run(point):
        kw = dict(zip(names, point))
        T = kw.pop("T", None)
        spec = spec_from(cfg, **kw)
        return _t0_point(spec, inner, horizon, T, args.timing)[0]

    # validate every grid point before running any
    for point in grid:
        kw = dict(zip(names, point))
        kw.pop("T", None)
        spec_from(cfg, **kw)
    if point_threads > 1:
        with ThreadPoolExecutor(max_workers=point_threads) as ex:
            rows = list(ex.map(run, grid))
    else:
        rows = [run(p) for p in grid]
    _write(args.out, "results.csv", format_rows(rows))
    print(f"{len(rows)} grid points written")
    if args.svg:
        _emit_sweep_svg(rows, axes, args)
    return EXIT_OK


def cmd_counterexample(cfg, args):
    geometry = DomainKind.parse(cfg.require("domain"))
    obstruction = cfg.require("obstruction")
    if geometry not in OBSTRUCTIONS:
        raise ConfigError(f"no obstructions for the {geometry.value}")
    params = {k: cfg.values[k] for k in ("n", "p", "q", "m", "v") if k in cfg.values}
    timer = _Timer(args.timing)
    try:
        cx = make_counterexample(geometry, obstruction, cfg.get("horizon"), cfg.get("a"), **params)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"counterexample: {exc}") from None
    spec = cx.spec()
    res = replay_cx(cx)
    fam, p = gcc.params_from_state(cx.ray)
    worst = gcc.FAMILY_NAMES[fam] + ":" + ";".join(repr(float(x)) for x in p)
    row = _row(spec, None, cx.horizon, timer=timer, worst_ray=worst,
               status="exceeded_horizon" if res.hit_free else "finite",
               t0_estimate=None if res.hit_free else res.hit_time)
    _write(args.out, "results.csv", format_rows([row]))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, cfg.get("file", "counterexample.ini"))
    write_replay(path, geometry.value, obstruction, dict(cx.params), cx.v, spec.a, spec.eps, cx.horizon,
                 cx.ray.pos, cx.ray.dir, cx.ray.mode, cx.clearance)
    print(f"{obstruction} ray, v={cx.v!r}, a0={cx.valid_a0!r}, eps0={cx.valid_eps0!r}, "
          f"clearance={cx.clearance!r}; replay file {path}")
    if args.svg:
        from ..rayflow import trace as _trace

        traj = _trace(cx.ray, min(cx.horizon, 20.0))
        times = np.linspace(0.0, min(cx.horizon, 20.0), 5)
        _write(args.out, "counterexample.svg", svg.snapshot_svg(geometry, spec, times, traj.polyline(), obstruction))
    return EXIT_OK


def cmd_replay(cfg, args):
    path = cfg.require("file")
    try:
        rec = read_replay(path)
    except FileNotFoundError:
        raise ConfigError(f"cannot read replay file {path}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    kind = DomainKind.parse(rec["geometry"])
    spec = MovingDomainSpec(kind, a=rec["a"], eps=rec["eps"], v=rec["v"])
    horizon = cfg.get("horizon", rec["horizon"])
    ray = RayState(kind, rec["pos"], rec["dir"], 0.0, rec["mode"])
    timer = _Timer(args.timing)
    t = gcc.first_hit_time(kind, spec, ray, horizon)
    fam, p = gcc.params_from_state(ray)
    worst = gcc.FAMILY_NAMES[fam] + ":" + ";".join(repr(float(x)) for x in p)
    row = _row(spec, None, horizon, timer=timer, worst_ray=worst,
               status="exceeded_horizon" if t is None else "finite", t0_estimate=t)
    _write(args.out, "results.csv", format_rows([row]))
    if t is None:
        clr = rec["clearance"]
        print(f"no hit over horizon {horizon!r}" + ("" if clr is None else f" (min clearance {clr!r})"))
        return EXIT_OK
    print(f"hit at t = {t!r}")
    return EXIT_VIOLATED


def cmd_wave1d(cfg, args):
    from .. import wave1d

    spec = spec_from(cfg)
    if spec.kind is not DomainKind.INTERVAL:
        raise ConfigError("wave1d runs on the interval")
    task = cfg.get("task", "ratio")
    if task == "ratio":
        T = cfg.require("T")
        sigmas = _floats(cfg.get("sigmas", "0.04,0.02,0.01"), key="sigmas")
        family = wave1d.default_family(spec, T, sigmas, cfg.get("k_max", 32))
        inf, reps = wave1d.obs_ratio_infimum(spec, T, family)
        lines = ["data,observed,total,ratio,error,flagged"]
        for d, r in zip(family, reps):
            lines.append(f'"{d.tag}",{r.observed!r},{r.total!r},{r.ratio!r},{r.error!r},{str(r.flagged).lower()}')
        _write(args.out, "wave1d.csv", "\n".join(lines) + "\n")
        print(f"ratio infimum over {len(family)} data: {inf!r}")
        if args.svg:
            worst = family[int(np.argmin([r.ratio for r in reps]))]
            ts = np.linspace(0.0, T, 61)[:-1] + T / 120
            xs = np.linspace(0.0, 1.0, 61)[:-1] + 1.0 / 120
            vals = wave1d.dalembert_eval(worst, ts[:, None], xs[None, :])[1] ** 2
            _write(args.out, "wave1d.svg", svg.heatmap_svg(vals, T, spec, worst.tag))
        return EXIT_OK
    if task == "decay":
        fit = wave1d.damped_decay_rate(spec, N=cfg.get("N", 4096), periods=cfg.get("periods", 40), seed=cfg.seed)
        lines = ["mu,nu,residual", f"{fit.mu!r},{fit.nu!r},{fit.residual!r}"]
        _write(args.out, "wave1d.csv", "\n".join(lines) + "\n")
        print(f"decay fit: mu={fit.mu!r} nu={fit.nu!r} residual={fit.residual!r}")
        return EXIT_OK
    raise ConfigError(f"unknown wave1d task {task!r} (ratio or decay)")


def cmd_shell(cfg, args):
    spec = spec_from(cfg)
    T, h = cfg.require("T"), cfg.require("h")
    T_prime = cfg.get("T_prime", 2.0 * T)
    try:
        region = boundary_shell(ShellSpec(spec, T, h))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    timer = _Timer(args.timing)
    verdict = gcc.check_tgcc(DomainKind.INTERVAL, region, T_prime, sampling_from(cfg))
    row = _row(spec, verdict, T_prime, mode="shell", timer=timer)
    _write(args.out, "results.csv", format_rows([row]))
    print(("satisfied" if verdict.satisfied else "violated") + f" at T'={T_prime!r}: sup_hit={verdict.t0_estimate!r}")
    return EXIT_OK if verdict.satisfied else EXIT_VIOLATED


HANDLERS = {
    "trace": cmd_trace, "check": cmd_check, "t0": cmd_t0, "sweep": cmd_sweep,
    "counterexample": cmd_counterexample, "replay": cmd_replay, "wave1d": cmd_wave1d, "shell": cmd_shell,
}


# ---------------------------------------------------------------------------
# figures


def _emit_region_svg(spec, T, verdict, args, name):
    st = verdict.worst_ray.state if verdict.worst_ray is not None else None
    if spec.kind is DomainKind.INTERVAL:
        rays = [(st.pos[0], st.dir[0])] if st is not None and st.dir is not None else []
        text = svg.space_time_svg(spec, T, rays, name)
    else:
        poly = trace(st, max(T, 1e-3)).polyline() if st is not None else None
        text = svg.snapshot_svg(spec.kind, spec, np.linspace(0.0, T, 4), poly, name)
    _write(args.out, name, text)


def _emit_sweep_svg(rows, axes, args):
    keys = [k for k in axes if len(axes[k]) > 1][:2]
    if len(keys) < 2:
        return
    kx, ky = keys
    vals = np.full((len(axes[ky]), len(axes[kx])), np.nan)
    for r in rows:
        i = axes[ky].index(getattr(r, ky))
        j = axes[kx].index(getattr(r, kx))
        vals[i, j] = r.t0_estimate if r.t0_estimate is not None else np.nan
    finite = np.where(np.isfinite(vals), vals, 0.0)
    _write(args.out, "sweep.svg", svg.heatmap_svg(finite, 1.0, None, f"t0 over {kx} x {ky}"))


# ---------------------------------------------------------------------------
# entry point


def make_parser():
    p = argparse.ArgumentParser(prog="tgcc", description="Time-dependent control condition toolkit.",
                                epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("args", nargs="*", help="command followed by key=value pairs")
    p.add_argument("--config", help="INI file with [domain], [sampling] and a command block")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (fallback: TGCC_THREADS)")
    p.add_argument("--svg", action="store_true", help="also write an SVG figure")
    p.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_intermixed_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    rest = list(args.args)
    command = rest.pop(0) if rest and "=" not in rest[0] else None
    if command is not None and command not in COMMANDS:
        print(f"tgcc: unknown command {command!r}", file=sys.stderr)
        return EXIT_CONFIG
    threads = args.threads if args.threads is not None else gcc.default_threads()
    try:
        cfg = build_config(command, rest, args.config, args.seed, threads)
        return HANDLERS[cfg.command](cfg, args)
    except ConfigError as exc:
        print(f"tgcc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"tgcc: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
