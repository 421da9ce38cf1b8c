"""Result rows, CSV emission/parsing and counterexample replay files."""
from __future__ import annotations

import configparser
import csv
import io
import math
from dataclasses import dataclass, fields

HEADER = ("geometry", "mode", "v", "a", "eps", "delta", "T", "t0_estimate", "status", "worst_ray", "wall_ms")
STATUSES = ("finite", "exceeded_horizon", "indeterminate")


@dataclass(frozen=True)
class SweepRow:
    geometry: str
    mode: str
    v: float | None = None
    a: float | None = None
    eps: float | None = None
    delta: float | None = None
    T: float | None = None
    t0_estimate: float | None = None
    status: str = "finite"
    worst_ray: str = ""
    wall_ms: float | None = None


def _fmt(x) -> str:
    # missing or non-finite values become empty cells, never nan
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ""
    return str(x)


def _parse_float(s: str):
    return float(s) if s != "" else None


def format_rows(rows, header=HEADER) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(getattr(r, h) if not isinstance(r, dict) else r.get(h)) for h in header])
    return buf.getvalue()


def write_rows(rows, path, header=HEADER):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_rows(rows, header))


def parse_rows(text: str) -> list:
    """Inverse of :func:`format_rows` for the sweep schema."""
    reader = csv.reader(io.StringIO(text))
    head = tuple(next(reader))
    if head != HEADER:
        raise ValueError(f"unexpected CSV header {head}")
    floats = {f.name for f in fields(SweepRow)} - {"geometry", "mode", "status", "worst_ray"}
    out = []
    for rec in reader:
        kw = {h: (_parse_float(c) if h in floats else c) for h, c in zip(HEADER, rec)}
        out.append(SweepRow(**kw))
    return out


def read_rows(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return parse_rows(fh.read())


# ---------------------------------------------------------------------------
# replay files


def write_replay(path, geometry: str, obstruction: str, params: dict, v: float, a: float,
                 eps: float | None, horizon: float, pos, direction, mode: str = "interior",
                 clearance: float | None = None):
    """Key=value file with everything needed to replay a ray against a window."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["replay"] = {
        "geometry": geometry,
        "obstruction": obstruction,
        "v": repr(float(v)),
        "a": repr(float(a)),
        "eps": "" if eps is None else repr(float(eps)),
        "horizon": repr(float(horizon)),
        "pos": ",".join(repr(float(x)) for x in pos),
        "dir": "" if direction is None else ",".join(repr(float(x)) for x in direction),
        "mode": mode,
        "clearance": "" if clearance is None else repr(float(clearance)),
    }
    cp["params"] = {k: str(val) for k, val in sorted(params.items())}
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)


def read_replay(path) -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path, encoding="utf-8"):
        raise FileNotFoundError(path)
    if "replay" not in cp:
        raise ValueError(f"{path}: missing [replay] section")
    r = cp["replay"]
    need = ("geometry", "v", "a", "horizon", "pos", "mode")
    for k in need:
        if k not in r:
            raise ValueError(f"{path}: missing key {k!r}")
    return {
        "geometry": r["geometry"],
        "obstruction": r.get("obstruction", ""),
        "v": float(r["v"]),
        "a": float(r["a"]),
        "eps": _parse_float(r.get("eps", "")),
        "horizon": float(r["horizon"]),
        "pos": tuple(float(x) for x in r["pos"].split(",")),
        "dir": tuple(float(x) for x in r["dir"].split(",")) if r.get("dir", "") else None,
        "mode": r["mode"],
        "clearance": _parse_float(r.get("clearance", "")),
        "params": dict(cp["params"]) if "params" in cp else {},
    }
