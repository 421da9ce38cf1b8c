"""Run configuration: INI files plus ``key=value`` command-line overrides.

An INI file has one ``[domain]`` block, optionally a ``[sampling]`` block,
and one block named after the command (``[t0]``, ``[check]``, ...).
Angles are radians, lengths domain units.  Sweep axes accept ranges
``start:stop:step`` (stop included).
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from ..gcc import RaySampling

COMMANDS = ("trace", "check", "t0", "sweep", "counterexample", "replay", "wave1d", "shell")

DOMAIN_KEYS = {"domain", "geometry", "mode", "motion", "v", "a", "eps", "delta", "t_start", "offset", "schedule"}
SAMPLING_KEYS = {f.name for f in fields(RaySampling)} - {"seed", "threads"} | {"sampling_scale"}
COMMAND_KEYS = {
    "trace": {"pos", "dir", "t_max"},
    "check": {"T"},
    "t0": {"horizon"},
    "sweep": {"T", "horizon"},
    "counterexample": {"obstruction", "n", "p", "q", "m", "horizon", "file"},
    "replay": {"file", "horizon"},
    "wave1d": {"task", "T", "N", "periods", "k_max", "sigmas"},
    "shell": {"T", "h", "T_prime"},
}
RANGE_KEYS = {"v", "a", "eps", "delta", "T"}
FLOAT_KEYS = {"v", "a", "eps", "delta", "t_start", "offset", "T", "horizon", "t_max", "h", "T_prime",
              "sampling_scale"}
INT_KEYS = {"n", "p", "q", "m", "N", "periods", "k_max"} | (SAMPLING_KEYS - {"sampling_scale"})


class ConfigError(ValueError):
    """Invalid configuration (exit code 2)."""


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError(f"missing required key {key!r} for {self.command}")
        return self.values[key]


def parse_range(text: str) -> list:
    """``start:stop:step`` -> floats start, start + step, ... <= stop."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"bad range {text!r}: expected start:stop:step")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}: {exc}") from None
    if not step > 0:
        raise ConfigError(f"bad range {text!r}: step must be positive")
    if hi < lo:
        raise ConfigError(f"bad range {text!r}: empty")
    n = int((hi - lo) / step + 1e-9) + 1
    # rounding keeps decimal grids free of accumulation noise
    return [round(lo + i * step, 12) for i in range(n)]


def _convert(key: str, raw: str, command: str):
    raw = raw.strip()
    if key in RANGE_KEYS and ":" in raw:
        if command != "sweep":
            raise ConfigError(f"ranges are only allowed in sweeps (key {key!r})")
        return parse_range(raw)
    try:
        if key in FLOAT_KEYS:
            return float(raw)
        if key in INT_KEYS:
            return int(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None
    return raw


def allowed_keys(command: str) -> set:
    return DOMAIN_KEYS | SAMPLING_KEYS | COMMAND_KEYS[command]


def build_config(command: str | None, pairs=(), ini_path=None, seed=None, threads=None) -> RunConfig:
    """Merge an INI file (if any) with ``key=value`` pairs (pairs win)."""
    raw = {}
    if ini_path is not None:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            if not cp.read(ini_path, encoding="utf-8"):
                raise ConfigError(f"cannot read config file {ini_path}")
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file: {exc}") from None
        blocks = [s for s in cp.sections() if s not in ("domain", "sampling")]
        if command is None:
            if len(blocks) != 1:
                raise ConfigError("config file must contain exactly one command block")
            command = blocks[0]
        for s in blocks:
            if s != command:
                raise ConfigError(f"config block [{s}] does not match command {command!r}")
        for s in ("domain", "sampling", command):
            if s in cp:
                raw.update(cp[s])
    if command is None:
        raise ConfigError("no command given")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v
    ok = allowed_keys(command)
    values = {}
    for k, v in raw.items():
        if k not in ok:
            raise ConfigError(f"unknown key {k!r} for command {command}")
        values[k] = _convert(k, v, command)
    if "geometry" in values:
        values.setdefault("domain", values.pop("geometry"))
    return RunConfig(command, values, 0 if seed is None else int(seed), 1 if threads is None else int(threads))


def sampling_from(cfg: RunConfig) -> RaySampling:
    kw = {k: cfg.values[k] for k in SAMPLING_KEYS - {"sampling_scale"} if k in cfg.values}
    s = RaySampling(seed=cfg.seed, threads=cfg.threads, **kw)
    scale = cfg.get("sampling_scale", 1.0)
    return s if scale == 1.0 else s.scaled(scale)
