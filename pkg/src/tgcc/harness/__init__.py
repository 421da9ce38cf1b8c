"""Command-line harness: configuration, CSV/replay records and SVG figures."""
from .config import ConfigError, RunConfig, build_config, parse_range
from .records import HEADER, SweepRow, format_rows, parse_rows, read_replay, read_rows, write_replay, write_rows

__all__ = [
    "ConfigError", "HEADER", "RunConfig", "SweepRow", "build_config", "format_rows", "parse_range",
    "parse_rows", "read_replay", "read_rows", "write_replay", "write_rows",
]
