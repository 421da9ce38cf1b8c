"""Ray tracing, moving observation regions and control-time estimation for
the wave equation on the interval, disk, square and sphere."""
from .estimator import ControlTimeEstimator
from .gcc import RaySampling, TgccVerdict, check_tgcc, check_tgcc_boundary, estimate_T0, first_hit_time
from .geometry import DomainKind
from .obsdomain import MovingDomainSpec, ShellSpec, boundary_shell
from .rayflow import RayState, trace

__version__ = "0.1.0"

__all__ = [
    "ControlTimeEstimator", "DomainKind", "MovingDomainSpec", "RaySampling", "RayState", "ShellSpec",
    "TgccVerdict", "boundary_shell", "check_tgcc", "check_tgcc_boundary", "estimate_T0",
    "first_hit_time", "trace",
]
