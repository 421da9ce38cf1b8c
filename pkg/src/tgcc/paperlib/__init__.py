"""Closed-form results and constructive counterexamples."""
from .closed_forms import *  # noqa: F401,F403
from .closed_forms import __all__ as _cf_all

__all__ = list(_cf_all)
from .counterexamples import *  # noqa: F401,F403,E402
from .counterexamples import __all__ as _cx_all  # noqa: E402

__all__ += list(_cx_all)
