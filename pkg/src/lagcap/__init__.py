"""Numerical geometry of Lagrangian surfaces in C^2 with Legendrian boundary on a round sphere."""

__version__ = "0.1.0"

from . import ambient, boundary, charts, curvature, examples, hopf, solver  # noqa: E402,F401
from ._backend import HAVE_NUMBA, USE_NUMBA, backend_name  # noqa: E402,F401
