"""Numerical solver and certificates for focusing ergodic mean-field games."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .exponents import *  # noqa: E402,F401,F403
from .hamiltonian import *  # noqa: E402,F401,F403
from .grid import *  # noqa: E402,F401,F403
from .functionals import *  # noqa: E402,F401,F403
from .solver import *  # noqa: E402,F401,F403
from .scaling import *  # noqa: E402,F401,F403
from .verify import *  # noqa: E402,F401,F403
from .checkpoint import *  # noqa: E402,F401,F403
from .reports import *  # noqa: E402,F401,F403
