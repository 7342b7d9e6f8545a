"""Pseudospherical nets: smooth Chebyshev forms, discrete K-nets and nets on time scales."""

from .errors import *  # noqa: F401,F403
from .geometry import *  # noqa: F401,F403
from .timescale import *  # noqa: F401,F403
from .forms import *  # noqa: F401,F403
from .ksurface import *  # noqa: F401,F403
from .tssurface import *  # noqa: F401,F403
from .samples import *  # noqa: F401,F403

__version__ = "0.1.0"
