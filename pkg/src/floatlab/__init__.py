"""Weighted floating bodies, centro-affine curvature functionals and space-form charts."""

from __future__ import annotations

from .bodies import *  # noqa: F401,F403
from .convergence import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .floating import *  # noqa: F401,F403
from .functionals import *  # noqa: F401,F403
from .measures import *  # noqa: F401,F403
from .oracles import *  # noqa: F401,F403
from .spaceforms import *  # noqa: F401,F403
from . import bodies, convergence, errors, floating, functionals, measures, oracles, spaceforms

__version__ = "0.1.0"
