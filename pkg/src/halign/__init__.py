"""Bilevel horizontal road alignment: pattern search over intersection points
and curve radii, scored by an earthwork LP for the vertical profile."""

__version__ = "0.1.0"

from .bilevel import OptimizationReport, evaluate, optimize  # noqa: E402,F401
from .dfo import SearchConfig  # noqa: E402,F401
from .geometry import Alignment, build_path  # noqa: E402,F401
from .terrain import Corridor, load_corridor, read_corridor  # noqa: E402,F401
from .valign import VAlignConfig, VAlignProblem, valign_cost  # noqa: E402,F401
