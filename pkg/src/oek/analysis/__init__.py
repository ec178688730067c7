"""Evidence machinery: happens-before, races, equivalence, exploration, optimization."""

from oek.analysis.equiv import Equivalence, equivalent
from oek.analysis.explore import ExplorationReport, explore, final_store
from oek.analysis.hb import Race, TraceError, check_trace, detect_races, happens_before
from oek.analysis.optimize import OptimizeResult, optimize, optimize_rle

__all__ = [
    "Equivalence",
    "ExplorationReport",
    "OptimizeResult",
    "Race",
    "TraceError",
    "check_trace",
    "detect_races",
    "equivalent",
    "explore",
    "final_store",
    "happens_before",
    "optimize",
    "optimize_rle",
]
