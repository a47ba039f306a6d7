"""Skew products on the infinite torus: rigidity, complexity and Möbius disjointness experiments."""

__version__ = "0.1.0"

from .diophantine import ConvergentTable, IrrationalSpec, RealHandle, expand, nearest_distance  # noqa: E402
from .mobius import MobiusTable, sieve  # noqa: E402
from .cocycle import Cocycle, FourierSeries, resonant_sets  # noqa: E402
from .dynamics import SkewProductSpec, orbit, power  # noqa: E402

__all__ = [
    "__version__", "ConvergentTable", "IrrationalSpec", "RealHandle", "expand", "nearest_distance",
    "MobiusTable", "sieve", "Cocycle", "FourierSeries", "resonant_sets", "SkewProductSpec", "orbit", "power",
]
