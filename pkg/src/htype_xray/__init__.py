"""Sub-Riemannian X-ray transform on H-type groups.

Library layout:
  algebra     group/Lie-algebra structures, Clifford maps, frames
  geodesics   closed-form geodesic flow, momentum maps
  fock        truncated Fock basis, special functions, representations
  transform   test-function class and geodesic-ray quadratures
  frequency   group Fourier transform, multipliers, normal operators
  reconstruct slice-theorem verification, recovery, coverage experiments
  cli         configuration-driven experiment runner
"""

from .algebra import Covector, GroupPoint, HTypeStructure
from .fock import FockBasis, FockOperator
from .frequency import CompatiblePair
from .geodesics import GeodesicSpec, MomentumPair
from .transform import Quadrature, TestFunction

__version__ = "0.1.0"

__all__ = [
    "HTypeStructure",
    "GroupPoint",
    "Covector",
    "GeodesicSpec",
    "MomentumPair",
    "FockBasis",
    "FockOperator",
    "TestFunction",
    "Quadrature",
    "CompatiblePair",
    "__version__",
]
