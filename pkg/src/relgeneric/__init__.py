"""Structure-preserving solvers for the relativistic heat equation and the
relativistic kinetic Fokker-Planck equations in metriplectic (GENERIC) form."""

from .generic import CotangentVector, DiagnosticsRecord, State
from .grid import LineGrid, PhaseGrid
from .model import (INFINITE, CosinePotential, HarmonicPotential, ModelParams,
                    Potential, Variant, ZeroPotential)

__all__ = [
    "CotangentVector", "DiagnosticsRecord", "State", "LineGrid", "PhaseGrid",
    "INFINITE", "CosinePotential", "HarmonicPotential", "ModelParams",
    "Potential", "Variant", "ZeroPotential",
]
