"""Mechanical cat-state generation in a modulated two-mode optomechanical cavity."""

from . import analysis, closed, fock, model, open_system
from .closed import SinglePhotonState, SolverAbort, SolverConfig, evolve_closed
from .model import CatState, DerivedModulation, SystemParams, derive
from .open_system import PhotonSector, SystemDensityMatrix, evolve_open

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "closed",
    "fock",
    "model",
    "open_system",
    "CatState",
    "DerivedModulation",
    "PhotonSector",
    "SinglePhotonState",
    "SolverAbort",
    "SolverConfig",
    "SystemDensityMatrix",
    "SystemParams",
    "derive",
    "evolve_closed",
    "evolve_open",
    "__version__",
]
