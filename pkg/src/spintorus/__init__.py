"""Semiclassical quantization of Dirac particles on spin tori."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CaptureError,
    DegenerateCycleError,
    FallToCenterError,
    NoBoundOrbitError,
    NoBoundStateError,
    SingularityError,
    SolverError,
    SpinTorusError,
    StiffnessError,
)
from .symbol import FieldConfig, PhasePoint, coulomb, free_particle, harmonic, polynomial  # noqa: E402
from .quantize import enumerate_spectrum, solve_level, QuantumNumbers  # noqa: E402

__all__ = [
    "__version__",
    "CaptureError",
    "DegenerateCycleError",
    "FallToCenterError",
    "FieldConfig",
    "NoBoundOrbitError",
    "NoBoundStateError",
    "PhasePoint",
    "QuantumNumbers",
    "SingularityError",
    "SolverError",
    "SpinTorusError",
    "StiffnessError",
    "coulomb",
    "enumerate_spectrum",
    "free_particle",
    "harmonic",
    "polynomial",
    "solve_level",
]
