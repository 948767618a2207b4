"""Exception hierarchy shared by all modules."""


class SpinTorusError(Exception):
    """Base class for errors raised by this package."""


class SingularityError(SpinTorusError, ValueError):
    """A potential was evaluated at (or too close to) a singular point."""


class CaptureError(SpinTorusError):
    """A trajectory fell into a singularity of the potential."""


class StiffnessError(SpinTorusError):
    """The adaptive integrator could not make progress."""


class NoBoundOrbitError(SpinTorusError, ValueError):
    """The requested (E, L) pair does not support a bound libration."""


class FallToCenterError(NoBoundOrbitError):
    """Angular momentum is below the relativistic capture threshold e^2/c."""


class DegenerateCycleError(SpinTorusError, ValueError):
    """A cycle collapses (circular orbit, no libration to count)."""


class NoBoundStateError(SpinTorusError, ValueError):
    """Quantized actions do not correspond to any bound torus."""


class SolverError(SpinTorusError):
    """Root finding for a quantized level failed."""
