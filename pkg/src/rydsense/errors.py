"""Exception hierarchy used across rydsense."""


class RydsenseError(Exception):
    """Base class for all library errors."""


class ValidationError(RydsenseError, ValueError):
    """An input violates a documented precondition."""


class StructureError(ValidationError):
    """The coupling graph is not a ladder (chain)."""


class DegenerateSteadyStateError(RydsenseError):
    """The Liouvillian kernel is not one-dimensional."""


class SolverError(RydsenseError):
    """A steady-state solve failed at a specific operating point.

    ``detuning`` and ``velocity`` identify the failing point when known.
    """

    def __init__(self, message, detuning=None, velocity=None):
        self.detuning = detuning
        self.velocity = velocity
        where = []
        if detuning is not None:
            where.append(f"detuning={detuning:.6g} rad/s")
        if velocity is not None:
            where.append(f"velocity={velocity:.6g} m/s")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NoPeakError(RydsenseError):
    """No peak rises above the baseline noise floor."""


class UnresolvedSplittingError(RydsenseError):
    """A trace does not show a resolved Autler-Townes doublet."""


class UnmeasurableError(RydsenseError):
    """The response slope is zero, so no field can be resolved."""


class UndefinedSNRError(RydsenseError):
    """Both detection channels are noiseless; SNR is undefined."""


class ConfigError(RydsenseError):
    """A scenario configuration does not validate."""
