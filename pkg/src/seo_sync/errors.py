"""Exception hierarchy shared by all simulation and analysis modules."""


class SeoSyncError(Exception):
    """Base class for all library errors."""


class ParameterError(SeoSyncError, ValueError):
    """A physical parameter violates its documented constraint."""


class DegenerateCavityError(ParameterError):
    """All transmission probabilities vanish; the intensity profile is undefined."""


class UnsupportedBifurcationError(ParameterError):
    """Negative linear damping with non-positive quadratic damping (subcritical regime)."""


class BelowThresholdError(ParameterError):
    """Operation requires self-excited oscillation but the linear damping is non-negative."""


class StepSizeError(ParameterError):
    """Integration step violates the stability guard for the given rates."""


class LockedRegimeError(SeoSyncError):
    """Operation is defined only for a running phase (|detuning| > 1)."""


class UnlockedRegimeError(SeoSyncError):
    """Operation is defined only inside the synchronization region (|detuning| < 1)."""


class PhaseUndefinedError(SeoSyncError):
    """A complex sample has zero amplitude, so its phase is undefined."""

    def __init__(self, index: int):
        super().__init__(f"zero-amplitude sample at index {index}: phase undefined")
        self.index = index


class TooShortSeriesError(SeoSyncError):
    """The time series is too short for the requested analysis."""


class NoOscillationError(SeoSyncError):
    """Oscillation amplitude too small for a meaningful phase extraction."""


class DivergenceError(SeoSyncError):
    """The trajectory left the finite domain (numerical blow-up)."""

    def __init__(self, time: float):
        super().__init__(f"non-finite state encountered near t = {time:g}")
        self.time = time


class ConfigError(SeoSyncError):
    """Run configuration could not be parsed or failed validation."""
