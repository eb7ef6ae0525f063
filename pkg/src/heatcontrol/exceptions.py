"""Exception types raised by the heatcontrol package."""


class HeatControlError(Exception):
    """Base class for all package errors."""


class MollificationError(HeatControlError):
    """The requested L2 tolerance cannot be met at the minimum margin."""


class DeltaSearchError(HeatControlError):
    """No pulse duration in the halving sequence meets the error budget."""


class DegenerateStateError(HeatControlError):
    """The state is too close to zero on the lift set to divide by it."""


class DampingSweepError(HeatControlError):
    """No damping constant in the grid achieves the window criterion."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved or {}


class SynthesisError(HeatControlError):
    """A synthesis stage failed; ``stage`` names which one."""

    def __init__(self, message, stage, achieved_error=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.achieved_error = achieved_error


class ConfigError(HeatControlError, ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
