"""Exception types shared across the package."""


class LosPlaceError(Exception):
    """Base class for all losplace errors."""


class DegenerateFrameError(LosPlaceError):
    """The two users coincide, so no frame can be built."""


class UnsupportedInputError(LosPlaceError):
    """Input outside the supported model (e.g. users not at ground level)."""


class UndefinedAngleError(LosPlaceError):
    """Deviation angle requested for the midpoint itself."""


class NoCrossingError(LosPlaceError):
    """The ray from the user never crosses the middle perpendicular plane."""


class InvalidReferenceError(LosPlaceError):
    """Cap region requested for a reference point with d0 <= H_min."""


class NotPermissibleError(LosPlaceError):
    """Position below the minimum flight altitude."""


class GenerationError(LosPlaceError):
    """City generation could not satisfy the requested density."""


class SamplingError(LosPlaceError):
    """User-pair rejection sampling exceeded its retry budget."""


class NoInitialPointError(LosPlaceError):
    """No double-LOS point found on the vertical line within the altitude cap."""


class InvalidStartError(LosPlaceError):
    """Search started from a point that is not a valid double-LOS start."""


class GuardViolationError(LosPlaceError):
    """Ray feet on opposite sides of the vertical axis; no same-side solution."""


class UnsupportedConfigurationError(LosPlaceError):
    """Stripe pair configuration outside the closed-form solver's domain."""


class NoCandidateError(LosPlaceError):
    """No candidate position could be produced from the given intervals."""


class ConfigurationError(LosPlaceError):
    """Invalid scheme, scenario, or grid configuration."""
