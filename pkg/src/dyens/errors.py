"""Exception and warning types raised across the package."""


class DyensError(Exception):
    """Base class for all package errors."""


class TooFewSamples(DyensError, ValueError):
    pass


class ShapeMismatch(DyensError, ValueError):
    pass


class EmptyPool(DyensError, ValueError):
    pass


class EmptyInput(DyensError, ValueError):
    pass


class ConstantSeries(DyensError, ValueError):
    pass


class NonFiniteObservation(DyensError, ValueError):
    pass


class NonFiniteLoss(DyensError, RuntimeError):
    pass


class NumericalFailure(DyensError, RuntimeError):
    pass


class CalibrationFailed(DyensError, RuntimeError):
    """No successful trials were available to calibrate a decoder."""


class ConfigError(DyensError, ValueError):
    pass


class SingularFit(UserWarning):
    """Emitted when a least-squares fit is rank deficient and a fallback is used."""
