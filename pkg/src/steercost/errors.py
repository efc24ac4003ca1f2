"""Exception hierarchy.

Every validation error derives from :class:`ValidationError` (a ``ValueError``)
so callers such as the CLI can map the whole family onto one exit code.
"""


class ValidationError(ValueError):
    pass


class NegativeEntry(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class SignalingDetected(ValidationError):
    pass


class BadWeights(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class InvalidMeasurement(ValidationError):
    pass


class InvalidAssemblage(ValidationError):
    pass


class NotMutuallyUnbiased(ValidationError):
    pass


class NotRealizable(ValidationError):
    pass


class StochasticityViolation(ValidationError):
    pass


class ZeroTransmission(ValidationError):
    pass


class UnknownPreset(ValidationError):
    pass


class NumericalFailure(RuntimeError):
    """Pivot breakdown or failed post-solve certification in the LP engine."""
