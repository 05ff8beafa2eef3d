"""Shared exception types."""


class PaftreeError(Exception):
    """Base class for package errors."""


class ConfigurationError(PaftreeError):
    """Unknown family id, missing certificate, or invalid parameters."""


class NumericOverflowError(PaftreeError):
    """A fitness or rate evaluation left the finite double range."""


class PrecisionUnreachableError(PaftreeError):
    """The requested tolerance cannot be certified within the term budget."""


class ModeError(PaftreeError):
    """Operation requires a tree grown by the other engine."""


class LambdaDomainError(PaftreeError):
    """The tilt lambda is not below inf f(i, w*) over the summation range."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index
