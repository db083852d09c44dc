"""Exception types raised across the package."""


class ShapeError(ValueError):
    """An array or parameter vector has the wrong length or shape."""


class EmbeddingError(ValueError):
    """Data cannot be loaded into statevector amplitudes."""


class NumericError(ArithmeticError):
    """A non-finite value appeared where a finite one is required.

    ``record`` optionally carries the diagnostic state at the point of failure.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class UnsupportedParameterError(ValueError):
    """A derivative rule was requested for a parameter it does not apply to."""


class ConfigError(ValueError):
    """Run configuration is malformed or incomplete."""


class CompatibilityError(ValueError):
    """A file does not match the format, model or dataset it is used with."""
