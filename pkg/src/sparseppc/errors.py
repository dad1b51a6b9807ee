"""Exception hierarchy shared across the package.

Configuration-style problems derive from ConfigError so the CLI can map
them to exit code 2; everything else maps to exit code 3.
"""


class SparsePpcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SparsePpcError):
    """Invalid configuration, input document, or argument value."""


class TraceValidationError(ConfigError):
    """A dropout trace (scripted or loaded) violates the channel contract."""


class CodecTrainingError(ConfigError):
    """Entropy-coder training received an empty or malformed sample set."""


class NumericError(SparsePpcError):
    """A numeric computation produced non-finite or sign-violating values."""


class SolverFailureError(SparsePpcError):
    """An iterative solver stopped without meeting its convergence contract."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DesignInfeasibleError(SparsePpcError):
    """The requested cost design cannot be realized for this plant."""


class FeasibilityError(SparsePpcError):
    """A packet solver exhausted its search without meeting the budget."""

    def __init__(self, message, residual_sq=None, budget=None):
        super().__init__(message)
        self.residual_sq = residual_sq
        self.budget = budget


class ProtocolViolationError(SparsePpcError):
    """The actuator buffer was driven outside the bounded-dropout contract."""


class QuantizerRangeError(SparsePpcError):
    """A value maps to a quantizer index outside the encodable range."""


class DecodeError(SparsePpcError):
    """An encoded packet could not be parsed back into indices."""

    def __init__(self, message, bit_offset=None):
        super().__init__(message)
        self.bit_offset = bit_offset
