"""Exception types shared across the toolkit."""


class NlsfError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(NlsfError):
    """Operands have incompatible shapes."""


class CoverageError(NlsfError):
    """A partial eigenbasis does not cover the requested spectral band."""


class ZeroBlock(NlsfError):
    """A spectral block has zero norm where a nonzero norm is required."""


class MaxIterExceeded(NlsfError):
    """Iterative eigensolver did not reach the residual tolerance.

    Carries the partial result on the ``basis`` attribute together with the
    worst residual seen, so callers can inspect or accept it.
    """

    def __init__(self, message, basis=None, worst_residual=None):
        super().__init__(message)
        self.basis = basis
        self.worst_residual = worst_residual


class ConfigError(NlsfError):
    """Invalid run or model configuration."""


class DataError(NlsfError):
    """Malformed dataset file or inconsistent in-memory data."""


class NonFiniteLoss(NlsfError):
    """Training loss became NaN or infinite."""
