"""Exception hierarchy shared by every consfield module."""


class ConsfieldError(Exception):
    """Base class for all errors raised by consfield."""


class ShapeError(ConsfieldError, ValueError):
    """Operand dimensions do not line up."""


class OracleError(ConsfieldError):
    """A finite-difference oracle hit a non-finite function value."""


class ContractError(ConsfieldError):
    """An operation was called outside its documented contract."""


class PreconditionError(ContractError):
    """A mathematical precondition does not hold within tolerance."""


class UndefinedMetricError(ConsfieldError, ValueError):
    """A metric is undefined for the given input (e.g. zero matrix)."""


class DivergenceError(ConsfieldError, FloatingPointError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class FormatError(ConsfieldError, ValueError):
    """A binary file does not follow the expected layout."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(ConsfieldError, ValueError):
    """An experiment configuration is missing or malformed."""
