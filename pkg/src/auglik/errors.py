"""Exception hierarchy shared by every module."""


class AuglikError(Exception):
    """Base class for all package errors."""


class ContractError(AuglikError, ValueError):
    """An argument violates an operation's precondition (shape, range, count)."""


class NumericInputError(AuglikError, ValueError):
    """Non-finite values where finite ones are required."""


class ModeError(AuglikError, ValueError):
    """Operation called on an orbit of the wrong mode (finite vs stochastic)."""


class ConfigurationError(AuglikError, ValueError):
    """Bad experiment configuration, unknown generator, or budget mismatch."""


class IngestionError(AuglikError, ValueError):
    """A data or metrics file failed to parse.

    ``row`` is the 1-based line/row number of the offending entry, when known.
    """

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class DivergenceError(AuglikError, RuntimeError):
    """A sampler or optimizer produced a non-finite state.

    ``step`` is the global step index at which divergence was detected and
    ``partial`` holds whatever result had been accumulated up to that point.
    """

    def __init__(self, message, step, partial=None):
        super().__init__(f"{message} (step {step})")
        self.step = step
        self.partial = partial
