"""Exception types shared across the package."""


class MaxfracError(Exception):
    """Base class for all errors raised by :mod:`maxfrac`."""


class DimensionError(MaxfracError, ValueError):
    """Operands live in spaces of different dimension."""


class EmptyInputError(MaxfracError, ValueError):
    """An operation received an empty cloud, grid or domain."""


class CapExceededError(MaxfracError, RuntimeError):
    """A word enumeration or atom count would exceed its hard cap."""


class MassMismatchError(MaxfracError, ValueError):
    """Two measures that must have equal mass do not."""


class ConvergenceError(MaxfracError, RuntimeError):
    """An iteration hit ``max_iter`` before reaching its tolerance.

    The partial result (last iterate and the full step trace) is kept on
    ``self.result`` so callers can still inspect or report it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
