"""Exception types raised across the package."""


class HypKDEError(Exception):
    """Base class for all package errors."""


class InvalidPoint(HypKDEError, ValueError):
    pass


class NotInSL2(HypKDEError, ValueError):
    pass


class MeshTooSmall(HypKDEError, ValueError):
    pass


class GridMismatch(HypKDEError, ValueError):
    pass


class LengthMismatch(HypKDEError, ValueError):
    pass


class NegativeDensity(HypKDEError, ValueError):
    pass


class RejectionStall(HypKDEError, RuntimeError):
    pass


class RangeExceeded(HypKDEError, ValueError):
    pass


class EmptySample(HypKDEError, ValueError):
    pass


class IndexOutOfRange(HypKDEError, IndexError):
    pass


class PositivityViolation(HypKDEError, ValueError):
    """Perturbation amplitude would push the family below zero.

    ``reduction`` is the factor by which the amplitude must be multiplied
    to restore the positivity margin.
    """

    def __init__(self, message, reduction):
        super().__init__(message)
        self.reduction = reduction


class DegenerateFit(HypKDEError, ValueError):
    pass
