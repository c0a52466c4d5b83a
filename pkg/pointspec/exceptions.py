from typing import Optional


class PointSpecError(Exception):
    """Base class for every error raised by pointspec"""


class DomainError(PointSpecError, ValueError):
    """A physical parameter is outside its admissible range"""


class UnsupportedKindError(PointSpecError):
    """The operation is not defined for this kind of extension"""


class DegenerateMatrixError(PointSpecError):
    """A coupling matrix is singular where an inverse or ratio is needed"""


class NumericalError(PointSpecError):
    """A numerical procedure failed (bracketing, linear solve, period estimate)"""

    def __init__(self, message: str, step: Optional[int] = None):
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step


class ConstructionError(PointSpecError):
    """A discretized operator failed its Hermiticity gate"""
