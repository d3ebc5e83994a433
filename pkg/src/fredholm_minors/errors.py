"""Exception types raised by the library."""


class FredholmError(Exception):
    """Base class for all library errors."""


class ValidationError(FredholmError, ValueError):
    """Bad input: malformed grid, kernel, point set or problem file."""


class NumericalFailure(FredholmError):
    """A numerical check or convergence criterion was not met."""


class SeriesNotConverged(NumericalFailure):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SingularAtLambda(NumericalFailure):
    """D(lambda) is numerically zero; the resolvent does not exist."""

    def __init__(self, lam, det):
        super().__init__(
            f"Fredholm determinant vanishes at lambda={lam!r} (D={det:.3e}); "
            "use the eigen-case routines"
        )
        self.lam = lam
        self.det = det


class OracleTooLarge(FredholmError):
    def __init__(self, m, limit):
        super().__init__(f"Grassmann oracle limited to m <= {limit}, got m={m}")
        self.m = m
        self.limit = limit


class NotAnEigenvalue(NumericalFailure):
    pass


class BasePointSearchFailed(NumericalFailure):
    pass


class SolvabilityViolated(NumericalFailure):
    def __init__(self, defects):
        super().__init__(
            "right-hand side is not orthogonal to the transposed characteristic "
            f"functions (defects={list(defects)})"
        )
        self.defects = defects
