"""Exception hierarchy.  Each carries the CLI exit code it maps to."""


class HermposError(Exception):
    exit_code = 4


class ParseError(HermposError, ValueError):
    """Malformed or non-Hermitian polynomial input."""

    exit_code = 1

    def __init__(self, message, term_index=None):
        self.term_index = term_index
        if term_index is not None:
            message = f"term {term_index}: {message}"
        super().__init__(message)


class DimensionMismatch(HermposError, ValueError):
    exit_code = 1


class HermitianSymmetryError(ParseError):
    pass


class UnsupportedPrecision(HermposError, TypeError):
    """An exact-arithmetic routine received floating-point data."""

    exit_code = 4


class NotPositiveDefinite(HermposError):
    exit_code = 2

    def __init__(self, min_eigenvalue, m=None, message=None):
        self.min_eigenvalue = float(min_eigenvalue)
        self.m = m
        if message is None:
            message = f"coefficient matrix is not positive definite (min eigenvalue {self.min_eigenvalue:.6g})"
            if m is not None:
                message += f" at m={m}"
        super().__init__(message)


class ResidualTooLarge(HermposError):
    exit_code = 4

    def __init__(self, residual, tol):
        self.residual = float(residual)
        self.tol = float(tol)
        super().__init__(f"certificate residual {self.residual:.3e} exceeds {self.tol:.3e}")


class DimensionGuardError(HermposError):
    exit_code = 4


class NumericError(HermposError, ArithmeticError):
    exit_code = 4


class PositivityError(HermposError, ValueError):
    """p(x, x̄) <= 0 at a sample point where it must be positive."""

    exit_code = 4

    def __init__(self, point, value):
        self.point = point
        self.value = float(value)
        super().__init__(f"nonpositive denominator {self.value:.6g} at sample point {list(point)}")
