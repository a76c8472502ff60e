# src/errors.py


class BwLabError(Exception):
    """Base class for every error raised by the batch-whitening library."""


class ValidationError(BwLabError, ValueError):
    """Bad shapes, out-of-range parameters or invalid flag combinations."""


class NumericError(BwLabError, ArithmeticError):
    """A numerical routine failed; `residual` carries the last measured error when known."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NonFiniteError(ValidationError, NumericError):
    """An input matrix holds NaN or Inf; a usage error for callers, a divergence for training."""


class NotPositiveDefiniteError(NumericError):
    def __init__(self, pivot, value=None):
        super().__init__(f"matrix is not positive definite (pivot {pivot})", residual=value)
        self.pivot = pivot


class SingularMatrixError(NumericError):
    def __init__(self, index, value=None):
        super().__init__(f"triangular matrix is singular (diagonal entry {index} = {value!r})", residual=value)
        self.index = index


class DegenerateEigenvaluesError(NumericError):
    """Two eigenvalues are too close for the eigenvector backward pass."""

    def __init__(self, pair, gap, floor):
        i, j = pair
        super().__init__(
            f"eigenvalues {i} and {j} are degenerate (gap {gap:.3e} <= floor {floor:.3e})",
            residual=gap,
        )
        self.pair = pair
        self.gap = gap
        self.floor = floor


class StateError(BwLabError, RuntimeError):
    """Layer used in the wrong mode or with a foreign cache."""


class ParseError(BwLabError, ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class MissingDataError(BwLabError, FileNotFoundError):
    """A required dataset file does not exist."""
