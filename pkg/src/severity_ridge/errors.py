"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class SingularMatrixError(ValidationError):
    """A positive-definite factorization failed.

    Attributes
    ----------
    pivot : int
        1-based order of the leading minor that was not positive definite.
    """

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"posterior precision is not positive definite (pivot {pivot})")


class DegenerateTargetError(ValidationError):
    """Target vector has zero variance, so R² is undefined."""


class ParseError(ValidationError):
    """Malformed input file; carries the location of the offending cell."""

    def __init__(self, path, line: int, column: str | None, message: str):
        self.path = str(path)
        self.line = line
        self.column = column
        where = f"{self.path}:{line}" + (f" (column {column!r})" if column else "")
        super().__init__(f"{where}: {message}")
