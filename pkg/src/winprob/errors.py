"""Exception types shared across the package."""


class RankingError(ValueError):
    """Malformed ranking data (ties, unknown names, ragged rows, ...)."""

    def __init__(self, message: str, row: int | None = None, line: int | None = None):
        self.row = row
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        elif row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class InfeasibleError(ValueError):
    """A configuration lies outside the feasible set of an estimator or bound."""


class MethodError(RuntimeError):
    """A named estimation method failed to fit."""

    def __init__(self, method: str, cause: Exception):
        self.method = method
        self.cause = cause
        super().__init__(f"method {method!r} failed: {cause}")
