"""Custom exception classes for shtarkov-lab."""


class ShtarkovLabError(Exception):
    """Base exception for all shtarkov-lab errors."""
    pass


class ValidationError(ShtarkovLabError):
    """Invalid alphabet symbol, sequence length, distribution or class document."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class ConfigurationError(ShtarkovLabError):
    """Configuration error."""
    pass


class EnumerationBudgetExceeded(ShtarkovLabError):
    """An exhaustive enumeration would exceed its configured budget."""

    def __init__(self, what: str, required: int | float, budget: int):
        self.what = what
        self.required = required
        self.budget = budget
        super().__init__(
            f"Enumerating {what} needs {required:.6g} items, over the budget of {budget}"
        )


class DegenerateClassError(ShtarkovLabError):
    """The class assigns zero likelihood to every sequence (Shtarkov sum 0)."""
    pass


class UnsupportedClassError(ShtarkovLabError):
    """Operation is not defined for this kind of hypothesis class."""
    pass


class SubProbabilityError(ValidationError):
    """A sub-probability map has total mass above 1."""
    pass


class RegretAccountingError(ShtarkovLabError):
    """Running regret of a played game disagrees with its end-of-game recomputation."""
    pass
