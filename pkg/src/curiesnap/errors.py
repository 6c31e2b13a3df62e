"""Exception hierarchy shared by every module."""


class CurieSnapError(Exception):
    """Base class for all package errors."""


class InvalidInputError(CurieSnapError, ValueError):
    pass


class OutOfDomainError(CurieSnapError, ValueError):
    pass


class SingularityError(CurieSnapError, ArithmeticError):
    pass


class NumericalFailure(CurieSnapError, ArithmeticError):
    """Raised when a solver or integrator produces an unusable result."""

    def __init__(self, message, *, time=None, node=None, condition=None):
        super().__init__(message)
        self.time = time
        self.node = node
        self.condition = condition


class ConfigError(CurieSnapError, ValueError):
    """Invalid run configuration; ``path`` is a JSON-pointer to the offending field."""

    def __init__(self, message, path="", line=None):
        where = path + (f" (line {line})" if line is not None else "")
        super().__init__(f"{where}: {message}" if where else message)
        self.message = message
        self.path = path
        self.line = line
