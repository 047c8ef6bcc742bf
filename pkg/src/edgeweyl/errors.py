"""Exception hierarchy.

ValidationError maps to CLI exit code 3, NumericalError to exit code 4.
"""


class EdgeWeylError(Exception):
    pass


class ValidationError(EdgeWeylError, ValueError):
    pass


class DomainError(ValidationError):
    pass


class MonotonicityViolation(ValidationError):
    def __init__(self, lambda_at_failure: float, message: str = ""):
        self.lambda_at_failure = float(lambda_at_failure)
        super().__init__(message or f"encoding not strictly decreasing near lambda={lambda_at_failure:.17g}")


class EnumerationCapExceeded(ValidationError):
    def __init__(self, cap: int, count: int):
        self.cap = cap
        self.count = count
        super().__init__(f"lattice enumeration needs {count} points, cap is {cap}")


class NumericalError(EdgeWeylError, ArithmeticError):
    pass


class BracketFailure(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class DegenerateResidual(NumericalError):
    pass


class UncontrolledTail(NumericalError):
    pass


class BreakdownError(NumericalError):
    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"recurrence breakdown at step {index}")


class PositivityError(NumericalError):
    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"qd positivity lost at index {index}")
