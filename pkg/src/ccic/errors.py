"""Exception hierarchy shared by the kernel, the solver and the certificate checker."""


class KernelError(Exception):
    """Base class for every error raised while checking terms."""

    def __init__(self, message, span=None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self):
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message


class ClassMismatch(KernelError):
    pass


class FuelExhausted(KernelError):
    pass


class UnboundVariable(KernelError):
    pass


class TypeMismatch(KernelError):
    def __init__(self, message, expected=None, actual=None, span=None):
        super().__init__(message, span)
        self.expected = expected
        self.actual = actual


class IllFormedElim(KernelError):
    pass


class GuardFailed(KernelError):
    def __init__(self, message, lhs=None, rhs=None, span=None):
        super().__init__(message, span)
        self.lhs = lhs
        self.rhs = rhs


class StrongElimForbidden(KernelError):
    pass


class SortMismatch(KernelError):
    pass


class ParseError(KernelError):
    pass


class InvalidStep(KernelError):
    def __init__(self, index, reason):
        super().__init__(f"step {index}: {reason}")
        self.index = index
        self.reason = reason


class GoalMismatch(KernelError):
    pass
