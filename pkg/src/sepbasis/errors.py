"""Exception hierarchy shared by every module."""


class SepBasisError(Exception):
    """Base class for all library errors."""


class SpanError(SepBasisError, ValueError):
    """A polynomial does not lie in the span of a basis family."""


class DegreeOverflowError(SepBasisError, ValueError):
    def __init__(self, degree: int, limit: int, where: str = ""):
        self.degree = degree
        self.limit = limit
        msg = f"degree overflow: intermediate degree {degree} exceeds frame limit {limit}"
        if where:
            msg += f" ({where})"
        super().__init__(msg)


class SingularMatrixError(SepBasisError, ValueError):
    def __init__(self, message: str, trace=()):
        self.trace = tuple(trace)
        if self.trace:
            steps = ", ".join(f"step {k}: pivot {p}" for k, p in self.trace)
            message = f"{message} [pivot trace: {steps}]"
        super().__init__(message)


class FrameMismatchError(SepBasisError, ValueError):
    pass


class CovariantUndefinedError(SepBasisError, ValueError):
    pass


class NotTriangularError(SepBasisError, ValueError):
    pass


class NotDifferentialFormError(SepBasisError, ValueError):
    pass


class ConsistencyError(SepBasisError, AssertionError):
    """An internal cross-check between independent routes failed."""
