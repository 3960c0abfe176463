"""Exception types raised across the package."""


class SubspecError(Exception):
    """Base class for all errors raised by :mod:`subspec`."""


class GroupDefinitionError(SubspecError, ValueError):
    pass


class JacobiViolation(GroupDefinitionError):
    def __init__(self, triple, value):
        self.triple = triple
        self.value = value
        i, j, k = (t + 1 for t in triple)
        super().__init__(
            f"Jacobi identity fails for (E{i}, E{j}, E{k}): cyclic sum = {value}"
        )


class NotNilpotent(GroupDefinitionError):
    pass


class NotBracketGenerating(GroupDefinitionError):
    def __init__(self, horizontal, span_dim, dim):
        self.horizontal = tuple(horizontal)
        self.span_dim = span_dim
        self.dim = dim
        names = ", ".join(f"E{i + 1}" for i in horizontal)
        super().__init__(
            f"horizontal subspace span{{{names}}} generates a subalgebra of "
            f"dimension {span_dim} < {dim}"
        )


class NotStratified(SubspecError, ValueError):
    pass


class ExpressionError(SubspecError, ValueError):
    def __init__(self, message, text="", pos=None):
        self.text = text
        self.pos = pos
        if pos is not None:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            self.line, self.column = line, col
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class NotPolynomial(ExpressionError):
    pass


class DegreeSearchOverflow(SubspecError, RuntimeError):
    pass


class IdentityFailed(SubspecError, AssertionError):
    pass


class EmptyDomain(SubspecError, ValueError):
    pass


class PotentialNotEvaluable(SubspecError, ValueError):
    pass


class NoConvergence(SubspecError, RuntimeError):
    pass


class NotSymmetric(SubspecError, ValueError):
    pass


class WeightNonpositive(SubspecError, ValueError):
    pass


class NotDifferentiable(SubspecError, ValueError):
    pass


class LowerBoundViolated(SubspecError, ValueError):
    pass
