"""Exception types shared across the toolkit."""


class ContractViolationError(ValueError):
    """An input violates a documented precondition (shape, symmetry, range)."""


class NumericalFailureError(RuntimeError):
    """A numerical routine failed to converge or hit an ill-conditioned system."""


class InfeasibleError(RuntimeError):
    """The requested problem has no solution under the stated constraints."""


class DecompositionError(RuntimeError):
    """A matrix decomposition does not exist or could not be certified."""
