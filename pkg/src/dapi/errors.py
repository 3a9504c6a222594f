"""Exception hierarchy shared across the package."""


class DapiError(Exception):
    """Base class for all package errors."""


class DomainViolation(DapiError, ValueError):
    """An objective was evaluated outside its open domain."""


class ConvergenceFailure(DapiError, RuntimeError):
    pass


class NullspaceNotOneDimensional(DapiError, ValueError):
    """The Laplacian has a repeated zero eigenvalue (no globally reachable node)."""


class NotHurwitz(DapiError, ValueError):
    pass


class SingularNetwork(DapiError, ValueError):
    pass


class Infeasible(DapiError, ValueError):
    """The dispatch problem is not strictly feasible for the requested load."""


class GainConditionViolated(DapiError, ValueError):
    pass


class NonFiniteState(DapiError, FloatingPointError):
    """Integration produced a NaN or infinite state component."""


class ParseError(DapiError, ValueError):
    pass


class ValidationError(DapiError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
