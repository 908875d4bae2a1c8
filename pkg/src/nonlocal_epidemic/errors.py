"""Exception hierarchy shared by all modules."""


class NonlocalEpidemicError(Exception):
    """Base class for every domain error raised by the package."""


class InvalidParam(NonlocalEpidemicError, ValueError):
    pass


class NegativeArgument(NonlocalEpidemicError, ValueError):
    pass


class StepTooLarge(NonlocalEpidemicError, ValueError):
    pass


class EmptyDomain(NonlocalEpidemicError, ValueError):
    pass


class ShapeMismatch(NonlocalEpidemicError, ValueError):
    pass


class NoConvergence(NonlocalEpidemicError, RuntimeError):
    pass


class DegenerateDomain(NonlocalEpidemicError, ValueError):
    pass


class SingularResolvent(NonlocalEpidemicError, ValueError):
    pass


class SubcriticalModel(NonlocalEpidemicError, ValueError):
    """R0 <= 1: the principal eigenvalue is negative for every half-width."""


class NoBracket(NonlocalEpidemicError, RuntimeError):
    pass


class SandwichViolation(NonlocalEpidemicError, RuntimeError):
    pass


class FrontOvershoot(NonlocalEpidemicError, RuntimeError):
    """A front moved by a full lattice cell or more in one step."""


class MissingLstar(NonlocalEpidemicError, ValueError):
    pass


class InconsistentMonotonicity(NonlocalEpidemicError, RuntimeError):
    pass


class DegenerateRegime(NonlocalEpidemicError, ValueError):
    pass


class NoContraction(NonlocalEpidemicError, RuntimeError):
    pass


class GridMismatch(NonlocalEpidemicError, ValueError):
    pass


class ConfigError(NonlocalEpidemicError):
    """Raised for unreadable or invalid run configuration files."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors or [message])


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass
