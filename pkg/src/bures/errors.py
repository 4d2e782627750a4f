"""Exception hierarchy shared by all modules."""


class BuresError(Exception):
    """Base class for errors raised by this package."""


class StructuralError(BuresError, ValueError):
    """Shapes or algebras do not match."""


class NotHermitianError(BuresError, ValueError):
    pass


class NotPositiveError(BuresError, ValueError):
    """An element expected to be positive has an eigenvalue below -tol_psd."""


class InvalidParameterError(BuresError, ValueError):
    pass


class NumericalError(BuresError, ArithmeticError):
    """A numerical routine could not produce a trustworthy answer."""


class RefusedError(BuresError):
    """An operation's preconditions are not met, e.g. Fix(E) is not an algebra."""


class TheoremViolation(BuresError, AssertionError):
    """A computed quantity contradicts a proven property of channels."""
