"""Exception hierarchy shared by every engine and the CLI."""


class NaptError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class DomainError(NaptError, ValueError):
    """An argument lies outside the domain of an operation."""


class PreconditionError(NaptError, ValueError):
    """A documented precondition failed.

    ``violations`` lists the offending points or items when they are known.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class InvariantError(NaptError, ValueError):
    """Input data breaks a structural invariant (e.g. an asymmetric table)."""


class InfeasibleError(NaptError):
    """An iterative solver could not reach the prescribed target."""

    exit_code = 4

    def __init__(self, message, atom=None):
        super().__init__(message)
        self.atom = atom


class ValidationRefusal(NaptError):
    """A computation was refused because the data failed validation."""

    exit_code = 5


class ParseError(NaptError):
    """A problem document could not be parsed."""

    exit_code = 2
