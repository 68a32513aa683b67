"""Exception hierarchy.

Everything a caller can trigger with bad parameters derives from
:class:`DomainError`, which the CLI maps to exit code 2.
"""


class DomainError(ValueError):
    """Input violates a mathematical precondition."""


class InfeasibleBatchCountError(DomainError):
    """The batch count does not divide the task count."""


class InfiniteMomentError(DomainError):
    """A requested moment does not exist for the given parameters."""


class UnsupportedClosedFormError(DomainError):
    """No closed form exists; the caller has to simulate instead."""


class InvalidPlanError(DomainError):
    """A batching plan is malformed or cannot complete a job."""


class NoRootError(DomainError):
    """Bisection bracket does not contain a sign change."""


class TraceFormatError(DomainError):
    """Trace file is missing columns or holds unparsable values."""
