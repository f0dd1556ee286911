"""Exception hierarchy shared across the package.

Every failure mode the CLI maps to an exit code has its own class here, so
callers can catch by meaning instead of parsing messages.
"""


class ChernLabError(Exception):
    """Base class for all package errors."""


class DomainError(ChernLabError):
    """Input is outside the mathematical domain of an operation."""


class PreconditionError(ChernLabError):
    """A declared structural precondition fails (relation, d^2 = 0, ...)."""


class AdmissibilityError(DomainError):
    """Requested (genus, degree) violates |d| < g."""


class InstabilityError(ChernLabError):
    """A numerical guard tripped (rounding residue, lift defect, ...)."""


class SubdivisionError(InstabilityError):
    """Loop sampling could not be refined enough for a reliable winding."""


class ConventionError(DomainError):
    """Double-complex data fits neither the commuting nor the
    anticommuting sign convention."""


class InternalConsistencyError(ChernLabError):
    """An invariant the code itself must maintain was violated; a bug."""


class EscapeError(ChernLabError):
    """A geodesic left its chart before the requested time."""


class QuadratureError(ChernLabError):
    """Too many quadrature nodes had to be skipped."""
