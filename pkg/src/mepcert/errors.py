"""Exception types shared across the package.

Every rigorous routine is expected to fail loudly rather than silently
degrade: an interval operation that cannot produce a finite enclosure, a
certification attempt whose inequalities cannot be verified, or an
iterative solver that stalls all raise one of the exceptions below.
"""


class MepcertError(Exception):
    """Base class for all package errors."""


class DomainError(MepcertError):
    """Operation applied outside its mathematical domain (e.g. division
    by an interval containing zero, or malformed interval endpoints)."""


class RangeError(MepcertError):
    """A computation produced a NaN or infinite endpoint; the enclosure
    is poisoned and cannot be trusted."""


class ShapeError(MepcertError):
    """Dimension mismatch between interval arrays."""


class ConvergenceError(MepcertError):
    """An iterative (non-rigorous) solver failed to converge."""


class NumericalError(MepcertError):
    """A non-rigorous numerical step broke down (singular matrix, ...)."""


class ValidationError(MepcertError):
    """A rigorous validation step failed.  The message records which
    inequality or containment could not be verified."""
