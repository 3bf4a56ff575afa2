"""
Exception hierarchy for ellipsum.

Every error raised on purpose by the library derives from EllipsumError.
Input problems are ValidationError (also a ValueError), runaway workloads
are BudgetError. The ``exit_code`` attribute is what the CLI returns.
"""

from __future__ import annotations


class EllipsumError(Exception):
    """Base class for all ellipsum errors."""

    exit_code: int = 1


class ValidationError(EllipsumError, ValueError):
    """Invalid input: bad matrix, token, radius, parameter or config."""

    exit_code = 2


class BudgetError(EllipsumError):
    """A job would exceed its configured work budget."""

    exit_code = 3


# Quadratic forms


class NotSymmetric(ValidationError):
    """Matrix is not square-symmetric."""


class NotPositiveDefinite(ValidationError):
    """Some leading principal minor is <= 0."""


class DimensionZero(ValidationError):
    """Empty matrix."""


class DimensionMismatch(ValidationError):
    """Vector length does not match the form dimension."""


class DimensionTooLarge(ValidationError):
    """Dimension above the enumeration cap."""


class MatrixSyntaxError(ValidationError):
    """Matrix spec string does not follow the grammar."""


# Shift vectors


class BadToken(ValidationError):
    """Unknown token in a shift vector spec."""


class SearchSpaceTooLarge(ValidationError):
    """Integer relation search space is too large."""


# Lattice and counting


class BudgetExceeded(BudgetError):
    """Estimated lattice point count above the cap."""


class RadiusOutOfRange(ValidationError):
    """Query radius beyond the enumerated radius."""


class NonpositiveEps(ValidationError):
    """Shell width must be positive."""


class CheckpointOutOfRange(ValidationError):
    """Checkpoint beyond the series length."""


class TruncationExceedsSeries(ValidationError):
    """Spectral truncation needs more terms than the series holds."""


class SeriesMismatch(ValidationError):
    """Series was built for a different matrix than the one supplied."""


class SupportExceedsRadii(ValidationError):
    """Kernel support reaches beyond the enumerated radii."""


# Theta sums


class PhiUnsupportedForProfile(ValidationError):
    """Nonzero rotation angle with a profile lacking a closed form."""


class TruncationTooSmall(ValidationError):
    """Theta sum truncation parameter below the minimum."""


class IndexOutOfRange(ValidationError):
    """Generator index outside 1..n."""


# CLI


class ConfigError(ValidationError):
    """Invalid run configuration."""


class PropertyOneRequired(ValidationError):
    """Non-diagonal form used without --assume-property-1."""


class CorruptCache(EllipsumError):
    """Cache file failed magic, version or digest verification."""
