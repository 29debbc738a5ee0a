"""Exception types raised across the package.

Everything inherits from :class:`HsvdError` so callers can catch the
package's failures with a single except clause.  Validation problems
(bad shapes, bad parameters) additionally inherit from ``ValueError``.
"""


class HsvdError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(HsvdError, ValueError):
    """Base class for input-validation failures."""


# --- matrix construction / factorization -----------------------------------

class NonFiniteError(ValidationError):
    """A matrix payload contains NaN or infinity."""


class EmptyMatrixError(ValidationError):
    """A matrix with zero rows or zero columns was supplied."""


class ConvergenceError(HsvdError):
    """The underlying SVD iteration failed to converge."""


class NegativeSigmaError(ValidationError):
    """A singular-value vector contains a negative entry."""


# --- block store ------------------------------------------------------------

class BadWidthsError(ValidationError):
    """Partition widths are nonpositive or do not sum to the column count."""


class BadMagicError(HsvdError):
    """A block file does not start with the expected magic bytes."""


class BadVersionError(HsvdError):
    """A block file carries an unsupported format version."""


class TruncatedFileError(HsvdError):
    """A block file is shorter (or longer) than its header implies."""


class NonFinitePayloadError(HsvdError):
    """A block file payload contains NaN or infinity."""


class ManifestError(ValidationError):
    """A block manifest is malformed or inconsistent with its block files."""


# --- merge engine -----------------------------------------------------------

class RowMismatchError(ValidationError):
    """Partial results being merged do not share a row count."""


class PlanMismatchError(ValidationError):
    """A merge plan does not describe the block set it was applied to."""


class SingularValueUnderflowError(HsvdError):
    """A singular value needed for right-vector recovery is numerically zero."""


# --- cost model -------------------------------------------------------------

class ZeroDenominatorError(ValidationError):
    """All cost-model rates are zero, so no speedup ratio exists."""


class NonIntegerLevelsError(ValidationError):
    """A core count is not an exact power of the group size in strict mode."""


# --- synthetic generator ----------------------------------------------------

class SpectrumTooLongError(ValidationError):
    """A requested spectrum has more entries than the matrix has rows."""


class ProfileViolationError(ValidationError):
    """A spectrum head profile is not non-increasing."""


# --- metrics ----------------------------------------------------------------

class ZeroReferenceError(ValidationError):
    """A reference singular value required for a relative error is zero."""


class ShapeMismatchError(ValidationError):
    """Two operands have incompatible shapes."""
