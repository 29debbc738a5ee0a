"""Dense real matrices and the reduced SVD.

All factorizations in the package go through :func:`svd_reduced`, which
wraps one LAPACK kernel (``numpy.linalg.svd``) so there is a single
floating-point authority.  Factors carry a deterministic sign convention:
in every left singular vector the first entry whose magnitude exceeds
``SIGN_TOL`` times the column's max-norm is made strictly positive, with
the paired right vector flipped jointly so the product is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    EmptyMatrixError,
    NegativeSigmaError,
    NonFiniteError,
    ShapeMismatchError,
    ValidationError,
)

# Relative threshold picking the sign pivot in a column; bitwise zero tests
# are unstable under roundoff.
SIGN_TOL = 1e-12

# sigma[j] <= RANK_TOL * sigma[0] counts as numerically zero.
RANK_TOL = 1e-12

# Max-norm budget for ||u^T u - I|| accepted at construction.
ORTHO_TOL = 1e-12


class DenseMatrix:
    """Immutable column-major matrix of float64 values.

    Construction validates that the payload is 2-D, nonempty and fully
    finite.  The backing array is Fortran-ordered and write-protected, so
    instances are safe to share across threads.
    """

    __slots__ = ("_a",)

    def __init__(self, values):
        a = np.array(values, dtype=np.float64, order="F", copy=True)
        if a.ndim != 2:
            raise ShapeMismatchError(f"expected a 2-D array, got ndim={a.ndim}")
        if a.shape[0] == 0 or a.shape[1] == 0:
            raise EmptyMatrixError(f"matrix must be nonempty, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise NonFiniteError("matrix entries must be finite")
        a.setflags(write=False)
        self._a = a

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the underlying float64 array."""
        return self._a

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    def tobytes(self) -> bytes:
        """Column-major little-endian payload, 8 bytes per entry."""
        return self._a.tobytes(order="F")

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self._a))

    def __repr__(self):
        return f"DenseMatrix(rows={self.rows}, cols={self.cols})"


def normalize_column_signs(u: np.ndarray, v: np.ndarray | None = None,
                           tol: float = SIGN_TOL):
    """Flip column signs so each column's first significant entry is positive.

    The pivot of a column is the first entry with magnitude strictly above
    ``tol`` times the column's max-norm; all-zero columns are left alone.
    When ``v`` is given its columns are flipped jointly with ``u``'s so
    that ``u @ diag(s) @ v.T`` is preserved.  Idempotent.  Returns copies.
    """
    u = np.array(u, dtype=np.float64)
    v = None if v is None else np.array(v, dtype=np.float64)
    if v is not None and v.shape[1] != u.shape[1]:
        raise ShapeMismatchError("u and v must have the same number of columns")
    for j in range(u.shape[1]):
        col = u[:, j]
        peak = np.abs(col).max()
        if peak == 0.0:
            continue
        pivot = int(np.argmax(np.abs(col) > tol * peak))
        if col[pivot] < 0.0:
            u[:, j] = -col
            if v is not None:
                v[:, j] = -v[:, j]
    return (u, v) if v is not None else (u, None)


@dataclass(frozen=True)
class SVDFactors:
    """Reduced SVD factors ``u * diag(sigma) * v.T`` with descending sigma.

    ``v`` may be absent when only singular values and left vectors are
    carried.  ``rank_hint`` counts the singular values above the numerical
    rank threshold; trailing columns beyond it are kept as returned by the
    kernel (the null space admits an arbitrary orthonormal completion).
    """

    u: DenseMatrix
    sigma: np.ndarray
    v: DenseMatrix | None
    rank_hint: int

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=np.float64, copy=True)
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        if sigma.ndim != 1 or len(sigma) != self.u.cols:
            raise ShapeMismatchError("sigma length must equal the column count of u")
        if len(sigma) and sigma[-1] < 0.0:
            raise NegativeSigmaError("singular values must be non-negative")
        if np.any(np.diff(sigma) > 0.0):
            raise ValidationError("singular values must be non-increasing")
        _check_orthonormal(self.u.array, "u")
        if self.v is not None:
            if self.v.cols != self.u.cols:
                raise ShapeMismatchError("u and v must have the same number of columns")
            _check_orthonormal(self.v.array, "v")
        if not 0 <= self.rank_hint <= len(sigma):
            raise ValidationError(f"rank_hint {self.rank_hint} out of range")

    @property
    def rank(self) -> int:
        """Number of retained columns (including numerically zero ones)."""
        return len(self.sigma)


def _check_orthonormal(a: np.ndarray, name: str):
    gram = a.T @ a
    err = np.abs(gram - np.eye(a.shape[1])).max()
    if err > ORTHO_TOL:
        raise ValidationError(f"columns of {name} are not orthonormal (max error {err:.3e})")


def _numerical_rank(sigma: np.ndarray) -> int:
    if len(sigma) == 0 or sigma[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sigma > RANK_TOL * sigma[0]))


def svd_reduced(a: DenseMatrix, max_rank: int | None = None) -> SVDFactors:
    """Reduced SVD of ``a`` with sign-normalized factors.

    Parameters
    ----------
    a : DenseMatrix
        Matrix to factorize.
    max_rank : int, optional
        Keep at most this many leading singular triples.  Must be in
        ``[1, min(rows, cols)]`` when given.

    Returns
    -------
    SVDFactors
        Factors with ``min(rows, cols, max_rank)`` columns, including right
        singular vectors.

    Raises
    ------
    ConvergenceError
        If the LAPACK iteration fails; never silently truncated.
    """
    if not isinstance(a, DenseMatrix):
        a = DenseMatrix(a)
    k = min(a.rows, a.cols)
    if max_rank is not None:
        if not 1 <= max_rank <= k:
            raise ValidationError(f"max_rank must be in [1, {k}], got {max_rank}")
        k = max_rank
    try:
        u, s, vt = np.linalg.svd(a.array, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc
    u, v = normalize_column_signs(u[:, :k], vt[:k, :].T)
    sigma = s[:k].copy()
    return SVDFactors(u=DenseMatrix(u), sigma=sigma, v=DenseMatrix(v),
                      rank_hint=_numerical_rank(sigma))


def truncate(f: SVDFactors, d: int) -> SVDFactors:
    """Keep the first ``min(d, rank)`` singular triples of ``f``.

    Pure column selection; nothing is recomputed, and ``d >= rank`` is a
    no-op returning ``f`` itself.
    """
    if d < 1:
        raise ValidationError(f"truncation rank must be >= 1, got {d}")
    if d >= f.rank:
        return f
    sigma = f.sigma[:d].copy()
    return SVDFactors(
        u=DenseMatrix(f.u.array[:, :d]),
        sigma=sigma,
        v=None if f.v is None else DenseMatrix(f.v.array[:, :d]),
        rank_hint=min(f.rank_hint, d),
    )


def frobenius_tail(sigma, d: int) -> float:
    """Frobenius norm of the part discarded by a rank-``d`` truncation.

    For a non-increasing singular value vector this is
    ``sqrt(sum(sigma[d:] ** 2))``; zero when ``d`` covers the whole vector.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0.0):
        raise NegativeSigmaError("singular values must be non-negative")
    if d < 0:
        raise ValidationError(f"d must be >= 0, got {d}")
    if d >= len(sigma):
        return 0.0
    return float(np.sqrt(np.sum(sigma[d:] ** 2)))


def scaled_left(f: SVDFactors) -> DenseMatrix:
    """Left singular vectors scaled by their singular values.

    Column ``j`` equals ``sigma[j] * u[:, j]``; the product carries all
    singular-value and left-vector information of the factored matrix.
    """
    return DenseMatrix(f.u.array * f.sigma)
