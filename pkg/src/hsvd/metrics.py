"""Accuracy metrics and error-bound evaluation.

Two headline numbers: the max relative singular-value error and the max
per-vector 2-norm error of the left singular vectors after per-column
sign alignment.  Vector comparisons are only decisive when the reference
spectrum is simple around the compared indices; with repeated or
clustered values the principal angles between the spanned subspaces are
the authoritative metric, so both are always reported.

Bound checks realize the existential alignment in the merge guarantees
by optimizing over the full orthogonal group (orthogonal Procrustes), a
relaxation that can only shrink the residual, so a reported violation is
a real one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from .errors import ShapeMismatchError, ValidationError, ZeroReferenceError
from .matrix import (
    DenseMatrix,
    SVDFactors,
    frobenius_tail,
    scaled_left,
    svd_reduced,
    truncate,
)
from .merge import PartialSVD


@dataclass(frozen=True)
class ComparisonReport:
    """Flat summary of one hierarchical-versus-reference comparison."""

    e_sigma: float
    e_vec: float
    principal_angles: np.ndarray
    procrustes_residual: float
    bound_value: float
    bound_satisfied: bool

    @property
    def max_angle(self) -> float:
        return float(self.principal_angles.max()) if len(self.principal_angles) else 0.0


CSV_HEADER = ("e_sigma,e_vec,max_principal_angle,procrustes_residual,"
              "bound_value,bound_satisfied,principal_angles")


def report_csv_row(r: ComparisonReport) -> str:
    """One delimited row matching :data:`CSV_HEADER`.

    The angle vector is packed into the last field with ``;`` separators
    so the row stays flat for any rank.
    """
    angles = ";".join(f"{a:.17g}" for a in r.principal_angles)
    return (f"{r.e_sigma:.17g},{r.e_vec:.17g},{r.max_angle:.17g},"
            f"{r.procrustes_residual:.17g},{r.bound_value:.17g},"
            f"{str(r.bound_satisfied).lower()},{angles}")


def max_sigma_error(test, ref, k: int) -> float:
    """Max relative error of the first ``k`` singular values."""
    test = np.asarray(test, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if len(test) < k or len(ref) < k:
        raise ShapeMismatchError(
            f"need {k} values, got {len(test)} and {len(ref)}")
    if np.any(ref[:k] == 0.0):
        raise ZeroReferenceError("reference singular values must be nonzero")
    return float(np.max(np.abs(test[:k] - ref[:k]) / np.abs(ref[:k])))


def max_vector_error(test_u, ref_u, k: int):
    """Per-vector error and principal angles of the first ``k`` columns.

    Each test column is sign-flipped to minimize its distance to the
    reference column before the max 2-norm difference is taken, so the
    metric is invariant under independent sign flips of either basis.
    The principal angles between the two ``k``-dimensional column spaces
    are computed with the sine-based formulation, which stays accurate
    for angles far below sqrt(machine epsilon).
    """
    test_u = np.asarray(test_u, dtype=np.float64)
    ref_u = np.asarray(ref_u, dtype=np.float64)
    if test_u.ndim != 2 or ref_u.ndim != 2 or test_u.shape[0] != ref_u.shape[0]:
        raise ShapeMismatchError(
            f"incompatible shapes {test_u.shape} and {ref_u.shape}")
    if test_u.shape[1] < k or ref_u.shape[1] < k:
        raise ShapeMismatchError(
            f"need {k} columns, got {test_u.shape[1]} and {ref_u.shape[1]}")
    test_k, ref_k = test_u[:, :k], ref_u[:, :k]
    signs = np.where(np.sum(test_k * ref_k, axis=0) < 0.0, -1.0, 1.0)
    e_vec = float(np.max(np.linalg.norm(test_k * signs - ref_k, axis=0)))
    angles = np.sort(subspace_angles(ref_k, test_k))
    return e_vec, angles


def has_simple_gaps(sigma, k: int, rel: float = 1e-6) -> bool:
    """True when the first ``k`` values are separated by relative gaps > ``rel``.

    Per-vector comparisons are only well defined for simple singular
    values; callers should fall back to principal angles otherwise.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma[0] <= 0.0:
        return False
    upto = min(k, len(sigma) - 1)
    for i in range(upto):
        if sigma[i] <= 0.0 or (sigma[i] - sigma[i + 1]) / sigma[i] <= rel:
            return False
    return True


def merge_error_bound(levels: int, tail: float) -> float:
    """Worst-case aligned residual after ``levels`` merge levels.

    Grows geometrically with the level count and linearly in the
    truncation tail: ``((1 + sqrt(2)) ** (levels + 1) - 1) * tail``.
    """
    if levels < 1:
        raise ValidationError(f"levels must be >= 1, got {levels}")
    if tail < 0.0:
        raise ValidationError(f"tail must be >= 0, got {tail}")
    return ((1.0 + math.sqrt(2.0)) ** (levels + 1) - 1.0) * tail


def procrustes_align(x: np.ndarray, y: np.ndarray):
    """Orthogonal ``w`` minimizing ``||x - y @ w||_F`` and the minimum value."""
    if x.shape != y.shape:
        raise ShapeMismatchError(f"shapes differ: {x.shape} vs {y.shape}")
    uc, _, vct = np.linalg.svd(y.T @ x)
    w = uc @ vct
    return w, float(np.linalg.norm(x - y @ w))


def aligned_residual(test: PartialSVD | SVDFactors, ref_a: DenseMatrix, d: int,
                     ref_factors: SVDFactors | None = None) -> float:
    """Frobenius distance of a result to the best rank-``d`` part of ``ref_a``.

    The reference target is the first ``d`` columns of the reference's
    scaled left vectors; the test's scaled left vectors (zero-padded when
    they carry fewer than ``d`` columns) are aligned to it by orthogonal
    Procrustes before the distance is taken.  ``ref_factors`` may carry a
    precomputed factorization of ``ref_a``.
    """
    factors = test.factors if isinstance(test, PartialSVD) else test
    if ref_factors is None:
        ref_factors = svd_reduced(ref_a)
    if factors.u.rows != ref_a.rows:
        raise ShapeMismatchError("test and reference disagree on row count")
    if d < 1 or d > ref_factors.rank:
        raise ValidationError(f"d must be in [1, {ref_factors.rank}], got {d}")
    target = scaled_left(truncate(ref_factors, d)).array
    x = scaled_left(truncate(factors, d)).array
    if x.shape[1] < d:
        x = np.pad(x, ((0, 0), (0, d - x.shape[1])))
    _, resid = procrustes_align(x, target)
    return resid


def compare_partial(test: PartialSVD, ref_a: DenseMatrix, d: int,
                    levels: int | None = None,
                    ref_factors: SVDFactors | None = None) -> ComparisonReport:
    """Full comparison of a reduction result against its source matrix.

    ``levels`` enables the bound check: the residual is compared with
    :func:`merge_error_bound` at the reference's rank-``d`` truncation
    tail; it is meaningful when that tail is nonzero.  Without ``levels``
    the bound fields are NaN/true.
    """
    if ref_factors is None:
        ref_factors = svd_reduced(ref_a)
    k = min(d, test.factors.rank)
    e_sigma = max_sigma_error(test.factors.sigma, ref_factors.sigma, k)
    e_vec, angles = max_vector_error(
        test.factors.u.array, ref_factors.u.array, k)
    resid = aligned_residual(test, ref_a, d, ref_factors=ref_factors)
    if levels is not None and levels >= 1:
        bound = merge_error_bound(levels, frobenius_tail(ref_factors.sigma, d))
        ok = bool(resid <= bound)
    else:
        bound, ok = float("nan"), True
    return ComparisonReport(
        e_sigma=e_sigma, e_vec=e_vec, principal_angles=angles,
        procrustes_residual=resid, bound_value=bound, bound_satisfied=ok)
