"""Synthetic test matrices with an exactly controlled spectrum.

Matrices are built as ``U * diag(sigma) * V1.T`` from Haar-distributed
orthonormal frames, driven by a counter-based generator so identical
seeds give bitwise-identical output regardless of thread count.  Only
the first ``len(sigma)`` columns of the notional right factor enter the
product, so ``V1`` is realized directly as a tall frame with orthonormal
columns rather than a full square matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ProfileViolationError, SpectrumTooLongError, ValidationError
from .matrix import DenseMatrix, normalize_column_signs


@dataclass(frozen=True)
class SpectrumSpec:
    """Target shape, singular values and seed for one generated matrix."""

    d_rows: int
    n_cols: int
    sigma: np.ndarray
    seed: int

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=np.float64, copy=True)
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        if self.d_rows < 1 or self.n_cols < self.d_rows:
            raise ValidationError(
                f"need cols >= rows >= 1, got {self.d_rows}x{self.n_cols}")
        if len(sigma) > self.d_rows:
            raise SpectrumTooLongError(
                f"spectrum has {len(sigma)} entries for {self.d_rows} rows")
        if len(sigma) == 0:
            raise ValidationError("spectrum must be nonempty")
        if sigma[-1] < 0.0 or np.any(np.diff(sigma) > 0.0):
            raise ValidationError("spectrum must be non-negative and non-increasing")


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _haar_frame(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def random_orthogonal(dim: int, seed: int) -> DenseMatrix:
    """Haar-style random orthogonal matrix, deterministic per seed.

    A standard Gaussian matrix is orthogonalized and corrected by the
    signs of the triangular factor's diagonal, then each column is
    flipped so its first significant entry is positive (the package-wide
    sign convention; for ``dim == 1`` the result is always ``(+1)``).
    """
    if dim < 1:
        raise ValidationError(f"dimension must be >= 1, got {dim}")
    with threadpool_limits(limits=1, user_api="blas"):
        q = _haar_frame(_generator(seed), dim, dim)
        q, _ = normalize_column_signs(q)
    return DenseMatrix(q)


def matrix_with_spectrum(spec: SpectrumSpec) -> DenseMatrix:
    """Matrix whose singular values equal ``spec.sigma``.

    Both frames are drawn from one seed-keyed stream, left frame first,
    so the construction is reproducible bit for bit.
    """
    with threadpool_limits(limits=1, user_api="blas"):
        rng = _generator(spec.seed)
        k = len(spec.sigma)
        u = _haar_frame(rng, spec.d_rows, k)
        v1 = _haar_frame(rng, spec.n_cols, k)
        a = (u * spec.sigma) @ v1.T
    return DenseMatrix(a)


def spectrum_with_tail(d_rows: int, d: int, head_profile=None,
                       tail_sq: float = 0.0) -> np.ndarray:
    """Spectrum with ``d`` leading values and a controlled truncation tail.

    The trailing ``d_rows - d`` values are all ``sqrt(tail_sq / (d_rows - d))``
    so the squared Frobenius tail beyond ``d`` equals ``tail_sq`` by
    construction.  The head defaults to ``d`` values linearly spaced from
    10 down to 1 (well-separated, which keeps per-vector comparisons
    meaningful); head entries below the tail value are clamped up to it
    so the result is non-increasing.
    """
    if not 1 <= d < d_rows:
        raise ValidationError(f"need 1 <= d < rows, got d={d}, rows={d_rows}")
    if tail_sq < 0.0:
        raise ValidationError(f"tail_sq must be >= 0, got {tail_sq}")
    if head_profile is None:
        head = np.linspace(10.0, 1.0, d)
    else:
        head = np.array(head_profile, dtype=np.float64)
        if len(head) != d:
            raise ValidationError(f"head profile has {len(head)} entries, expected {d}")
        if np.any(head < 0.0) or np.any(np.diff(head) > 0.0):
            raise ProfileViolationError("head profile must be non-negative and non-increasing")
    tail_value = float(np.sqrt(tail_sq / (d_rows - d)))
    head = np.maximum(head, tail_value)
    return np.concatenate([head, np.full(d_rows - d, tail_value)])
