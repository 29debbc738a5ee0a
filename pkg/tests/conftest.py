import numpy as np
import pytest

from hsvd import DenseMatrix, SpectrumSpec, matrix_with_spectrum


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_matrix(rng, rows, cols):
    return DenseMatrix(rng.standard_normal((rows, cols)))


def rank_limited_matrix(rows, cols, rank, seed, top=10.0):
    """Matrix with exact rank and well-separated leading values."""
    sigma = np.concatenate([np.linspace(top, 1.0, rank), np.zeros(rows - rank)])
    spec = SpectrumSpec(d_rows=rows, n_cols=cols, sigma=sigma, seed=seed)
    return matrix_with_spectrum(spec)
