"""Hierarchical merge-based SVD for very wide matrices.

The package computes singular values and left singular vectors of a
``D x N`` matrix with ``N >> D`` by factorizing column blocks
independently and merging the truncated, scaled left factors up a
reduction tree.  It ships the dense-matrix core, a bit-exact block
store, the merge engine, accuracy metrics with error-bound checks, an
analytic parallel cost model and a CLI harness (``hsvd``).
"""

from .errors import (
    BadMagicError,
    BadVersionError,
    BadWidthsError,
    ConvergenceError,
    EmptyMatrixError,
    HsvdError,
    ManifestError,
    NegativeSigmaError,
    NonFiniteError,
    NonFinitePayloadError,
    NonIntegerLevelsError,
    PlanMismatchError,
    ProfileViolationError,
    RowMismatchError,
    ShapeMismatchError,
    SingularValueUnderflowError,
    SpectrumTooLongError,
    TruncatedFileError,
    ValidationError,
    ZeroDenominatorError,
    ZeroReferenceError,
)
from .matrix import (
    DenseMatrix,
    SVDFactors,
    frobenius_tail,
    normalize_column_signs,
    scaled_left,
    svd_reduced,
    truncate,
)
from .blockio import (
    Block,
    BlockSet,
    partition,
    read_block,
    read_manifest,
    write_block,
    write_blockset,
)
from .merge import (
    MergePlan,
    PartialSVD,
    hierarchical_svd,
    load_partial,
    merge_group,
    recover_right_vectors,
    save_partial,
)
from .costmodel import (
    CostParams,
    CostReport,
    ProxyBranch,
    broadcast_cost,
    comm_cost,
    efficiency_table,
    levels_for,
    parallel_flops,
    sequential_flops,
    speedup,
)
from .synth import (
    SpectrumSpec,
    matrix_with_spectrum,
    random_orthogonal,
    spectrum_with_tail,
)
from .metrics import (
    ComparisonReport,
    aligned_residual,
    compare_partial,
    has_simple_gaps,
    max_sigma_error,
    max_vector_error,
    merge_error_bound,
    procrustes_align,
)
from .config import ExperimentConfig, Mode
from .experiment import run_experiment

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "HsvdError", "ValidationError", "NonFiniteError", "EmptyMatrixError",
    "ConvergenceError", "NegativeSigmaError", "BadWidthsError",
    "BadMagicError", "BadVersionError", "TruncatedFileError",
    "NonFinitePayloadError", "ManifestError", "RowMismatchError",
    "PlanMismatchError", "SingularValueUnderflowError",
    "ZeroDenominatorError", "NonIntegerLevelsError", "SpectrumTooLongError",
    "ProfileViolationError", "ZeroReferenceError", "ShapeMismatchError",
    # matrix core
    "DenseMatrix", "SVDFactors", "svd_reduced", "truncate",
    "frobenius_tail", "scaled_left", "normalize_column_signs",
    # block store
    "Block", "BlockSet", "partition", "read_block", "write_block",
    "read_manifest", "write_blockset",
    # merge engine
    "MergePlan", "PartialSVD", "merge_group", "hierarchical_svd",
    "recover_right_vectors", "save_partial", "load_partial",
    # cost model
    "CostParams", "CostReport", "ProxyBranch", "comm_cost",
    "broadcast_cost", "speedup", "efficiency_table", "levels_for",
    "sequential_flops", "parallel_flops",
    # synthetic generator
    "SpectrumSpec", "random_orthogonal", "matrix_with_spectrum",
    "spectrum_with_tail",
    # metrics
    "ComparisonReport", "max_sigma_error", "max_vector_error",
    "merge_error_bound", "aligned_residual", "procrustes_align",
    "compare_partial", "has_simple_gaps",
    # harness
    "ExperimentConfig", "Mode", "run_experiment",
]
