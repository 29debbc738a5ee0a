"""Tree reduction of block-wise partial SVDs.

A level-one task factorizes each column block and keeps at most ``d``
scaled left singular vectors.  Each later level concatenates the scaled
vectors of ``n`` consecutive children into a proxy matrix, factorizes
the proxy and truncates again.  The proxy has the same singular values
and left singular vectors as the concatenation of the children's data,
so with ``d`` at least the true rank the reduction is exact, and for
smaller ``d`` the error grows by a bounded factor per level (see
:func:`hsvd.metrics.merge_error_bound`).

Worker parallelism only distributes independent factorizations whose
inputs and output slots are fixed by the tree, and BLAS is pinned to a
single thread while the engine runs, so results are bitwise identical
for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .blockio import BlockSet, read_block, write_block
from .errors import (
    PlanMismatchError,
    RowMismatchError,
    ShapeMismatchError,
    SingularValueUnderflowError,
    ValidationError,
)
from .matrix import (
    RANK_TOL,
    DenseMatrix,
    SVDFactors,
    scaled_left,
    svd_reduced,
    truncate,
)


@dataclass(frozen=True)
class MergePlan:
    """Shape of the reduction tree.

    ``q`` levels of ``n``-way merges over ``m`` blocks, keeping ``d``
    singular triples.  ``q = 0`` degenerates to one direct SVD of the
    assembled matrix.  When ``m`` is not a power of ``n`` the last group
    at each level simply has fewer children.
    """

    q: int
    n: int
    d: int
    m: int

    def __post_init__(self):
        if self.q < 0:
            raise ValidationError(f"levels must be >= 0, got {self.q}")
        if self.n < 2:
            raise ValidationError(f"group size must be >= 2, got {self.n}")
        if self.d < 1:
            raise ValidationError(f"target rank must be >= 1, got {self.d}")
        if self.m < 1:
            raise ValidationError(f"block count must be >= 1, got {self.m}")


@dataclass(frozen=True)
class PartialSVD:
    """Singular values and left vectors of one contiguous span of columns."""

    factors: SVDFactors
    span: tuple[int, int]

    def __post_init__(self):
        if self.factors.v is not None:
            raise ValidationError("partial results carry no right singular vectors")
        start, width = self.span
        if start < 0 or width < 1:
            raise ValidationError(f"bad span {self.span}")


def _block_partial(m: DenseMatrix, d: int, span: tuple[int, int]) -> PartialSVD:
    f = truncate(svd_reduced(m), d)
    f = SVDFactors(u=f.u, sigma=f.sigma, v=None, rank_hint=f.rank_hint)
    return PartialSVD(factors=f, span=span)


def merge_group(parts: list[PartialSVD], d: int,
                perturbation: np.ndarray | None = None) -> PartialSVD:
    """Merge sibling partial results into one, keeping ``d`` triples.

    The proxy matrix concatenates each child's truncated scaled left
    vectors in span order.  ``perturbation`` (same shape as the proxy) is
    added before the factorization; it exists to make noise-stability
    checks first-class.

    Raises
    ------
    RowMismatchError
        If the children disagree on the row count.
    ValidationError
        If the children's spans are not contiguous and in order.
    """
    if not parts:
        raise ValidationError("cannot merge an empty group")
    rows = parts[0].factors.u.rows
    for p in parts[1:]:
        if p.factors.u.rows != rows:
            raise RowMismatchError(
                f"row counts differ: {rows} vs {p.factors.u.rows}")
    start, cursor = parts[0].span[0], parts[0].span[0]
    for p in parts:
        if p.span[0] != cursor:
            raise ValidationError(
                f"spans must be contiguous: expected start {cursor}, got {p.span[0]}")
        cursor += p.span[1]
    pieces = [scaled_left(truncate(p.factors, d)).array for p in parts]
    proxy = np.concatenate(pieces, axis=1)
    if perturbation is not None:
        perturbation = np.asarray(perturbation, dtype=np.float64)
        if perturbation.shape != proxy.shape:
            raise ShapeMismatchError(
                f"perturbation is {perturbation.shape}, proxy is {proxy.shape}")
        proxy = proxy + perturbation
    f = truncate(svd_reduced(DenseMatrix(proxy)), d)
    f = SVDFactors(u=f.u, sigma=f.sigma, v=None, rank_hint=f.rank_hint)
    return PartialSVD(factors=f, span=(start, cursor - start))


def _map_tasks(fn, tasks, workers: int):
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def hierarchical_svd(blocks: BlockSet, plan: MergePlan, workers: int = 1) -> PartialSVD:
    """Run the full tree reduction over a block set.

    Level one factorizes every block (in parallel across ``workers``);
    each later level merges consecutive groups of ``plan.n`` children.
    If more than one subtree remains after ``plan.q`` levels the
    leftovers are merged in a single final group, and a plan whose tree
    finishes early simply stops once one result remains.  The result is
    bitwise independent of ``workers``.
    """
    if plan.m != blocks.m:
        raise PlanMismatchError(f"plan says {plan.m} blocks, set has {blocks.m}")
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    with threadpool_limits(limits=1, user_api="blas"):
        if plan.q == 0:
            return _block_partial(blocks.assemble(), plan.d, (0, blocks.n_cols))
        parts = _map_tasks(
            lambda i: _block_partial(blocks.load(i), plan.d, blocks.span(i)),
            list(range(blocks.m)), workers)
        level = 0
        while len(parts) > 1:
            level += 1
            if level > plan.q:
                parts = [merge_group(parts, plan.d)]
                break
            groups = [parts[i:i + plan.n] for i in range(0, len(parts), plan.n)]
            parts = _map_tasks(lambda g: merge_group(g, plan.d), groups, workers)
        return parts[0]


def recover_right_vectors(blocks: BlockSet, root: PartialSVD,
                          workers: int = 1) -> DenseMatrix:
    """Right singular vectors from a finished reduction.

    Block ``i`` contributes rows ``span(i)`` of the result: column ``j``
    there is ``block.T @ u_j / sigma_j``.  Every retained singular value
    must be above the numerical-rank threshold; a value at or below it
    means the target rank exceeded the numerical rank of the data.
    """
    sigma = root.factors.sigma
    if len(sigma) == 0 or sigma[0] <= 0.0 or sigma[-1] <= RANK_TOL * sigma[0]:
        raise SingularValueUnderflowError(
            "singular values too small for right-vector recovery; lower the target rank")
    if root.factors.u.rows != blocks.d_rows:
        raise ShapeMismatchError("result and block set disagree on row count")
    u = root.factors.u.array

    def task(i: int) -> np.ndarray:
        return blocks.load(i).array.T @ u / sigma

    with threadpool_limits(limits=1, user_api="blas"):
        rows = _map_tasks(task, list(range(blocks.m)), workers)
    return DenseMatrix(np.concatenate(rows, axis=0))


def save_partial(p: PartialSVD, directory, stem: str = "result") -> None:
    """Persist a partial result as a block file of ``u`` plus a sigma sidecar.

    Storing the orthonormal factor and the values separately keeps the
    round trip lossless; the scaled product is reconstructible as
    ``u * sigma``.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_block(directory / f"{stem}_u.hsvdblk", p.factors.u)
    lines = [f"{s:.17g}" for s in p.factors.sigma]
    meta = [f"span_start={p.span[0]}", f"span_width={p.span[1]}",
            f"rank_hint={p.factors.rank_hint}"]
    (directory / f"{stem}_sigma.csv").write_text(
        "\n".join(lines) + "\n", encoding="utf-8")
    (directory / f"{stem}_meta.txt").write_text(
        "\n".join(meta) + "\n", encoding="utf-8")


def load_partial(directory, stem: str = "result") -> PartialSVD:
    """Inverse of :func:`save_partial`."""
    directory = Path(directory)
    u = read_block(directory / f"{stem}_u.hsvdblk")
    sigma = np.array([
        float(ln) for ln in
        (directory / f"{stem}_sigma.csv").read_text(encoding="utf-8").split()
        if ln.strip()])
    meta = {}
    for ln in (directory / f"{stem}_meta.txt").read_text(encoding="utf-8").splitlines():
        if "=" in ln:
            key, val = ln.split("=", 1)
            meta[key.strip()] = int(val)
    f = SVDFactors(u=u, sigma=sigma, v=None, rank_hint=meta["rank_hint"])
    return PartialSVD(factors=f, span=(meta["span_start"], meta["span_width"]))
