"""Analytic latency/bandwidth/flop cost model for the tree reduction.

Rates: ``alpha`` seconds of latency per message, ``beta`` seconds per
transmitted word, ``gamma`` seconds per flop.  The sequential baseline
is the bidiagonalization cost ``2*N*D**2 + 2*D**3``; the parallel cost
adds, per level, either the wide-proxy count ``2*d*n*D**2 + 2*D**3``
(when ``n*d >= D``) or the narrow-proxy count ``2*(d*n)**2*D +
2*(d*n)**3`` (when ``n*d < D``), plus the send/receive term.  Flop
counts are kept in exact rational arithmetic so figure-level golden
values carry no drift; the two branches are not asserted to agree at
``n*d == D`` (the tie goes to the wide branch, whose proxy bound is
conservative there).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import NonIntegerLevelsError, ValidationError, ZeroDenominatorError


class ProxyBranch(enum.Enum):
    """Which per-level flop count applies, by proxy width versus rows."""

    WIDE = "wide"       # n*d >= D: proxy SVD bounded like a wide matrix
    NARROW = "narrow"   # n*d <  D: proxy SVD costed on its own dimensions


@dataclass(frozen=True)
class CostParams:
    """Inputs of the cost model.

    ``d_rows`` and ``n_cols`` are the matrix dimensions, ``d`` the target
    rank, ``n`` the merge group size, ``q`` the level count and ``m`` the
    core/block count (``n ** q`` for a perfect tree).  ``q = 0`` with
    ``m = 1`` is the sequential limit.
    """

    alpha: float
    beta: float
    gamma: float
    d_rows: int
    n_cols: int
    d: int
    n: int
    q: int
    m: int

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValidationError("rates must be non-negative")
        if self.d_rows < 1 or self.n_cols < 1 or self.d < 1:
            raise ValidationError("dimensions and target rank must be >= 1")
        if self.n < 2:
            raise ValidationError(f"group size must be >= 2, got {self.n}")
        if self.q < 0 or self.m < 1:
            raise ValidationError("levels must be >= 0 and cores >= 1")


@dataclass(frozen=True)
class CostReport:
    """Derived quantities for one parameter point."""

    params: CostParams
    sequential_flops: int
    parallel_flops: Fraction
    comm_seconds: float
    broadcast_seconds: float
    speedup: float
    efficiency: float
    branch: ProxyBranch


def comm_cost(p: CostParams) -> float:
    """Send/receive seconds across the whole reduction."""
    return p.q * (p.alpha + p.d * (p.n - 1) * p.d_rows * p.beta)


def broadcast_cost(p: CostParams) -> float:
    """Seconds to broadcast the left singular vectors to all cores."""
    return p.alpha + p.d * p.m * p.beta


def sequential_flops(p: CostParams) -> int:
    return 2 * p.n_cols * p.d_rows**2 + 2 * p.d_rows**3


def _branch(p: CostParams) -> ProxyBranch:
    return ProxyBranch.WIDE if p.n * p.d >= p.d_rows else ProxyBranch.NARROW


def parallel_flops(p: CostParams) -> Fraction:
    """Per-core flop count of the reduction, exact."""
    D = p.d_rows
    local = 2 * Fraction(p.n_cols, p.m) * D**2 + 2 * D**3
    if _branch(p) is ProxyBranch.WIDE:
        per_level = 2 * p.d * p.n * D**2 + 2 * D**3
    else:
        nd = p.d * p.n
        per_level = 2 * nd**2 * D + 2 * nd**3
    return local + p.q * per_level


def speedup(p: CostParams) -> CostReport:
    """Predicted speedup over the sequential factorization.

    The sequential limit (``q = 0`` or ``m = 1``) is pinned to exactly 1.
    With zero communication the ratio is evaluated in exact rational
    arithmetic (the flop rate cancels).
    """
    seq = sequential_flops(p)
    par = parallel_flops(p)
    comm = comm_cost(p)
    branch = _branch(p)
    if p.q == 0 or p.m == 1:
        s = 1.0
    else:
        if p.gamma == 0.0 and comm == 0.0:
            raise ZeroDenominatorError("alpha, beta and gamma are all zero")
        if comm == 0.0:
            s = float(Fraction(seq) / par)
        else:
            s = seq * p.gamma / (float(par) * p.gamma + comm)
    return CostReport(
        params=p,
        sequential_flops=seq,
        parallel_flops=par,
        comm_seconds=comm,
        broadcast_seconds=broadcast_cost(p),
        speedup=s,
        efficiency=s / p.m,
        branch=branch,
    )


def levels_for(n: int, m: int, strict: bool = False) -> int:
    """Level count for ``m`` cores with ``n``-way merges.

    Rounds ``log_n m``; in strict mode a core count that is not an exact
    power of ``n`` is rejected.
    """
    if m == 1:
        return 0
    q = round(math.log(m) / math.log(n))
    if strict and n**q != m:
        raise NonIntegerLevelsError(f"{m} cores is not a power of {n}")
    return q


def efficiency_table(p: CostParams, m_values, strict: bool = False) -> list[CostReport]:
    """Weak-scaling sweep over core counts.

    ``p`` describes the single-core baseline; for each entry of
    ``m_values`` the column count grows proportionally (fixed per-core
    width ``p.n_cols``) and the level count is derived from the group
    size.  Rows are ordered like ``m_values``.
    """
    reports = []
    for m in m_values:
        m = int(m)
        q = levels_for(p.n, m, strict=strict)
        row = replace(p, n_cols=p.n_cols * m, q=q, m=m)
        reports.append(speedup(row))
    return reports


CSV_HEADER = "m,q,n,branch,speedup,efficiency,comm_seconds"


def report_csv_row(r: CostReport) -> str:
    """One delimited row matching :data:`CSV_HEADER`."""
    p = r.params
    return (f"{p.m},{p.q},{p.n},{r.branch.value},"
            f"{r.speedup:.17g},{r.efficiency:.17g},{r.comm_seconds:.17g}")
