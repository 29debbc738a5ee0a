"""Command-line front end.

Subcommands: ``gen`` (synthesize a blocked matrix), ``partition`` (split
a stored matrix), ``run`` (hierarchical reduction), ``compare`` (metrics
against a reference), ``cost`` (cost-model tables and figures) and
``experiment`` (full grid orchestration).

Exit codes are a stable contract: 0 success, 2 validation error,
3 numerical-bound failure, 4 I/O error.  ``HSVD_WORKERS`` supplies the
default worker count.  All numeric CSV output uses '.' decimals and 17
significant digits so values round-trip exactly.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .blockio import partition, read_block, read_manifest, write_block, write_blockset
from .config import build_config, parse_grid, read_key_values
from .costmodel import (
    CSV_HEADER as COST_CSV_HEADER,
    CostParams,
    efficiency_table,
    report_csv_row as cost_csv_row,
)
from .errors import (
    BadMagicError,
    BadVersionError,
    HsvdError,
    ManifestError,
    NonFinitePayloadError,
    TruncatedFileError,
    ValidationError,
)
from .merge import MergePlan, hierarchical_svd, load_partial, recover_right_vectors, save_partial
from .metrics import (
    CSV_HEADER as COMPARE_CSV_HEADER,
    ComparisonReport,
    compare_partial,
    max_sigma_error,
    max_vector_error,
    procrustes_align,
    report_csv_row as compare_csv_row,
)
from .experiment import run_experiment, validate_noise_tail
from .synth import SpectrumSpec, matrix_with_spectrum, spectrum_with_tail

_FORMAT_ERRORS = (BadMagicError, BadVersionError, TruncatedFileError,
                  NonFinitePayloadError, ManifestError)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BOUND = 3
EXIT_IO = 4

# Desk-scale ceiling; bigger shapes (figure-scale runs) need --large.
DESK_MAX_ROWS = 200
DESK_MAX_COLS = 65536


def _check_desk_scale(rows: int, cols: int, large: bool) -> None:
    if not large and (rows > DESK_MAX_ROWS or cols > DESK_MAX_COLS):
        raise ValidationError(
            f"{rows}x{cols} exceeds desk scale ({DESK_MAX_ROWS}x{DESK_MAX_COLS}); "
            f"pass --large to run it anyway")


class BoundFailure(HsvdError):
    """A requested numerical bound check did not hold."""


def _default_workers() -> int:
    raw = os.environ.get("HSVD_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"HSVD_WORKERS must be an integer, got {raw!r}")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_sigma_csv(path: Path, sigma) -> None:
    path.write_text("\n".join(_fmt(s) for s in sigma) + "\n", encoding="utf-8")


# --- gen ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    out = Path(args.out)
    _check_desk_scale(args.rows, args.cols, args.large)
    if args.rank is not None and not 1 <= args.rank <= args.rows:
        raise ValidationError(f"--rank must be in [1, {args.rows}], got {args.rank}")
    if args.rank is not None and args.rank < args.rows:
        sigma = spectrum_with_tail(args.rows, args.rank, tail_sq=args.tail_sq)
    else:
        if args.tail_sq:
            raise ValidationError("--tail-sq needs --rank below --rows")
        sigma = np.linspace(10.0, 1.0, args.rows)
    spec = SpectrumSpec(d_rows=args.rows, n_cols=args.cols, sigma=sigma,
                        seed=args.seed)
    a = matrix_with_spectrum(spec)
    widths = [int(w) for w in args.widths.split(",")] if args.widths else None
    bs = partition(a, args.blocks, widths=widths)
    manifest = write_blockset(bs, out)
    _write_sigma_csv(out / "spectrum.csv", sigma)
    print(f"wrote {bs.m} blocks ({args.rows}x{args.cols}) and {manifest}")
    return EXIT_OK


# --- partition ---------------------------------------------------------------

def cmd_partition(args) -> int:
    a = read_block(args.input)
    widths = [int(w) for w in args.widths.split(",")] if args.widths else None
    bs = partition(a, args.blocks, widths=widths)
    manifest = write_blockset(bs, Path(args.out))
    print(f"wrote {bs.m} blocks and {manifest}")
    return EXIT_OK


# --- run ----------------------------------------------------------------------

def cmd_run(args) -> int:
    blocks = read_manifest(args.manifest)
    d = args.d if args.d is not None else blocks.d_rows
    plan = MergePlan(q=args.q, n=args.n, d=d, m=blocks.m)
    workers = args.workers
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    root = hierarchical_svd(blocks, plan, workers=workers)
    elapsed = time.perf_counter() - t0
    save_partial(root, out)
    run_meta = [f"manifest={Path(args.manifest).resolve()}",
                f"n={plan.n}", f"q={plan.q}", f"d={plan.d}", f"m={plan.m}",
                f"workers={workers}"]
    (out / "run.txt").write_text("\n".join(run_meta) + "\n", encoding="utf-8")
    # Wall time lives in its own file: it is the one output excluded from
    # the bitwise determinism contract.
    (out / "timing.txt").write_text(f"seconds={elapsed:.6f}\n", encoding="utf-8")
    if args.right_vectors:
        v = recover_right_vectors(blocks, root, workers=workers)
        write_block(out / "result_v.hsvdblk", v)
    print(f"reduced {blocks.d_rows}x{blocks.n_cols} over {blocks.m} blocks "
          f"in {elapsed:.3f}s -> {out}")
    return EXIT_OK


# --- compare -------------------------------------------------------------------

def _load_result(directory: Path):
    return load_partial(directory)


def cmd_compare(args) -> int:
    if (args.reference is None) == (args.manifest is None):
        raise ValidationError("give exactly one of --manifest or --reference")
    result = _load_result(Path(args.result))
    out = Path(args.out) if args.out else Path(args.result) / "report.csv"
    if args.reference is not None:
        other = _load_result(Path(args.reference))
        d = args.d or min(result.factors.rank, other.factors.rank)
        k = min(d, result.factors.rank, other.factors.rank)
        e_sigma = max_sigma_error(result.factors.sigma, other.factors.sigma, k)
        e_vec, angles = max_vector_error(
            result.factors.u.array, other.factors.u.array, k)
        x = result.factors.u.array[:, :k] * result.factors.sigma[:k]
        y = other.factors.u.array[:, :k] * other.factors.sigma[:k]
        _, resid = procrustes_align(x, y)
        report = ComparisonReport(
            e_sigma=e_sigma, e_vec=e_vec, principal_angles=angles,
            procrustes_residual=resid, bound_value=float("nan"),
            bound_satisfied=True)
    else:
        blocks = read_manifest(args.manifest)
        a = blocks.assemble()
        d = args.d or result.factors.rank
        levels = None
        if args.check_bound:
            run_meta = Path(args.result) / "run.txt"
            if args.q is not None:
                levels = args.q
            elif run_meta.exists():
                meta = read_key_values(run_meta)
                levels = int(meta.get("q", "0"))
            if not levels or levels < 1:
                raise ValidationError(
                    "--check-bound needs a level count (--q or run.txt)")
        report = compare_partial(result, a, d, levels=levels)
    out.write_text(COMPARE_CSV_HEADER + "\n" + compare_csv_row(report) + "\n",
                   encoding="utf-8")
    print(f"e_sigma={report.e_sigma:.3e} e_vec={report.e_vec:.3e} "
          f"max_angle={report.max_angle:.3e} residual={report.procrustes_residual:.3e}")
    if args.check_bound and not report.bound_satisfied:
        raise BoundFailure(
            f"aligned residual {report.procrustes_residual:.6e} exceeds "
            f"bound {report.bound_value:.6e}")
    return EXIT_OK


# --- cost ----------------------------------------------------------------------

_FIGURE_GRIDS = {
    # figure-scale weak scaling: 2000 rows, 32000 columns per core
    "full": dict(d_rows=2000, block_cols=32000, d=2000),
    "lowrank": dict(d_rows=2000, block_cols=32000, d=200),
}


def cmd_cost(args) -> int:
    reports = []
    if args.paper_grid:
        shape = _FIGURE_GRIDS[args.paper_grid]
        for n in (2, 3, 4):
            base = CostParams(alpha=0.0, beta=0.0, gamma=args.gamma,
                              d_rows=shape["d_rows"], n_cols=shape["block_cols"],
                              d=shape["d"], n=n, q=0, m=1)
            m_values, m = [1], n
            while m <= 512 and (n != 3 or m <= 243) and (n != 4 or m <= 256):
                m_values.append(m)
                m *= n
            reports.extend(efficiency_table(base, m_values, strict=True))
    else:
        base = CostParams(alpha=args.alpha, beta=args.beta, gamma=args.gamma,
                          d_rows=args.rows, n_cols=args.block_cols,
                          d=args.d, n=args.n, q=0, m=1)
        m_values = [int(x) for x in args.m_list.split(",")]
        reports.extend(efficiency_table(base, m_values, strict=args.strict))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        "\n".join([COST_CSV_HEADER] + [cost_csv_row(r) for r in reports]) + "\n",
        encoding="utf-8")
    print(f"wrote {len(reports)} rows to {out}")
    if args.plot:
        from .plots import render_efficiency_figure
        fig_path = out.with_suffix(".png")
        render_efficiency_figure(reports, fig_path)
        print(f"wrote {fig_path}")
    return EXIT_OK


# --- experiment ------------------------------------------------------------------

def cmd_experiment(args) -> int:
    file_values = read_key_values(args.config) if args.config else None
    cfg = build_config(
        file_values,
        mode=args.mode, rows=args.rows, cols=args.cols, rank=args.rank,
        tails=args.tails, seed=args.seed,
        grid=parse_grid(args.grid) if args.grid else None,
        workers=args.workers, trials=args.trials, out=args.out,
        plot=None if args.plot is None else str(args.plot))
    _check_desk_scale(cfg.d_rows, cfg.n_cols, args.large)
    validate_noise_tail(cfg)
    outcome = run_experiment(cfg)
    print(f"wrote {len(outcome.rows)} rows to {outcome.csv_path}")
    for fig in outcome.figure_paths:
        print(f"wrote {fig}")
    if outcome.failures:
        print(f"{len(outcome.failures)} cells failed; see failures.txt",
              file=sys.stderr)
        raise BoundFailure("one or more experiment cells failed")
    if not outcome.all_bounds_satisfied:
        raise BoundFailure("one or more bound checks failed")
    return EXIT_OK


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsvd",
        description="Hierarchical merge-based SVD for very wide matrices.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic blocked matrix")
    p.add_argument("--rows", type=int, default=40)
    p.add_argument("--cols", type=int, default=1280)
    p.add_argument("--rank", type=int, default=None,
                   help="leading spectrum size; defaults to full rank")
    p.add_argument("--tail-sq", type=float, default=0.0,
                   help="squared Frobenius tail beyond --rank")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--blocks", type=int, default=8)
    p.add_argument("--widths", type=str, default=None,
                   help="comma-separated explicit block widths")
    p.add_argument("--large", action="store_true",
                   help="allow shapes beyond desk scale")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("partition", help="split a stored matrix into blocks")
    p.add_argument("--input", type=str, required=True, help="a single block file")
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--widths", type=str, default=None)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("run", help="run the hierarchical reduction")
    p.add_argument("--manifest", type=str, required=True)
    p.add_argument("--n", type=int, required=True, help="merge group size")
    p.add_argument("--q", type=int, required=True, help="level count")
    p.add_argument("--d", type=int, default=None,
                   help="target rank; defaults to the row count")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--right-vectors", action="store_true",
                   help="also recover right singular vectors")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="compare a result with a reference")
    p.add_argument("--result", type=str, required=True, help="run output directory")
    p.add_argument("--manifest", type=str, default=None,
                   help="manifest of the source matrix (direct-SVD reference)")
    p.add_argument("--reference", type=str, default=None,
                   help="another run output directory to compare against")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--q", type=int, default=None, help="level count for the bound")
    p.add_argument("--check-bound", action="store_true",
                   help="exit 3 if the aligned residual exceeds the merge bound")
    p.add_argument("--out", type=str, default=None, help="report CSV path")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("cost", help="emit cost-model tables and figures")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=1e-9)
    p.add_argument("--rows", type=int, default=40)
    p.add_argument("--block-cols", type=int, default=160,
                   help="columns per core (weak scaling)")
    p.add_argument("--d", type=int, default=40)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m-list", type=str, default="1,2,4,8",
                   help="comma-separated core counts")
    p.add_argument("--strict", action="store_true",
                   help="reject core counts that are not powers of n")
    p.add_argument("--paper-grid", choices=sorted(_FIGURE_GRIDS), default=None,
                   help="emit the figure-scale weak-scaling grids")
    p.add_argument("--out", type=str, required=True, help="CSV path")
    plot = p.add_mutually_exclusive_group()
    plot.add_argument("--plot", dest="plot", action="store_true", default=True)
    plot.add_argument("--no-plot", dest="plot", action="store_false")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("experiment", help="run a full experiment grid")
    p.add_argument("--config", type=str, default=None, help="key=value config file")
    p.add_argument("--mode", type=str, default=None,
                   help="fullrank | lowrank | noise | cost")
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--rank", type=str, default=None, help="comma-separated d values")
    p.add_argument("--tails", type=str, default=None,
                   help="comma-separated squared tails")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--grid", type=str, default=None, help="n:q pairs, comma-separated")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--large", action="store_true",
                   help="allow shapes beyond desk scale")
    p.add_argument("--out", type=str, default=None)
    plot = p.add_mutually_exclusive_group()
    plot.add_argument("--plot", dest="plot", action="store_true", default=None)
    plot.add_argument("--no-plot", dest="plot", action="store_false")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except BoundFailure as exc:
        print(f"bound failure: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except _FORMAT_ERRORS as exc:
        print(f"file format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HsvdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
