"""Figure rendering for cost tables and experiment summaries.

Uses the Agg backend so the CLI works headless; PNG metadata is pinned
to a constant so repeated runs produce identical files.  CSV stays the
authoritative data boundary; these figures are companions to it.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_PNG_METADATA = {"Software": "hsvd"}


def render_efficiency_figure(reports, path, title: str = "Weak scaling") -> Path:
    """Efficiency-versus-cores curves, one line per merge group size."""
    path = Path(path)
    by_n: dict[int, list] = {}
    for r in reports:
        by_n.setdefault(r.params.n, []).append(r)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for n in sorted(by_n):
        rows = sorted(by_n[n], key=lambda r: r.params.m)
        ax.plot([r.params.m for r in rows], [r.efficiency for r in rows],
                marker="o", linestyle="--", label=f"model peak, n={n}")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("Number of cores")
    ax.set_ylabel("Efficiency")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def render_error_figure(rows, path, title: str = "Recovery error vs block count") -> Path:
    """Error-versus-blocks curves for accuracy/noise experiment rows.

    One line per (group size, tail) combination; sigma errors where
    available, otherwise the aligned residual.
    """
    path = Path(path)
    series: dict[tuple, list] = {}
    for r in rows:
        key = (r.n, r.tail_sq)
        value = r.e_sigma if r.e_sigma == r.e_sigma else r.residual  # NaN-safe
        series.setdefault(key, []).append((r.m, max(value, 1e-18)))
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for (n, tail_sq) in sorted(series):
        pts = sorted(series[(n, tail_sq)])
        label = f"n={n}" + (f", tail$^2$={tail_sq:g}" if tail_sq else "")
        ax.plot([m for m, _ in pts], [v for _, v in pts], marker="o", label=label)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("Number of blocks")
    ax.set_ylabel("Error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
    return path
