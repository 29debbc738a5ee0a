"""Flat key=value experiment configuration.

The file format is one ``key=value`` pair per line; ``#`` starts a
comment and blank lines are ignored.  Command-line flags override file
values.  Grids are written as comma-separated ``n:q`` pairs, e.g.
``grid=2:1,2:2,4:1``; lists of numbers are comma-separated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError


class Mode(enum.Enum):
    FULL_RANK = "fullrank"
    LOW_RANK = "lowrank"
    NOISE = "noise"
    COST = "cost"


_MODE_ALIASES = {
    "fullrank": Mode.FULL_RANK, "full_rank": Mode.FULL_RANK, "full": Mode.FULL_RANK,
    "lowrank": Mode.LOW_RANK, "low_rank": Mode.LOW_RANK, "low": Mode.LOW_RANK,
    "noise": Mode.NOISE,
    "cost": Mode.COST,
}


def parse_mode(text: str) -> Mode:
    key = text.strip().lower()
    if key not in _MODE_ALIASES:
        raise ValidationError(
            f"unknown mode {text!r}; expected one of fullrank, lowrank, noise, cost")
    return _MODE_ALIASES[key]


def parse_grid(text: str) -> tuple[tuple[int, int], ...]:
    """Parse ``"2:1,2:2,4:3"`` into ((2, 1), (2, 2), (4, 3))."""
    cells = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            n_str, q_str = token.split(":")
            cells.append((int(n_str), int(q_str)))
        except ValueError as exc:
            raise ValidationError(f"bad grid token {token!r}; expected n:q") from exc
    if not cells:
        raise ValidationError("grid is empty")
    return tuple(cells)


def read_key_values(path) -> dict[str, str]:
    """Read a flat key=value file into a dict."""
    out = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"bad config line {raw!r}; expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment run needs."""

    mode: Mode = Mode.FULL_RANK
    d_rows: int = 40
    n_cols: int = 1280
    d_values: tuple[int, ...] = ()        # empty means full recovery (d = rows)
    tail_sq: tuple[float, ...] = (0.0,)
    seed: int = 7
    grid: tuple[tuple[int, int], ...] = ((2, 1), (2, 2), (2, 3), (4, 1))
    workers: int = 1
    trials: int = 10                      # noise mode draws per grid cell
    out_dir: Path = field(default_factory=lambda: Path("experiment_out"))
    plot: bool = True

    def __post_init__(self):
        if self.d_rows < 2 or self.n_cols < self.d_rows:
            raise ValidationError(
                f"need cols >= rows >= 2, got {self.d_rows}x{self.n_cols}")
        for n, q in self.grid:
            if n < 2 or q < 0:
                raise ValidationError(f"bad grid cell ({n}, {q})")
            if n**q > self.n_cols:
                raise ValidationError(
                    f"grid cell ({n}, {q}) needs {n**q} blocks but only "
                    f"{self.n_cols} columns exist")
        for d in self.d_values:
            if not 1 <= d <= self.d_rows:
                raise ValidationError(f"target rank {d} out of [1, {self.d_rows}]")
        for t in self.tail_sq:
            if t < 0.0:
                raise ValidationError(f"tail_sq must be >= 0, got {t}")
        if self.workers < 1 or self.trials < 1:
            raise ValidationError("workers and trials must be >= 1")

    @property
    def effective_d_values(self) -> tuple[int, ...]:
        return self.d_values if self.d_values else (self.d_rows,)


_KEYS = ("mode", "rows", "cols", "rank", "tails", "seed", "grid",
         "workers", "trials", "out", "plot")


def build_config(file_values: dict | None = None, **overrides) -> ExperimentConfig:
    """Merge config-file values and explicit overrides into a config."""
    merged: dict[str, str] = {}
    if file_values:
        for key in file_values:
            if key not in _KEYS:
                raise ValidationError(f"unknown config key {key!r}")
        merged.update(file_values)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    kwargs = {}
    if "mode" in merged:
        kwargs["mode"] = parse_mode(str(merged["mode"]))
    if "rows" in merged:
        kwargs["d_rows"] = int(merged["rows"])
    if "cols" in merged:
        kwargs["n_cols"] = int(merged["cols"])
    if "rank" in merged:
        kwargs["d_values"] = tuple(
            int(x) for x in str(merged["rank"]).split(",") if x.strip())
    if "tails" in merged:
        kwargs["tail_sq"] = tuple(
            float(x) for x in str(merged["tails"]).split(",") if x.strip())
    if "seed" in merged:
        kwargs["seed"] = int(merged["seed"])
    if "grid" in merged:
        grid = merged["grid"]
        kwargs["grid"] = grid if isinstance(grid, tuple) else parse_grid(str(grid))
    if "workers" in merged:
        kwargs["workers"] = int(merged["workers"])
    if "trials" in merged:
        kwargs["trials"] = int(merged["trials"])
    if "out" in merged:
        kwargs["out_dir"] = Path(str(merged["out"]))
    if "plot" in merged:
        raw = str(merged["plot"]).strip().lower()
        if raw not in ("true", "false", "0", "1", "yes", "no"):
            raise ValidationError(f"plot must be boolean-like, got {merged['plot']!r}")
        kwargs["plot"] = raw in ("true", "1", "yes")
    return ExperimentConfig(**kwargs)
