"""Column-block decomposition and the on-disk block format.

A block file is::

    bytes 0..7    magic "HSVDBLK1" (ASCII, version digit last)
    bytes 8..11   rows, unsigned 32-bit little-endian
    bytes 12..15  cols, unsigned 32-bit little-endian
    bytes 16..    rows*cols IEEE-754 binary64 little-endian values,
                  column-major

Round trips are bit-exact for every finite double, including subnormals
and signed zeros.  A block set is described by a plain-text manifest:
the row count, total column count and block count on the first three
lines, then one block-file path per line (relative to the manifest).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    BadVersionError,
    BadWidthsError,
    ManifestError,
    NonFinitePayloadError,
    TruncatedFileError,
    ValidationError,
)
from .matrix import DenseMatrix

MAGIC = b"HSVDBLK1"
_MAGIC_STEM = MAGIC[:7]
_HEADER = struct.Struct("<II")


def write_block(path, m: DenseMatrix) -> None:
    """Write one matrix to ``path`` in the block format."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(m.rows, m.cols))
        fh.write(m.tobytes())


def read_block(path) -> DenseMatrix:
    """Read one matrix from ``path``, validating the format strictly."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if len(magic) < len(MAGIC):
            raise TruncatedFileError(f"{path}: file shorter than the magic header")
        if magic != MAGIC:
            if magic[:7] == _MAGIC_STEM:
                raise BadVersionError(f"{path}: unsupported format version {magic[7:]!r}")
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedFileError(f"{path}: missing shape header")
        rows, cols = _HEADER.unpack(header)
        expected = rows * cols * 8
        payload = fh.read(expected)
        if len(payload) < expected:
            raise TruncatedFileError(
                f"{path}: payload has {len(payload)} bytes, expected {expected}")
        if fh.read(1):
            raise TruncatedFileError(f"{path}: trailing bytes after payload")
    values = np.frombuffer(payload, dtype="<f8").reshape((rows, cols), order="F")
    if not np.isfinite(values).all():
        raise NonFinitePayloadError(f"{path}: payload contains NaN or infinity")
    return DenseMatrix(values)


def peek_shape(path) -> tuple[int, int]:
    """Read (rows, cols) from a block file without loading the payload."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC) + _HEADER.size)
    if len(head) < len(MAGIC) + _HEADER.size:
        raise TruncatedFileError(f"{path}: file shorter than its header")
    if head[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {head[:len(MAGIC)]!r}")
    return _HEADER.unpack(head[len(MAGIC):])


@dataclass(frozen=True)
class Block:
    """Handle to one column block, held in memory or on disk."""

    rows: int
    width: int
    matrix: DenseMatrix | None = None
    path: Path | None = None

    def load(self) -> DenseMatrix:
        if self.matrix is not None:
            return self.matrix
        m = read_block(self.path)
        if m.shape != (self.rows, self.width):
            raise ManifestError(
                f"{self.path}: block is {m.shape}, manifest says {(self.rows, self.width)}")
        return m


class BlockSet:
    """Ordered column blocks of one matrix; immutable after construction."""

    def __init__(self, blocks: list[Block]):
        if not blocks:
            raise ValidationError("a block set needs at least one block")
        rows = blocks[0].rows
        if any(b.rows != rows for b in blocks):
            raise ValidationError("all blocks must share the same row count")
        self._blocks = tuple(blocks)
        self._widths = tuple(b.width for b in blocks)
        starts = np.concatenate([[0], np.cumsum(self._widths)])
        self._starts = tuple(int(s) for s in starts)

    @classmethod
    def from_matrices(cls, matrices) -> "BlockSet":
        return cls([Block(rows=m.rows, width=m.cols, matrix=m) for m in matrices])

    @property
    def d_rows(self) -> int:
        return self._blocks[0].rows

    @property
    def n_cols(self) -> int:
        return self._starts[-1]

    @property
    def m(self) -> int:
        return len(self._blocks)

    @property
    def block_widths(self) -> tuple[int, ...]:
        return self._widths

    def span(self, i: int) -> tuple[int, int]:
        """(first column, width) of block ``i`` within the full matrix."""
        return self._starts[i], self._widths[i]

    def load(self, i: int) -> DenseMatrix:
        return self._blocks[i].load()

    def assemble(self) -> DenseMatrix:
        """Concatenate all blocks back into the full matrix."""
        return DenseMatrix(np.concatenate(
            [self.load(i).array for i in range(self.m)], axis=1))


def partition(a: DenseMatrix, m: int, widths=None) -> BlockSet:
    """Split ``a`` into ``m`` consecutive column blocks.

    Default widths are balanced: the first ``cols % m`` blocks get
    ``ceil(cols / m)`` columns and the rest get ``floor(cols / m)``, so
    widths differ by at most one.  Explicit ``widths`` must be positive
    and sum to the column count.
    """
    if not 1 <= m <= a.cols:
        raise ValidationError(f"block count must be in [1, {a.cols}], got {m}")
    if widths is None:
        base, extra = divmod(a.cols, m)
        widths = [base + 1] * extra + [base] * (m - extra)
    else:
        widths = [int(w) for w in widths]
        if any(w <= 0 for w in widths):
            raise BadWidthsError(f"widths must be positive, got {widths}")
        if sum(widths) != a.cols:
            raise BadWidthsError(
                f"widths sum to {sum(widths)}, expected {a.cols}")
    mats, start = [], 0
    for w in widths:
        mats.append(DenseMatrix(a.array[:, start:start + w]))
        start += w
    return BlockSet.from_matrices(mats)


def write_blockset(bs: BlockSet, directory, stem: str = "block") -> Path:
    """Write every block plus a manifest into ``directory``.

    Returns the manifest path.  Block files are named
    ``{stem}_{index:05d}.hsvdblk`` and listed in order.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(bs.m):
        name = f"{stem}_{i:05d}.hsvdblk"
        write_block(directory / name, bs.load(i))
        names.append(name)
    manifest = directory / "manifest.txt"
    lines = [str(bs.d_rows), str(bs.n_cols), str(bs.m)] + names
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def read_manifest(path) -> BlockSet:
    """Open a manifest and return a lazily loaded block set."""
    path = Path(path)
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()
             if ln.strip()]
    if len(lines) < 4:
        raise ManifestError(f"{path}: expected at least 4 lines, got {len(lines)}")
    try:
        d_rows, n_cols, m = (int(x) for x in lines[:3])
    except ValueError as exc:
        raise ManifestError(f"{path}: malformed header: {exc}") from exc
    names = lines[3:]
    if len(names) != m:
        raise ManifestError(f"{path}: lists {len(names)} blocks, header says {m}")
    blocks = []
    for name in names:
        block_path = path.parent / name
        rows, cols = peek_shape(block_path)
        if rows != d_rows:
            raise ManifestError(f"{block_path}: has {rows} rows, manifest says {d_rows}")
        blocks.append(Block(rows=rows, width=cols, path=block_path))
    bs = BlockSet(blocks)
    if bs.n_cols != n_cols:
        raise ManifestError(
            f"{path}: block widths sum to {bs.n_cols}, header says {n_cols}")
    return bs
