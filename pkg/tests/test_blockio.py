import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsvd import (
    BadMagicError,
    BadVersionError,
    BadWidthsError,
    BlockSet,
    DenseMatrix,
    ManifestError,
    NonFinitePayloadError,
    TruncatedFileError,
    ValidationError,
    partition,
    read_block,
    read_manifest,
    write_block,
    write_blockset,
)

from conftest import random_matrix


class TestFormat:
    def test_exact_layout(self, tmp_path):
        # 16-byte header + 4 doubles = 48 bytes, column-major payload
        path = tmp_path / "m.hsvdblk"
        write_block(path, DenseMatrix([[1.0, 2.0], [3.0, 4.0]]))
        raw = path.read_bytes()
        assert len(raw) == 48
        assert raw[:8] == b"HSVDBLK1"
        assert struct.unpack("<II", raw[8:16]) == (2, 2)
        assert np.frombuffer(raw[16:], dtype="<f8").tolist() == [1.0, 3.0, 2.0, 4.0]

    def test_round_trip(self, tmp_path, rng):
        path = tmp_path / "m.hsvdblk"
        m = random_matrix(rng, 5, 7)
        write_block(path, m)
        assert read_block(path).tobytes() == m.tobytes()

    def test_round_trip_special_values(self, tmp_path):
        path = tmp_path / "m.hsvdblk"
        m = DenseMatrix([[0.0, -0.0], [5e-324, -2.2250738585072014e-308]])
        write_block(path, m)
        assert read_block(path).tobytes() == m.tobytes()

    @settings(max_examples=200, deadline=None)
    @given(st.lists(
        st.floats(allow_nan=False, allow_infinity=False, width=64,
                  allow_subnormal=True),
        min_size=6, max_size=6))
    def test_round_trip_property(self, tmp_path_factory, values):
        path = tmp_path_factory.mktemp("fmt") / "m.hsvdblk"
        m = DenseMatrix(np.array(values).reshape(2, 3))
        write_block(path, m)
        assert read_block(path).tobytes() == m.tobytes()

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_block(tmp_path / "absent.hsvdblk")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.hsvdblk"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 40)
        with pytest.raises(BadMagicError):
            read_block(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "m.hsvdblk"
        write_block(path, DenseMatrix(np.eye(2)))
        raw = bytearray(path.read_bytes())
        raw[7] = ord("9")
        path.write_bytes(bytes(raw))
        with pytest.raises(BadVersionError):
            read_block(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "m.hsvdblk"
        write_block(path, DenseMatrix(np.eye(2)))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(TruncatedFileError):
            read_block(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "m.hsvdblk"
        path.write_bytes(b"HSVDBLK1\x02\x00")
        with pytest.raises(TruncatedFileError):
            read_block(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "m.hsvdblk"
        write_block(path, DenseMatrix(np.eye(2)))
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(TruncatedFileError):
            read_block(path)

    def test_nonfinite_payload(self, tmp_path):
        path = tmp_path / "m.hsvdblk"
        payload = struct.pack("<d", float("nan")) * 4
        path.write_bytes(b"HSVDBLK1" + struct.pack("<II", 2, 2) + payload)
        with pytest.raises(NonFinitePayloadError):
            read_block(path)


class TestPartition:
    def test_even_split(self, rng):
        bs = partition(random_matrix(rng, 3, 10), 2)
        assert bs.block_widths == (5, 5)

    def test_balanced_remainder(self, rng):
        bs = partition(random_matrix(rng, 3, 10), 4)
        assert bs.block_widths == (3, 3, 2, 2)

    def test_round_trip_reassembly(self, rng):
        a = random_matrix(rng, 4, 11)
        for m in range(1, 12):
            bs = partition(a, m)
            assert bs.assemble().tobytes() == a.tobytes()

    @settings(max_examples=100, deadline=None)
    @given(cols=st.integers(1, 30), m=st.integers(1, 30))
    def test_widths_property(self, cols, m):
        if m > cols:
            return
        a = DenseMatrix(np.arange(2.0 * cols).reshape(2, cols))
        bs = partition(a, m)
        assert sum(bs.block_widths) == cols
        assert max(bs.block_widths) - min(bs.block_widths) <= 1
        assert bs.assemble().tobytes() == a.tobytes()

    def test_explicit_widths(self, rng):
        a = random_matrix(rng, 3, 10)
        bs = partition(a, 3, widths=[2, 3, 5])
        assert bs.block_widths == (2, 3, 5)
        assert bs.assemble().tobytes() == a.tobytes()

    def test_bad_widths(self, rng):
        a = random_matrix(rng, 3, 10)
        with pytest.raises(BadWidthsError):
            partition(a, 3, widths=[2, 3, 4])
        with pytest.raises(BadWidthsError):
            partition(a, 3, widths=[0, 5, 5])
        with pytest.raises(ValidationError):
            partition(a, 11)

    def test_spans(self, rng):
        bs = partition(random_matrix(rng, 3, 10), 4)
        assert [bs.span(i) for i in range(4)] == [(0, 3), (3, 3), (6, 2), (8, 2)]


class TestManifest:
    def test_round_trip(self, tmp_path, rng):
        a = random_matrix(rng, 4, 10)
        bs = partition(a, 3)
        manifest = write_blockset(bs, tmp_path)
        loaded = read_manifest(manifest)
        assert loaded.d_rows == 4
        assert loaded.n_cols == 10
        assert loaded.block_widths == bs.block_widths
        assert loaded.assemble().tobytes() == a.tobytes()

    def test_manifest_is_plain_text(self, tmp_path, rng):
        bs = partition(random_matrix(rng, 4, 10), 2)
        manifest = write_blockset(bs, tmp_path)
        lines = manifest.read_text(encoding="utf-8").splitlines()
        assert lines[:3] == ["4", "10", "2"]
        assert len(lines) == 5

    def test_header_mismatch_detected(self, tmp_path, rng):
        bs = partition(random_matrix(rng, 4, 10), 2)
        manifest = write_blockset(bs, tmp_path)
        lines = manifest.read_text(encoding="utf-8").splitlines()
        lines[1] = "11"
        manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(ManifestError):
            read_manifest(manifest)

    def test_row_mismatch_detected(self, tmp_path, rng):
        bs = partition(random_matrix(rng, 4, 10), 2)
        manifest = write_blockset(bs, tmp_path)
        write_block(tmp_path / "block_00000.hsvdblk", random_matrix(rng, 3, 5))
        with pytest.raises(ManifestError):
            read_manifest(manifest)

    def test_blockset_requires_matching_rows(self, rng):
        with pytest.raises(ValidationError):
            BlockSet.from_matrices([random_matrix(rng, 3, 2),
                                    random_matrix(rng, 4, 2)])
