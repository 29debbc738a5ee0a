import math

import numpy as np
import pytest

from hsvd import (
    BlockSet,
    DenseMatrix,
    MergePlan,
    PlanMismatchError,
    RowMismatchError,
    ShapeMismatchError,
    SingularValueUnderflowError,
    ValidationError,
    hierarchical_svd,
    load_partial,
    merge_group,
    partition,
    recover_right_vectors,
    save_partial,
    scaled_left,
    svd_reduced,
    truncate,
)
from hsvd.merge import PartialSVD, SVDFactors

from conftest import random_matrix, rank_limited_matrix


def block_partials(a, m, d):
    bs = partition(a, m)
    parts = []
    for i in range(bs.m):
        f = truncate(svd_reduced(bs.load(i)), d)
        f = SVDFactors(u=f.u, sigma=f.sigma, v=None, rank_hint=f.rank_hint)
        parts.append(PartialSVD(factors=f, span=bs.span(i)))
    return bs, parts


class TestMergeGroup:
    def test_single_part_is_identity_up_to_sign(self, rng):
        a = random_matrix(rng, 5, 9)
        _, parts = block_partials(a, 1, 3)
        merged = merge_group(parts, 3)
        np.testing.assert_allclose(merged.factors.sigma, parts[0].factors.sigma,
                                   rtol=1e-12)
        # sign-normalized factors of the same subspace agree column-wise
        np.testing.assert_allclose(np.abs(merged.factors.u.array),
                                   np.abs(parts[0].factors.u.array), atol=1e-10)
        assert merged.span == parts[0].span

    def test_two_rank_one_blocks_share_left_vector(self):
        # blocks x*y1^T and x*y2^T: merged sigma_1^2 = sigma(A1)^2 + sigma(A2)^2
        x = np.array([1.0, 2.0, 2.0])
        y1 = np.array([3.0, 4.0])          # |y1| = 5,  sigma(A1) = 15
        y2 = np.array([5.0, 12.0])         # |y2| = 13, sigma(A2) = 39
        a = DenseMatrix(np.concatenate([np.outer(x, y1), np.outer(x, y2)], axis=1))
        _, parts = block_partials(a, 2, 1)
        assert parts[0].factors.sigma[0] == pytest.approx(15.0, rel=1e-13)
        assert parts[1].factors.sigma[0] == pytest.approx(39.0, rel=1e-13)
        merged = merge_group(parts, 1)
        assert merged.factors.sigma[0] == pytest.approx(3.0 * math.sqrt(194.0),
                                                        rel=1e-13)
        np.testing.assert_allclose(merged.factors.u.array[:, 0], x / 3.0,
                                   atol=1e-13)

    def test_exact_rank_merge_matches_direct(self, rng):
        a = rank_limited_matrix(8, 40, rank=3, seed=11)
        direct = svd_reduced(a)
        _, parts = block_partials(a, 4, 3)
        merged = merge_group(parts, 3)
        np.testing.assert_allclose(merged.factors.sigma, direct.sigma[:3],
                                   rtol=1e-10)

    def test_row_mismatch(self, rng):
        _, p1 = block_partials(random_matrix(rng, 4, 6), 1, 2)
        _, p2 = block_partials(random_matrix(rng, 5, 6), 1, 2)
        with pytest.raises(RowMismatchError):
            merge_group([p1[0], p2[0]], 2)

    def test_non_contiguous_spans_rejected(self, rng):
        _, parts = block_partials(random_matrix(rng, 4, 10), 2, 2)
        with pytest.raises(ValidationError):
            merge_group([parts[1], parts[0]], 2)

    def test_perturbation_shape_checked(self, rng):
        _, parts = block_partials(random_matrix(rng, 4, 10), 2, 2)
        with pytest.raises(ShapeMismatchError):
            merge_group(parts, 2, perturbation=np.zeros((4, 99)))

    def test_perturbation_applied(self, rng):
        a = random_matrix(rng, 4, 10)
        _, parts = block_partials(a, 2, 2)
        clean = merge_group(parts, 2)
        width = sum(min(2, p.factors.rank) for p in parts)
        psi = np.full((4, width), 0.5)
        noisy = merge_group(parts, 2, perturbation=psi)
        assert not np.allclose(clean.factors.sigma, noisy.factors.sigma)


class TestHierarchicalSvd:
    def test_degenerate_plan_equals_direct(self, rng):
        a = random_matrix(rng, 6, 12)
        bs = partition(a, 1)
        root = hierarchical_svd(bs, MergePlan(q=0, n=2, d=4, m=1))
        direct = truncate(svd_reduced(a), 4)
        np.testing.assert_array_equal(root.factors.sigma, direct.sigma)
        assert root.factors.u.tobytes() == direct.u.tobytes()
        assert root.span == (0, 12)

    def test_full_rank_recovery(self, rng):
        a = rank_limited_matrix(10, 160, rank=10, seed=3)
        direct = svd_reduced(a)
        bs = partition(a, 16)
        root = hierarchical_svd(bs, MergePlan(q=4, n=2, d=10, m=16))
        np.testing.assert_allclose(root.factors.sigma, direct.sigma, rtol=1e-10)

    def test_levels_collapse_when_tree_finishes_early(self, rng):
        a = rank_limited_matrix(6, 24, rank=4, seed=5)
        bs = partition(a, 4)
        deep = hierarchical_svd(bs, MergePlan(q=9, n=2, d=4, m=4))
        exact = hierarchical_svd(bs, MergePlan(q=2, n=2, d=4, m=4))
        assert deep.factors.u.tobytes() == exact.factors.u.tobytes()

    def test_remainder_merged_when_q_too_small(self, rng):
        a = rank_limited_matrix(6, 24, rank=4, seed=6)
        bs = partition(a, 8)
        root = hierarchical_svd(bs, MergePlan(q=1, n=2, d=4, m=8))
        direct = svd_reduced(a)
        np.testing.assert_allclose(root.factors.sigma, direct.sigma[:4], rtol=1e-9)

    def test_ragged_blocks_narrower_than_rank(self, rng):
        # width-2 blocks with d=4 simply contribute fewer columns
        a = rank_limited_matrix(8, 16, rank=4, seed=8)
        bs = partition(a, 8)
        root = hierarchical_svd(bs, MergePlan(q=3, n=2, d=4, m=8))
        direct = svd_reduced(a)
        np.testing.assert_allclose(root.factors.sigma, direct.sigma[:4], rtol=1e-9)

    def test_non_power_block_count(self, rng):
        a = rank_limited_matrix(6, 33, rank=4, seed=9)
        bs = partition(a, 5)
        root = hierarchical_svd(bs, MergePlan(q=3, n=2, d=4, m=5))
        direct = svd_reduced(a)
        np.testing.assert_allclose(root.factors.sigma, direct.sigma[:4], rtol=1e-9)

    def test_all_zero_block_tolerated(self, rng):
        left = rank_limited_matrix(6, 12, rank=3, seed=10).array
        zero = np.zeros((6, 12))
        right = rank_limited_matrix(6, 12, rank=3, seed=12).array
        a = DenseMatrix(np.concatenate([left, zero, right], axis=1))
        direct = svd_reduced(a)
        bs = partition(a, 3)
        root = hierarchical_svd(bs, MergePlan(q=1, n=3, d=6, m=3))
        np.testing.assert_allclose(root.factors.sigma, direct.sigma[:6], rtol=1e-9)

    def test_plan_mismatch(self, rng):
        bs = partition(random_matrix(rng, 4, 12), 3)
        with pytest.raises(PlanMismatchError):
            hierarchical_svd(bs, MergePlan(q=1, n=2, d=2, m=4))

    def test_worker_count_validated(self, rng):
        bs = partition(random_matrix(rng, 4, 12), 3)
        with pytest.raises(ValidationError):
            hierarchical_svd(bs, MergePlan(q=2, n=2, d=2, m=3), workers=0)

    def test_workers_bitwise_identical(self, rng):
        a = random_matrix(rng, 12, 96)
        bs = partition(a, 8)
        plan = MergePlan(q=3, n=2, d=6, m=8)
        outputs = [hierarchical_svd(bs, plan, workers=w) for w in (1, 2, 8)]
        for other in outputs[1:]:
            assert other.factors.u.tobytes() == outputs[0].factors.u.tobytes()
            assert other.factors.sigma.tobytes() == outputs[0].factors.sigma.tobytes()

    def test_file_backed_blocks(self, tmp_path, rng):
        from hsvd import read_manifest, write_blockset
        a = random_matrix(rng, 6, 24)
        manifest = write_blockset(partition(a, 4), tmp_path)
        bs = read_manifest(manifest)
        root = hierarchical_svd(bs, MergePlan(q=2, n=2, d=6, m=4))
        in_mem = hierarchical_svd(partition(a, 4), MergePlan(q=2, n=2, d=6, m=4))
        assert root.factors.u.tobytes() == in_mem.factors.u.tobytes()

    def test_plan_validation(self):
        with pytest.raises(ValidationError):
            MergePlan(q=-1, n=2, d=1, m=1)
        with pytest.raises(ValidationError):
            MergePlan(q=1, n=1, d=1, m=1)
        with pytest.raises(ValidationError):
            MergePlan(q=1, n=2, d=0, m=1)


class TestRightVectors:
    def test_identity(self):
        a = DenseMatrix(np.eye(3))
        bs = partition(a, 1)
        root = hierarchical_svd(bs, MergePlan(q=0, n=2, d=3, m=1))
        v = recover_right_vectors(bs, root)
        np.testing.assert_allclose(v.array, np.eye(3), atol=1e-14)

    def test_matches_direct_right_vectors(self, rng):
        a = rank_limited_matrix(6, 40, rank=4, seed=17)
        bs = partition(a, 4)
        root = hierarchical_svd(bs, MergePlan(q=2, n=2, d=4, m=4))
        v = recover_right_vectors(bs, root)
        direct = svd_reduced(a)
        # per-column sign alignment against the direct factorization
        for j in range(4):
            col, ref = v.array[:, j], direct.v.array[:, j]
            if np.dot(col, ref) < 0:
                col = -col
            np.testing.assert_allclose(col, ref, atol=1e-9)

    def test_unit_norm_columns(self, rng):
        a = rank_limited_matrix(5, 30, rank=3, seed=23)
        bs = partition(a, 3)
        root = hierarchical_svd(bs, MergePlan(q=1, n=3, d=3, m=3))
        v = recover_right_vectors(bs, root)
        norms = np.linalg.norm(v.array, axis=0)
        np.testing.assert_allclose(norms, 1.0, atol=1e-8)

    def test_underflow_rejected(self, rng):
        # target rank above the true rank leaves a zero singular value
        a = rank_limited_matrix(5, 30, rank=2, seed=29)
        bs = partition(a, 3)
        root = hierarchical_svd(bs, MergePlan(q=1, n=3, d=4, m=3))
        with pytest.raises(SingularValueUnderflowError):
            recover_right_vectors(bs, root)

    def test_parallel_matches_serial(self, rng):
        a = random_matrix(rng, 6, 36)
        bs = partition(a, 6)
        root = hierarchical_svd(bs, MergePlan(q=1, n=6, d=3, m=6))
        v1 = recover_right_vectors(bs, root, workers=1)
        v4 = recover_right_vectors(bs, root, workers=4)
        assert v1.tobytes() == v4.tobytes()


class TestPersistence:
    def test_round_trip_bitwise(self, tmp_path, rng):
        a = random_matrix(rng, 7, 21)
        bs = partition(a, 3)
        root = hierarchical_svd(bs, MergePlan(q=1, n=3, d=5, m=3))
        save_partial(root, tmp_path)
        loaded = load_partial(tmp_path)
        assert loaded.factors.u.tobytes() == root.factors.u.tobytes()
        np.testing.assert_array_equal(loaded.factors.sigma, root.factors.sigma)
        assert loaded.span == root.span
        assert loaded.factors.rank_hint == root.factors.rank_hint

    def test_rerun_after_reload_consistent(self, tmp_path, rng):
        # a stored result merges with fresh blocks like an in-memory one
        a = random_matrix(rng, 6, 30)
        left, right = DenseMatrix(a.array[:, :15]), DenseMatrix(a.array[:, 15:])
        _, parts_left = block_partials(left, 1, 6)
        save_partial(parts_left[0], tmp_path)
        reloaded = load_partial(tmp_path)
        f = truncate(svd_reduced(right), 6)
        part_right = PartialSVD(
            factors=SVDFactors(u=f.u, sigma=f.sigma, v=None, rank_hint=f.rank_hint),
            span=(15, 15))
        merged = merge_group([reloaded, part_right], 6)
        direct = svd_reduced(a)
        np.testing.assert_allclose(merged.factors.sigma, direct.sigma[:6],
                                   rtol=1e-10)
