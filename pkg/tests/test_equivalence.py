import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from etchog.cipher import BlockTransform, CipherPlan, KeySet, derive_plan, encrypt, identity_plan
from etchog.equivalence import (
    EquivalenceConditionError,
    FeaturePermutation,
    apply_permutation,
    bin_permutation,
    feature_permutation,
    relabel_multiset,
    verify_equivalence,
)
from etchog.hog import HogParams, _vote_tables, extract, integer_vote_multiset

EQ_PARAMS = HogParams(grid_size=8, cell_size=8, bins=10, block_size=1, overlap=0)


def t(rotation=0, hflip=False, negate=False):
    return BlockTransform(rotation, hflip, negate)


def random_keys(rng):
    return KeySet(*(int(v) for v in rng.integers(0, 2**63, size=3)))


class TestBinPermutation:
    def test_negation_is_identity(self):
        for bins in (2, 5, 9, 10, 16):
            assert np.array_equal(bin_permutation(t(negate=True), bins), np.arange(bins))

    def test_half_turn_is_identity(self):
        assert np.array_equal(bin_permutation(t(rotation=2), 10), np.arange(10))

    def test_quarter_turn_shifts_by_half(self):
        perm = bin_permutation(t(rotation=1), 10)
        # 1-based: 1 -> 6, 5 -> 10, 6 -> 1
        assert perm[0] == 5 and perm[4] == 9 and perm[5] == 0

    def test_mirror_reverses(self):
        perm = bin_permutation(t(hflip=True), 10)
        # 1-based: 1 -> 10, 5 -> 6
        assert perm[0] == 9 and perm[4] == 5

    def test_quarter_turn_with_odd_bins_rejected(self):
        with pytest.raises(EquivalenceConditionError):
            bin_permutation(t(rotation=1), 9)

    def test_compositions_compose(self):
        for bins in (4, 10, 12):
            rot = bin_permutation(t(rotation=1), bins)
            flip = bin_permutation(t(hflip=True), bins)
            both = bin_permutation(t(rotation=1, hflip=True), bins)
            assert np.array_equal(both, flip[rot])

    def test_always_a_bijection(self):
        for rotation in range(4):
            for hflip in (False, True):
                perm = bin_permutation(t(rotation, hflip), 12)
                assert sorted(perm) == list(range(12))


class TestGradientEquivariance:
    """The theorem at gradient level, exhaustively over all 8-bit gradients.

    Each cipher move acts on a grid's differentials as a linear map of
    (dx, dy); the induced vote relabeling must match bin_permutation for
    every reachable integer gradient, ties included.
    """

    MOVES = {
        "negate": (lambda dx, dy: (-dx, -dy), t(negate=True)),
        "rot90": (lambda dx, dy: (dy, -dx), t(rotation=1)),
        "rot180": (lambda dx, dy: (-dx, -dy), t(rotation=2)),
        "hflip": (lambda dx, dy: (-dx, dy), t(hflip=True)),
        "rot90+hflip": (lambda dx, dy: (-dy, -dx), t(rotation=1, hflip=True)),
    }

    @staticmethod
    def _canonical(b0, b1, w1, relabel=None):
        """Per-pixel vote as a comparable pair, relabeled when nonzero."""
        if relabel is not None:
            b0 = relabel[b0]
            b1 = relabel[b1]
        tie = w1 > 0
        lo = np.where(tie, np.minimum(b0, b1), b0)
        hi = np.where(tie, np.maximum(b0, b1), -1)
        return lo, hi

    @pytest.mark.parametrize("name", sorted(MOVES))
    @pytest.mark.parametrize("bins", [4, 10, 12])
    def test_votes_relabel_exactly(self, name, bins):
        move, transform = self.MOVES[name]
        grad = np.arange(-255, 256)
        dx, dy = np.meshgrid(grad, grad)
        relabel = bin_permutation(transform, bins)

        b0, b1, w0, w1 = _vote_tables(dx, dy, bins)
        tdx, tdy = move(dx, dy)
        tb0, tb1, tw0, tw1 = _vote_tables(tdx, tdy, bins)

        nonzero = (dx != 0) | (dy != 0)
        lo, hi = self._canonical(b0, b1, w1, relabel)
        tlo, thi = self._canonical(tb0, tb1, tw1)
        assert np.array_equal(lo[nonzero], tlo[nonzero])
        assert np.array_equal(hi[nonzero], thi[nonzero])
        assert np.array_equal(w0, tw0) and np.array_equal(w1, tw1)
        # zero gradients stay zero gradients with the conventional bin
        assert np.array_equal(tb0[~nonzero], b0[~nonzero])


class TestGridMultisetEquivariance:
    """The spec-level invariant on whole grids: transform a grid, and its
    exact vote multiset is the original one with bins relabeled."""

    @pytest.mark.parametrize("rotation", range(4))
    @pytest.mark.parametrize("hflip", [False, True])
    @pytest.mark.parametrize("negate", [False, True])
    def test_all_sixteen_moves(self, rotation, hflip, negate):
        from etchog.cipher import apply_transform, negate_block

        rng = np.random.default_rng(rotation * 4 + hflip * 2 + negate)
        grid = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
        move = t(rotation, hflip, negate)
        transformed = negate_block(apply_transform(grid, move), negate)
        params = HogParams(grid_size=8, cell_size=8, bins=10, block_size=1, overlap=0)
        base = integer_vote_multiset(grid, params)[(0, 0)]
        moved = integer_vote_multiset(transformed, params)[(0, 0)]
        assert moved == relabel_multiset(base, bin_permutation(move, 10))


class TestFeaturePermutation:
    def test_identity_plan_gives_identity(self):
        plan = identity_plan(64)
        perm = feature_permutation(plan, (64, 64), EQ_PARAMS)
        assert np.array_equal(perm.indices, np.arange(640))

    def test_two_block_swap(self):
        plan = CipherPlan((1, 0), (t(), t()))
        perm = feature_permutation(plan, (8, 16), EQ_PARAMS)
        assert perm.indices.tolist() == list(range(10, 20)) + list(range(0, 10))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_random_plans_give_bijections(self, seed):
        rng = np.random.default_rng(seed)
        plan = derive_plan(random_keys(rng), 16)
        perm = feature_permutation(plan, (32, 32), EQ_PARAMS)
        assert sorted(perm.indices.tolist()) == list(range(160))

    def test_conditions_enforced(self):
        plan = identity_plan(64)
        with pytest.raises(EquivalenceConditionError, match="block_size"):
            feature_permutation(plan, (64, 64), HogParams(grid_size=8, cell_size=8, bins=10, block_size=2, overlap=1))
        with pytest.raises(EquivalenceConditionError, match="grid size"):
            feature_permutation(plan, (64, 64), HogParams(grid_size=4, cell_size=8, bins=10))
        odd_plan = CipherPlan(tuple(range(64)), (t(rotation=1),) * 64)
        with pytest.raises(EquivalenceConditionError, match="odd bin count"):
            feature_permutation(odd_plan, (64, 64), HogParams(grid_size=8, cell_size=8, bins=9))


class TestApplyPermutation:
    def test_identity(self):
        f = np.arange(10.0)
        perm = FeaturePermutation(np.arange(10))
        assert np.array_equal(apply_permutation(f, perm), f)

    def test_permutation_then_inverse(self):
        rng = np.random.default_rng(21)
        f = rng.random(40)
        perm = FeaturePermutation(rng.permutation(40))
        assert np.array_equal(apply_permutation(apply_permutation(f, perm), perm.inverse()), f)

    def test_norm_preserved_exactly(self):
        rng = np.random.default_rng(22)
        f = rng.random(64)
        perm = FeaturePermutation(rng.permutation(64))
        assert sorted(apply_permutation(f, perm)) == sorted(f)

    @settings(max_examples=20)
    @given(st.integers(0, 2**31))
    def test_dot_product_invariant(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.random(32), rng.random(32)
        perm = FeaturePermutation(rng.permutation(32))
        pa, pb = apply_permutation(a, perm), apply_permutation(b, perm)
        assert abs(np.dot(pa, pb) - np.dot(a, b)) <= 1e-9 * max(abs(np.dot(a, b)), 1.0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            apply_permutation(np.zeros(5), FeaturePermutation(np.arange(6)))


class TestVerifyEquivalence:
    def test_constant_image_is_exact(self):
        report = verify_equivalence(np.full((64, 64), 99, dtype=np.uint8), KeySet(1, 2, 3), EQ_PARAMS)
        assert report.exact_multiset and report.max_rel_err == 0.0 and report.passed

    def test_random_images_pass(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
            report = verify_equivalence(img, random_keys(rng), EQ_PARAMS)
            assert report.exact_multiset
            assert report.max_rel_err <= 1e-9
            assert report.passed

    def test_restricted_rotations_allow_odd_bins(self):
        rng = np.random.default_rng(24)
        img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        params = HogParams(grid_size=8, cell_size=8, bins=9, block_size=1, overlap=0)
        report = verify_equivalence(img, random_keys(rng), params, quarter_turns=False)
        assert report.passed

    def test_condition_violation_is_loud(self):
        img = np.zeros((64, 64), dtype=np.uint8)
        bad = HogParams(grid_size=8, cell_size=8, bins=10, block_size=2, overlap=1)
        with pytest.raises(EquivalenceConditionError, match="equivalence conditions not met"):
            verify_equivalence(img, KeySet(1, 2, 3), bad)


def _sorted_rel_gap(a, b):
    sa, sb = np.sort(a), np.sort(b)
    scale = np.maximum(np.maximum(np.abs(sa), np.abs(sb)), 1e-300)
    return float((np.abs(sa - sb) / scale).max())


class TestNegativeControls:
    """Outside the stated conditions, no permutation relates the features.

    Comparing sorted feature values is permutation-free: if the sorted
    vectors differ materially, the encrypted feature cannot equal ANY
    reordering of the plain feature, let alone the derived one.
    """

    def test_block_grouping_breaks_equivalence(self):
        rng = np.random.default_rng(25)
        params = HogParams(grid_size=8, cell_size=8, bins=10, block_size=2, overlap=1)
        gaps = []
        for _ in range(20):
            img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
            keys = random_keys(rng)
            gaps.append(_sorted_rel_gap(extract(img, params), extract(encrypt(img, keys, 8), params)))
        assert max(gaps) > 1e-3

    def test_misaligned_grid_breaks_equivalence(self):
        # cipher blocks of 12 pixels, differencing grids of 8: grids straddle seams
        rng = np.random.default_rng(26)
        params = HogParams(grid_size=8, cell_size=8, bins=10, block_size=1, overlap=0)
        gaps = []
        for _ in range(20):
            img = rng.integers(0, 256, size=(48, 48), dtype=np.uint8)
            keys = random_keys(rng)
            gaps.append(_sorted_rel_gap(extract(img, params), extract(encrypt(img, keys, 12), params)))
        assert max(gaps) > 1e-3


class TestKernelInvariance:
    def test_linear_kernel_and_distance_survive_encryption(self):
        rng = np.random.default_rng(27)
        for _ in range(5):
            keys = random_keys(rng)
            img1 = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
            img2 = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
            f1, f2 = extract(img1, EQ_PARAMS), extract(img2, EQ_PARAMS)
            e1 = extract(encrypt(img1, keys, 8), EQ_PARAMS)
            e2 = extract(encrypt(img2, keys, 8), EQ_PARAMS)
            dot_plain, dot_enc = np.dot(f1, f2), np.dot(e1, e2)
            assert abs(dot_enc - dot_plain) <= 1e-9 * max(abs(dot_plain), 1.0)
            d_plain = np.dot(f1 - f2, f1 - f2)
            d_enc = np.dot(e1 - e2, e1 - e2)
            assert abs(d_enc - d_plain) <= 1e-9 * max(d_plain, 1.0)


def test_relabel_multiset_keeps_zero_entries_fixed():
    from collections import Counter
    from fractions import Fraction

    relabel = bin_permutation(t(rotation=1), 10)
    cell = Counter({(1, 0, Fraction(1)): 4, (3, 25, Fraction(1)): 2})
    out = relabel_multiset(cell, relabel)
    assert out[(1, 0, Fraction(1))] == 4  # weightless votes keep the conventional bin
    assert out[(int(relabel[2]) + 1, 25, Fraction(1))] == 2
