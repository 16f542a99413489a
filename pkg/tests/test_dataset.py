"""Mask synthesis, mode classification and split proposal."""

import itertools

import numpy as np
import pytest

from smartbrush.dataset import (
    LabeledMap,
    MaskMode,
    SplitScore,
    classify_mask_mode,
    generate_random_mask,
    material_intersection,
    propose_split,
    split_score,
)

from conftest import build_test_map


def mask_with_coverage(side, set_pixels):
    mask = np.zeros((side, side), np.float32)
    mask.reshape(-1)[:set_pixels] = 1.0
    return mask


class TestClassify:
    def test_quarter_coverage_is_medium(self):
        mask = mask_with_coverage(20, 100)  # 100/400 = 0.25
        assert float(mask.mean()) == 0.25
        assert classify_mask_mode(mask) is MaskMode.MEDIUM

    def test_full_coverage_is_complete(self):
        assert classify_mask_mode(np.ones((16, 16))) is MaskMode.COMPLETE

    def test_exact_boundary_is_hard(self):
        mask = mask_with_coverage(20, 120)  # 120/400 = 0.30 exactly
        assert float(np.mean(mask != 0)) == 0.30
        assert classify_mask_mode(mask) is MaskMode.HARD

    def test_just_below_full_is_hard(self):
        mask = np.ones((16, 16), np.float32)
        mask[0, 0] = 0.0
        assert classify_mask_mode(mask) is MaskMode.HARD


class TestGenerateRandomMask:
    def test_complete_is_all_ones(self):
        mask = generate_random_mask(MaskMode.COMPLETE, seed=42, side=32)
        assert mask.shape == (32, 32)
        assert (mask == 1.0).all()

    def test_deterministic_for_seed(self):
        a = generate_random_mask(MaskMode.MEDIUM, seed=7, side=64)
        b = generate_random_mask(MaskMode.MEDIUM, seed=7, side=64)
        assert np.array_equal(a, b)

    def test_hard_mask_classifies_hard(self):
        mask = generate_random_mask(MaskMode.HARD, seed=3, side=64)
        assert classify_mask_mode(mask) is MaskMode.HARD

    def test_side_minimum(self):
        with pytest.raises(ValueError, match="side"):
            generate_random_mask(MaskMode.MEDIUM, seed=0, side=4)

    @pytest.mark.parametrize("mode", [MaskMode.MEDIUM, MaskMode.HARD])
    @pytest.mark.parametrize("side", [16, 32, 64])
    def test_coverage_in_mode_range_many_seeds(self, mode, side):
        # 1000 seeds total across the parametrized grid
        for seed in range(167):
            mask = generate_random_mask(mode, seed=seed, side=side)
            assert classify_mask_mode(mask) is mode, (mode, side, seed)
            assert set(np.unique(mask)) <= {0.0, 1.0}


class TestMaterialIntersection:
    def test_identical_sets(self):
        a = build_test_map(tile_size=16, seed=0)
        b = build_test_map(tile_size=16, seed=1)
        assert material_intersection(a, b) == 1.0

    def test_disjoint_sets(self):
        ids = list(__import__("conftest").MATERIAL_COLORS)
        a = build_test_map(tile_size=16, seed=0, material_ids=ids)
        b = build_test_map(tile_size=16, seed=0, material_ids=ids)
        for mat in list(b.materials):
            mat.id = mat.id + "_other"
        b.materials._materials = {m.id: m for m in b.materials}
        assert material_intersection(a, b) == 0.0

    def test_jaccard_enumeration(self):
        # {a,b,c} vs {b,c,d}: |{b,c}| / |{a,b,c,d}| = 0.5 by enumeration
        inter = len({"a", "b", "c"} & {"b", "c", "d"})
        union = len({"a", "b", "c"} | {"b", "c", "d"})
        assert inter / union == 0.5

        class FakeMap:
            def __init__(self, ids):
                self.materials = type("MS", (), {"ids": ids})()

        assert material_intersection(FakeMap(["a", "b", "c"]), FakeMap(["b", "c", "d"])) == 0.5

    def test_symmetry(self):
        class FakeMap:
            def __init__(self, ids):
                self.materials = type("MS", (), {"ids": ids})()

        m1, m2 = FakeMap(["a", "b"]), FakeMap(["b", "c", "d"])
        assert material_intersection(m1, m2) == material_intersection(m2, m1)

    def test_both_empty_rejected(self):
        class FakeMap:
            def __init__(self):
                self.materials = type("MS", (), {"ids": []})()

        with pytest.raises(ValueError):
            material_intersection(FakeMap(), FakeMap())


class TestSplitScore:
    def test_all_zero(self):
        assert split_score(0, 0, 0).s == 0.0

    def test_arithmetic_mean(self):
        assert split_score(3.0, 6.0, 0.6).s == pytest.approx(3.2)

    def test_direct_arithmetic(self):
        assert split_score(1.47, 10.04, 0.5).s == pytest.approx((1.47 + 10.04 + 0.5) / 3)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            split_score(-1.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            split_score(0.0, 0.0, 1.5)


def fake_labeled(map_id, category):
    return LabeledMap(map_id=map_id, category=category, game_map=None)


def brute_force_split(ids, scores, per_category):
    """Independent oracle: sort pairs ascending by (s, pair), greedily take
    disjoint pairs, send the larger id of each to test."""
    ordered = sorted(scores.items(), key=lambda kv: (kv[1].s, kv[0]))
    used, test = set(), []
    picked = 0
    for (a, b), _ in ordered:
        if picked >= per_category:
            break
        if a in used or b in used:
            continue
        used.update((a, b))
        test.append(b)
        picked += 1
    return test


class TestProposeSplit:
    def test_two_maps_forced(self):
        maps = [fake_labeled("A", "cat"), fake_labeled("B", "cat")]
        scores = {("A", "B"): SplitScore(1.0, 1.0, 0.5)}
        result = propose_split(maps, per_category=1, scores=scores)
        assert result.test == ["B"]
        assert result.train == ["A"]

    def test_lowest_score_pair_selected(self):
        maps = [fake_labeled(i, "cat") for i in "ABCD"]
        scores = {
            ("A", "B"): SplitScore(1.0, 1.0, 0.0),  # s = 2/3, lowest
            ("A", "C"): SplitScore(5.0, 5.0, 0.0),
            ("A", "D"): SplitScore(9.0, 3.0, 0.0),
            ("B", "C"): SplitScore(4.0, 4.0, 0.0),
            ("B", "D"): SplitScore(8.0, 2.0, 0.0),
            ("C", "D"): SplitScore(7.0, 7.0, 0.0),
        }
        result = propose_split(maps, per_category=1, scores=scores)
        assert result.test == ["B"]
        assert set(result.train) == {"A", "C", "D"}

    def test_three_per_category_moves_three(self):
        maps, scores = [], {}
        rng = np.random.default_rng(11)
        for cat in ("urban", "winter", "natural"):
            ids = [f"{cat}{i}" for i in range(6)]
            maps.extend(fake_labeled(i, cat) for i in ids)
            for a, b in itertools.combinations(ids, 2):
                scores[(a, b)] = SplitScore(rng.uniform(0, 10), rng.uniform(0, 10), 0.5)
        result = propose_split(maps, per_category=3, scores=scores)
        assert len(result.test) == 9
        for cat in ("urban", "winter", "natural"):
            assert sum(t.startswith(cat) for t in result.test) == 3

    def test_partition_property(self):
        maps, scores = [], {}
        rng = np.random.default_rng(2)
        ids = [f"m{i}" for i in range(8)]
        maps = [fake_labeled(i, "cat") for i in ids]
        for a, b in itertools.combinations(ids, 2):
            scores[(a, b)] = SplitScore(rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 1))
        result = propose_split(maps, per_category=2, scores=scores)
        assert sorted(result.train + result.test) == sorted(ids)
        assert not set(result.train) & set(result.test)

    @pytest.mark.parametrize("per_category", [1, 2])
    def test_matches_bruteforce_12_maps(self, per_category):
        rng = np.random.default_rng(31)
        maps, scores = [], {}
        for cat in ("urban", "winter", "natural"):
            ids = [f"{cat}{i}" for i in range(4)]
            maps.extend(fake_labeled(i, cat) for i in ids)
            for a, b in itertools.combinations(ids, 2):
                scores[(a, b)] = SplitScore(rng.uniform(0, 12), rng.uniform(0, 12), rng.uniform(0, 1))
        result = propose_split(maps, per_category=per_category, scores=scores)
        again = propose_split(maps, per_category=per_category, scores=scores)
        assert result.test == again.test and result.train == again.train

        expected_test = []
        for cat in ("natural", "urban", "winter"):  # category-sorted order
            cat_scores = {p: s for p, s in scores.items() if p[0].startswith(cat)}
            expected_test.extend(brute_force_split(None, cat_scores, per_category))
        assert sorted(result.test) == sorted(expected_test)

    def test_small_category_rejected(self):
        maps = [fake_labeled("A", "cat")]
        with pytest.raises(ValueError, match="fewer than 2"):
            propose_split(maps, per_category=1, scores={})
