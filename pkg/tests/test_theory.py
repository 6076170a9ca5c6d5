"""Entropy and search-cost models.

Frozen expectations were derived by hand from the defining formula
H(p, K) = -p log2 p - (1-p) log2((1-p)/(K-1)):

- H(0.25, 4) = 0.5 + 0.75 * 2 = 2.0 exactly (all four outcomes equally
  likely, so the value must equal log2 4);
- H(0.9, 10) = 0.7859880937335123;
- H(1/K, K) = log2 K for any K (uniform over all classes).

Cost recurrences checked by hand: flat scoring of a depth-d, branching-b
tree touches b^d classes; the level walk with beam width k touches b
candidates first, then min(k, previous) * b per level. For b=3, d=3, k=2
that is 3 + 6 + 6 = 15.
"""

import math

import pytest

from emitree.theory import (
    DEFAULT_GRID_ACCURACIES,
    EntropyModel,
    check_entropy_reduction,
    cost_flat,
    cost_hierarchical,
    entropy_flat,
    entropy_hierarchical,
    entropy_single,
    standard_grid,
)


class TestEntropySingle:
    def test_quarter_over_four_is_two_bits(self):
        assert entropy_single(0.25, 4) == pytest.approx(2.0, abs=1e-15)

    def test_frozen_value_point_nine_over_ten(self):
        assert entropy_single(0.9, 10) == pytest.approx(0.7859880937335123, abs=1e-12)

    @pytest.mark.parametrize("k", [2, 3, 8, 100])
    def test_uniform_accuracy_gives_log2_k(self, k):
        assert entropy_single(1.0 / k, k) == pytest.approx(math.log2(k), abs=1e-12)

    def test_perfect_accuracy_is_zero(self):
        assert entropy_single(1.0, 5) == 0.0
        assert entropy_single(1.0, 1) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            entropy_single(0.0, 4)
        with pytest.raises(ValueError):
            entropy_single(1.1, 4)
        with pytest.raises(ValueError):
            entropy_single(0.5, 1)  # K=1 only admits p=1
        with pytest.raises(ValueError):
            entropy_single(0.5, 0)

    def test_decreases_with_accuracy(self):
        values = [entropy_single(p, 10) for p in (0.2, 0.5, 0.8, 0.99)]
        assert values == sorted(values, reverse=True)


class TestModels:
    def test_uniform_model_and_flat_accuracy(self):
        model = EntropyModel.uniform(b=4, d=3, p=0.9)
        assert model.p == (0.9, 0.9, 0.9)
        assert model.flat_accuracy == pytest.approx(0.9**3, rel=1e-15)

    def test_hierarchical_entropy_sums_levels(self):
        model = EntropyModel(b=4, d=3, p=(0.9, 0.8, 0.7))
        expected = sum(entropy_single(p, 4) for p in (0.9, 0.8, 0.7))
        assert entropy_hierarchical(model) == pytest.approx(expected, rel=1e-15)

    def test_flat_entropy_uses_joint_accuracy_over_leaf_count(self):
        model = EntropyModel.uniform(b=3, d=2, p=0.8)
        expected = entropy_single(0.8 * 0.8, 9)
        assert entropy_flat(model) == pytest.approx(expected, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            EntropyModel(b=1, d=2, p=(0.9, 0.9))
        with pytest.raises(ValueError):
            EntropyModel(b=3, d=0, p=())
        with pytest.raises(ValueError):
            EntropyModel(b=3, d=2, p=(0.9,))


class TestEntropyReduction:
    def test_standard_grid_has_no_violations(self):
        report = check_entropy_reduction(standard_grid())
        assert report.violations == []
        assert len(report.cells) > 100

    def test_equality_at_uniform_guessing(self):
        # with p = 1/b per level, both sides equal d * log2(b)
        for b in (2, 4, 8):
            model = EntropyModel.uniform(b=b, d=3, p=1.0 / b)
            gap = entropy_flat(model) - entropy_hierarchical(model)
            assert abs(gap) <= 1e-12

    def test_gap_positive_away_from_uniform(self):
        model = EntropyModel.uniform(b=10, d=3, p=0.9)
        assert entropy_flat(model) - entropy_hierarchical(model) > 0.5

    def test_grid_covers_depth_one_degenerate_case(self):
        cells = check_entropy_reduction(standard_grid(b_values=(5,), d_values=(1,))).cells
        assert cells
        for cell in cells:
            # depth one means grouped and flat are the same model
            assert cell.h_grouped == pytest.approx(cell.h_flat, abs=1e-12)

    def test_accuracy_grid_respects_guessing_floor(self):
        for cell in check_entropy_reduction(standard_grid(b_values=(2,))).cells:
            assert cell.model.p[0] >= 1.0 / 2.0
        assert 0.99 in DEFAULT_GRID_ACCURACIES


class TestCosts:
    def test_flat_is_leaf_count(self):
        assert cost_flat(10, 3) == 1000
        assert cost_flat(2, 10) == 1024
        assert cost_flat(7, 1) == 7

    def test_hand_checked_recurrence(self):
        assert cost_hierarchical(3, 3, 2) == 15  # 3 + 6 + 6
        assert cost_hierarchical(10, 3, 1) == 30
        assert cost_hierarchical(2, 4, 8) == 2 + 4 + 8 + 16

    def test_beam_one_scales_linearly_with_depth(self):
        for b in (2, 5, 9):
            for d in (1, 2, 5):
                assert cost_hierarchical(b, d, 1) == b * d

    def test_wide_beam_degenerates_to_level_sums(self):
        # k at least b^(d-1) never truncates, so every level is fully scored
        b, d = 3, 4
        assert cost_hierarchical(b, d, b ** (d - 1)) == sum(b**level for level in range(1, d + 1))

    def test_hierarchical_never_exceeds_flat_when_k_modest(self):
        for b in range(2, 11):
            for d in range(1, 5):
                k = max(1, b ** (d - 1) // d)
                assert cost_hierarchical(b, d, k) <= sum(b**level for level in range(1, d + 1))

    def test_64_bit_overflow_guard(self):
        assert cost_flat(2, 62) == 2**62
        with pytest.raises(OverflowError):
            cost_flat(2, 64)
        with pytest.raises(OverflowError):
            cost_flat(10, 19)

    def test_validation(self):
        with pytest.raises(ValueError):
            cost_flat(1, 3)
        with pytest.raises(ValueError):
            cost_hierarchical(3, 0, 1)
        with pytest.raises(ValueError):
            cost_hierarchical(3, 3, 0)
