import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_pair
from detbal.action import (
    ActionCache,
    StaleCacheError,
    action,
    action_delta,
    balance_residuals,
    fixed_point_residual,
)
from detbal.controls import metropolis_transition
from detbal.grid import TransitionMatrix, column_normalize


class TestActionHandValues:
    def test_symmetric_pair_balances(self):
        W = np.array([[0.0, 1.0], [1.0, 0.0]])
        result = action(W, np.array([0.5, 0.5]))
        assert result.s == 0.0
        assert result.k_terms == 1
        assert not result.degenerate

    def test_one_way_pair_is_maximal(self):
        W = np.array([[0.0, 1.0], [0.0, 0.0]])
        result = action(W, np.array([0.5, 0.5]))
        assert result.s == 1.0
        assert result.k_terms == 1

    def test_hand_value_036(self):
        W = np.array([[0.0, 2.0], [1.0, 0.0]])
        result = action(W, np.array([1.0, 2.0]) / 3.0)
        assert result.s == pytest.approx(0.36, abs=1e-12)
        assert result.k_terms == 1

    def test_accepts_transition_matrix_wrapper(self):
        W = TransitionMatrix(np.array([[0.0, 2.0], [1.0, 0.0]]))
        assert action(W, np.array([1.0, 2.0])).s == pytest.approx(0.36, abs=1e-12)

    def test_all_zero_is_degenerate(self):
        result = action(np.zeros((3, 3)), np.ones(3))
        assert result.s == 0.0
        assert result.k_terms == 0
        assert result.degenerate

    def test_zero_weights_degenerate(self, rng):
        W = rng.random((4, 4))
        result = action(W, np.zeros(4))
        assert result.degenerate and result.s == 0.0

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="dimension mismatch"):
            action(rng.random((3, 3)), rng.random(4))

    def test_diagonal_never_contributes(self):
        # purely diagonal mass: no x < y pair carries anything
        result = action(np.diag([3.0, 4.0]), np.array([0.2, 0.8]))
        assert result.degenerate


class TestActionProperties:
    @settings(max_examples=80, deadline=None)
    @given(
        arrays(float, (6, 6), elements=st.floats(0, 10)),
        arrays(float, (6,), elements=st.floats(0, 10)),
    )
    def test_bounds(self, matrix, weights):
        result = action(matrix, weights)
        assert 0.0 <= result.s <= 1.0
        assert result.k_terms <= 6 * 5 // 2

    def test_scale_invariance(self, rng):
        for _ in range(50):
            matrix, weights = random_pair(rng, 9, sparsity=0.2)
            base = action(matrix, weights).s
            for lam in (1e-6, 1.0, 1e6):
                scaled = action(matrix, lam * weights).s
                assert abs(scaled - base) <= 1e-14

    def test_normalization_invariance(self, rng):
        for _ in range(50):
            matrix, weights = random_pair(rng, 9)
            normalized, sums, _ = column_normalize(TransitionMatrix(matrix))
            direct = action(matrix, weights).s
            renormed = action(normalized, sums * weights).s
            assert abs(direct - renormed) <= 1e-12

    def test_zero_iff_balanced(self, rng):
        # exact floating-point balance: symmetric matrix, equal weights
        matrix = rng.random((6, 6))
        matrix = matrix + matrix.T
        assert action(matrix, np.full(6, 1 / 6)).s == 0.0
        # perturbing one weight breaks at least one pair
        weights = np.full(6, 1 / 6)
        weights[2] *= 1.01
        assert action(matrix, weights).s > 0.0

    def test_metropolis_matrix_balances_to_rounding(self, rng):
        base = rng.random(12) + 0.05
        base /= base.sum()
        result = action(metropolis_transition(base), base)
        assert result.s <= 1e-25
        assert result.k_terms == 12 * 11 // 2


class TestBalanceResiduals:
    def test_hand_case(self):
        W = np.array([[0.0, 2.0], [1.0, 0.0]])
        residuals = balance_residuals(W, np.array([1.0, 2.0]) / 3.0)
        assert residuals[0, 1] == pytest.approx(0.6, abs=1e-12)
        assert residuals[1, 0] == pytest.approx(-0.6, abs=1e-12)

    def test_balanced_inputs_are_zero(self, rng):
        base = rng.random(8) + 0.1
        residuals = balance_residuals(metropolis_transition(base), base)
        np.testing.assert_allclose(residuals, 0.0, atol=1e-15)

    def test_zero_weights_all_zero(self, rng):
        residuals = balance_residuals(rng.random((5, 5)), np.zeros(5))
        np.testing.assert_array_equal(residuals, np.zeros((5, 5)))

    def test_antisymmetry(self, rng):
        matrix, weights = random_pair(rng, 7, sparsity=0.3)
        residuals = balance_residuals(matrix, weights)
        np.testing.assert_allclose(residuals, -residuals.T, atol=1e-15)


class TestFixedPointResidual:
    def test_identity_matrix(self, rng):
        weights = rng.random(6)
        weights /= weights.sum()
        assert fixed_point_residual(np.eye(6), weights) == 0.0

    def test_exact_balance_pair_is_fixed_point(self, rng):
        base = rng.random(10) + 0.2
        base /= base.sum()
        matrix = metropolis_transition(base)
        normalized, sums, _ = column_normalize(matrix)
        reweighted = sums * base
        reweighted /= reweighted.sum()
        assert fixed_point_residual(normalized, reweighted) <= 1e-12

    def test_matches_direct_oracle(self, rng):
        matrix = rng.random((8, 8))
        matrix /= matrix.sum(axis=0)
        weights = rng.random(8)
        weights /= weights.sum()
        # independent elementwise oracle
        expected = 0.0
        for y in range(8):
            image = sum(matrix[y, x] * weights[x] for x in range(8))
            expected = max(expected, abs(weights[y] - image))
        assert fixed_point_residual(matrix, weights) == pytest.approx(expected, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fixed_point_residual(np.eye(3), np.ones(2))


class TestActionDelta:
    def test_noop_edit_keeps_value(self, rng):
        matrix, weights = random_pair(rng, 8)
        cache = ActionCache(matrix, weights)
        unchanged = action_delta(matrix, weights, 3, weights[3], cache)
        assert unchanged.s == cache.value.s

    def test_matches_full_recomputation(self, rng):
        for _ in range(200):
            matrix, weights = random_pair(rng, 8, sparsity=0.3)
            cache = ActionCache(matrix, weights)
            index = int(rng.integers(8))
            new_weight = float(rng.random())
            fast = action_delta(matrix, weights, index, new_weight, cache)
            edited = weights.copy()
            edited[index] = new_weight
            full = action(matrix, edited)
            assert fast.s == pytest.approx(full.s, abs=1e-10)
            assert fast.k_terms == full.k_terms

    def test_two_bin_hand_case(self):
        W = np.array([[0.0, 2.0], [1.0, 0.0]])
        weights = np.array([1.0, 2.0]) / 3.0
        cache = ActionCache(W, weights)
        fast = action_delta(W, weights, 0, 2.0 / 3.0, cache)
        full = action(W, np.array([2.0, 2.0]) / 3.0)
        assert fast.s == pytest.approx(full.s, abs=1e-14)

    def test_stale_cache_detected(self, rng):
        matrix, weights = random_pair(rng, 6)
        cache = ActionCache(matrix, weights)
        weights[0] += 0.5  # cache no longer matches
        with pytest.raises(StaleCacheError):
            action_delta(matrix, weights, 0, 0.1, cache)

    def test_commit_tracks_full_value(self, rng):
        matrix, weights = random_pair(rng, 10, sparsity=0.4)
        cache = ActionCache(matrix, weights)
        current = weights.copy()
        for _ in range(300):
            index = int(rng.integers(10))
            new_weight = float(rng.random())
            cache.commit(index, new_weight)
            current[index] = new_weight
            assert cache.value.s == pytest.approx(action(matrix, current).s, abs=1e-10)

    def test_refresh_reanchors(self, rng):
        matrix, weights = random_pair(rng, 10)
        cache = ActionCache(matrix, weights)
        for _ in range(500):
            cache.commit(int(rng.integers(10)), float(rng.random()))
        cache.refresh()
        assert cache.value.s == pytest.approx(action(matrix, cache.weights).s, abs=1e-14)
