import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detbal.errors import InputError
from detbal.grid import (
    BinGrid,
    TransitionMatrix,
    bin_index,
    build_transitions,
    column_normalize,
    marginal_histogram,
)
from detbal.series import ReturnsSeries


@pytest.fixture
def grid():
    return BinGrid()


class TestBinGrid:
    def test_defaults(self, grid):
        assert grid.bins == 25
        assert grid.width == pytest.approx(0.0016, abs=1e-18)

    def test_invalid(self):
        with pytest.raises(ValueError):
            BinGrid(0.1, 0.1, 25)
        with pytest.raises(ValueError):
            BinGrid(-0.02, 0.02, 1)

    def test_centers_and_edges(self, grid):
        assert grid.edges()[0] == -0.02
        assert grid.edges()[-1] == pytest.approx(0.02, abs=1e-15)
        assert grid.centers()[12] == pytest.approx(0.0, abs=1e-15)


class TestBinIndex:
    def test_left_edge_is_first_bin(self, grid):
        assert bin_index(grid.lower, grid) == 0

    def test_zero_maps_to_center_bin(self, grid):
        # (0 - (-0.02)) / 0.0016 = 12.5 -> floor 12, the 13th bin
        assert bin_index(0.0, grid) == 12

    def test_upper_edge_is_dropped(self, grid):
        assert bin_index(grid.upper, grid) is None

    def test_below_and_above(self, grid):
        assert bin_index(-0.21, grid) is None
        assert bin_index(0.21, grid) is None
        assert bin_index(np.nan, grid) is None

    def test_just_inside_upper(self, grid):
        assert bin_index(np.nextafter(grid.upper, -1), grid) == grid.bins - 1

    def test_edges_map_to_their_right_bin(self, grid):
        edges = grid.edges()
        for k in range(grid.bins):
            assert bin_index(edges[k], grid) == k

    def test_scalar_and_vector_binning_agree(self, grid, rng):
        from detbal.grid import _bin_indices

        values = rng.uniform(-0.03, 0.03, size=500)
        idx, in_range = _bin_indices(values, grid)
        for v, i, ok in zip(values, idx, in_range):
            expected = bin_index(float(v), grid)
            assert (expected is None) == (not ok)
            if ok:
                assert expected == i


class TestBuildTransitions:
    def test_constant_returns(self, grid):
        matrix, dropped = build_transitions(ReturnsSeries(np.zeros(4)), grid)
        assert dropped == 0
        assert matrix.values[12, 12] == 3
        assert matrix.values.sum() == 3

    def test_out_of_range_pairs_dropped(self, grid):
        matrix, dropped = build_transitions(
            ReturnsSeries(np.array([0.0, 0.021, 0.0])), grid
        )
        assert dropped == 2
        assert matrix.values.sum() == 0

    def test_orientation_source_column(self, grid):
        # pair (r(i), r(i+1)) = (bin 12, bin 13): column = source, row = destination
        matrix, _ = build_transitions(
            ReturnsSeries(np.array([0.0, 0.0016])), grid
        )
        assert matrix.values[13, 12] == 1
        assert matrix.values[12, 13] == 0

    def test_too_short(self, grid):
        with pytest.raises(InputError):
            build_transitions(ReturnsSeries(np.array([0.0])), grid)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-0.05, 0.05, allow_nan=False), min_size=2, max_size=300))
    def test_count_conservation(self, values):
        grid = BinGrid()
        matrix, dropped = build_transitions(ReturnsSeries(np.array(values)), grid)
        assert matrix.values.sum() + dropped == len(values) - 1


class TestColumnNormalize:
    def test_hand_case(self):
        matrix = TransitionMatrix(np.array([[1.0, 3.0], [1.0, 1.0]]))
        normalized, sums, empty = column_normalize(matrix)
        np.testing.assert_array_equal(sums, [2.0, 4.0])
        np.testing.assert_allclose(
            normalized.values, [[0.5, 0.75], [0.5, 0.25]], atol=1e-15
        )
        assert empty.size == 0
        assert normalized.kind == "density"

    def test_diagonal_only(self):
        matrix = TransitionMatrix(np.diag([2.0, 5.0, 7.0]))
        normalized, _, _ = column_normalize(matrix)
        np.testing.assert_array_equal(normalized.values, np.eye(3))

    def test_zero_column_flagged(self):
        values = np.array([[1.0, 0.0], [1.0, 0.0]])
        normalized, sums, empty = column_normalize(TransitionMatrix(values))
        np.testing.assert_array_equal(empty, [1])
        np.testing.assert_array_equal(normalized.values[:, 1], [0.0, 0.0])

    def test_columns_stochastic(self, rng):
        values = rng.random((25, 25))
        values[values < 0.3] = 0.0
        normalized, sums, empty = column_normalize(TransitionMatrix(values))
        colsums = normalized.values.sum(axis=0)
        nonzero = np.setdiff1d(np.arange(25), empty)
        np.testing.assert_allclose(colsums[nonzero], 1.0, atol=1e-12)

    def test_balance_products_preserved(self, rng):
        # rescaling W by column sums while multiplying w by them leaves every
        # balance product unchanged
        for _ in range(20):
            values = rng.random((10, 10))
            weights = rng.random(10)
            normalized, sums, _ = column_normalize(TransitionMatrix(values))
            reweighted = sums * weights
            lhs = normalized.values * reweighted  # [x, y] = What[x,y] * what[y]
            rhs = values * weights
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestMarginalHistogram:
    def test_all_in_one_bin(self, grid):
        h = marginal_histogram(ReturnsSeries(np.zeros(5)), grid)
        assert h[12] == 1.0
        assert h.sum() == 1.0

    def test_symmetric_two_bins(self, grid):
        delta = 0.0016  # centers of bins 11 and 13
        values = np.array([-delta, delta] * 10)
        h = marginal_histogram(ReturnsSeries(values), grid)
        assert bin_index(-delta, grid) == 11
        assert bin_index(delta, grid) == 13
        assert h[11] == h[13] == 0.5

    def test_all_out_of_range(self, grid):
        with pytest.raises(InputError):
            marginal_histogram(ReturnsSeries(np.array([0.5, -0.5])), grid)

    def test_uniform_sampler_converges(self, grid):
        # deviation from the flat profile shrinks as the sample grows
        rng = np.random.default_rng(7)
        devs = []
        for size in (20_000, 500_000):
            values = rng.uniform(grid.lower, grid.upper, size=size)
            h = marginal_histogram(ReturnsSeries(values), grid)
            devs.append(np.max(np.abs(h - 1.0 / grid.bins)))
        assert devs[1] < devs[0]
        # 4.5 sigma multinomial bound at the larger sample
        sigma = np.sqrt((1 / 25) * (1 - 1 / 25) / 500_000)
        assert devs[1] < 4.5 * sigma
