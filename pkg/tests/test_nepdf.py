"""Unit tests for NEPDF construction."""

import numpy as np
import pytest

from pipelines.nepdf import (
    BinGrid,
    NepdfMatrix,
    PairSample,
    augment_with_transposes,
    base_id,
    build_dataset,
    build_epdf,
    build_nepdf,
    clean_pair,
    compute_bin_edges,
    nepdf_stack,
    normalize_epdf,
    swap_pair,
    transpose_nepdf,
)
from utils.errors import (
    EmptyInput,
    EmptyPair,
    InvalidK,
    InvalidLabel,
    LengthMismatch,
    NonPositiveForLog,
)


def _pair(x, y, label=1, pair_id="p"):
    return PairSample(id=pair_id, x=np.asarray(x, float), y=np.asarray(y, float), label=label)


class TestPairSample:
    """Tests for PairSample validation."""

    def test_rejects_bad_label(self):
        with pytest.raises(InvalidLabel):
            _pair([1.0], [2.0], label=2)

    def test_rejects_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            _pair([1.0, 2.0], [2.0])

    def test_rejects_empty(self):
        with pytest.raises(EmptyPair):
            _pair([], [])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            _pair([1.0, np.inf], [2.0, 3.0])


class TestCleanPair:
    """Tests for clean_pair()."""

    def test_drops_incomplete_positions(self):
        x, y = clean_pair([1, None, 3], [4, 5, None])
        assert x.tolist() == [1.0]
        assert y.tolist() == [4.0]

    def test_nan_counts_as_missing(self):
        x, y = clean_pair([1.0, float("nan")], [2.0, 3.0])
        assert x.tolist() == [1.0]

    def test_complete_input_unchanged(self):
        x, y = clean_pair([1, 2], [3, 4])
        assert x.tolist() == [1.0, 2.0]
        assert y.tolist() == [3.0, 4.0]

    def test_nothing_survives(self):
        with pytest.raises(EmptyPair):
            clean_pair([None], [1])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            clean_pair([1, 2], [1])


class TestComputeBinEdges:
    """Tests for compute_bin_edges()."""

    def test_linear_split(self):
        assert compute_bin_edges([0, 10], 2).tolist() == [0.0, 5.0, 10.0]

    def test_log_split(self):
        edges = compute_bin_edges([1, 100], 2, log_space=True)
        assert edges[0] == 1.0
        assert edges[2] == 100.0
        assert edges[1] == pytest.approx(10.0, rel=1e-12)

    def test_degenerate_range(self):
        edges = compute_bin_edges([3, 3, 3], 4)
        assert len(edges) == 5
        assert np.all(np.diff(edges) > 0)
        assert edges[0] == pytest.approx(3 - 3e-6)
        assert edges[-1] == pytest.approx(3 + 3e-6)

    def test_degenerate_pair_has_all_mass_in_one_bin(self):
        m = build_epdf(_pair([3, 3, 3], [1, 2, 3]), 4)
        assert m.values.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.count_nonzero(m.values.sum(axis=1)) == 1

    def test_non_positive_for_log(self):
        with pytest.raises(NonPositiveForLog):
            compute_bin_edges([0.0, 1.0], 2, log_space=True)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            compute_bin_edges([], 2)


class TestBuildNepdf:
    """Tests for build_epdf(), normalize_epdf() and build_nepdf()."""

    def test_single_observation(self):
        m = build_nepdf(_pair([2.0], [7.0]), 4)
        assert m.values.sum() == 1.0
        assert np.count_nonzero(m.values) == 1
        assert m.values.max() == 1.0

    def test_corner_bins_normalize_to_ones(self):
        pair = _pair([0, 0, 1, 1], [0, 1, 0, 1])
        epdf = build_epdf(pair, 2)
        assert np.array_equal(epdf.values, np.full((2, 2), 0.25))
        assert np.array_equal(normalize_epdf(epdf).values, np.ones((2, 2)))

    def test_diagonal_hand_count(self):
        pair = _pair([0, 1, 2, 3], [0, 1, 2, 3])
        epdf = build_epdf(pair, 2)
        assert epdf.grid.edges_x.tolist() == [0.0, 1.5, 3.0]
        assert np.array_equal(epdf.values, np.diag([0.5, 0.5]))
        assert np.array_equal(build_nepdf(pair, 2).values, np.eye(2))

    def test_invalid_k(self):
        with pytest.raises(InvalidK):
            build_nepdf(_pair([1.0, 2.0], [1.0, 2.0]), 1)

    def test_log_transform_keeps_max_one(self):
        pair = _pair([1, 1, 1, 2], [1, 1, 1, 2])
        m = build_nepdf(pair, 2, log_transform=True)
        assert m.values.max() == 1.0
        assert m.values[1, 1] == pytest.approx(np.log1p(0.25) / np.log1p(0.75))

    def test_records_grid_and_counts(self, rng):
        pair = _pair(rng.normal(size=30), rng.normal(size=30))
        m = build_nepdf(pair, 8)
        assert m.normalized
        assert m.n_obs == 30
        assert m.k == 8
        assert len(m.grid.edges_y) == 9

    def test_property_suite(self, rng):
        for i in range(200):
            n = int(rng.integers(1, 60))
            k = int(rng.integers(2, 12))
            pair = _pair(rng.normal(size=n) * 10, rng.exponential(size=n), label=1, pair_id=str(i))

            epdf = build_epdf(pair, k)
            assert abs(epdf.values.sum() - 1.0) < 1e-12
            assert np.allclose(epdf.values * n, np.round(epdf.values * n))

            m = normalize_epdf(epdf)
            assert m.values.max() == 1.0
            assert m.values.min() >= 0.0

            swapped = build_nepdf(swap_pair(pair), k)
            assert np.array_equal(swapped.values, transpose_nepdf(m).values)

            order = rng.permutation(n)
            shuffled = _pair(pair.x[order], pair.y[order])
            assert np.array_equal(build_nepdf(shuffled, k).values, m.values)

            doubled = _pair(np.tile(pair.x, 2), np.tile(pair.y, 2))
            assert np.allclose(build_nepdf(doubled, k).values, m.values, atol=1e-15)


class TestTransposeNepdf:
    """Tests for transpose_nepdf()."""

    def test_index_swap(self):
        values = np.zeros((4, 4))
        values[0, 3] = 1.0
        grid = BinGrid(edges_x=np.arange(5.0), edges_y=np.arange(5.0) * 2)
        t = transpose_nepdf(NepdfMatrix(values=values, grid=grid, n_obs=1, normalized=True))
        assert t.values[3, 0] == 1.0
        assert np.count_nonzero(t.values) == 1
        assert t.grid.edges_x.tolist() == grid.edges_y.tolist()
        assert t.n_obs == 1 and t.normalized

    def test_involution(self, rng):
        m = build_nepdf(_pair(rng.normal(size=20), rng.normal(size=20)), 5)
        assert np.array_equal(transpose_nepdf(transpose_nepdf(m)).values, m.values)

    def test_symmetric_matrix_unchanged(self):
        m = build_nepdf(_pair([0, 1, 2, 3], [0, 1, 2, 3]), 2)
        assert np.array_equal(transpose_nepdf(m).values, m.values)


class TestAugmentWithTransposes:
    """Tests for augment_with_transposes()."""

    def test_causal_gets_reverse_twin(self):
        m = build_nepdf(_pair([0, 1, 2], [0, 0, 1]), 2)
        out = augment_with_transposes([(m, 1)])
        assert [label for _, label in out] == [1, -1]
        assert np.array_equal(out[1][0].values, m.values.T)

    def test_independent_stays_zero(self):
        m = build_nepdf(_pair([0, 1], [1, 0]), 2)
        assert [label for _, label in augment_with_transposes([(m, 0)])] == [0, 0]

    def test_empty(self):
        assert augment_with_transposes([]) == []

    def test_invalid_label(self):
        m = build_nepdf(_pair([0, 1], [1, 0]), 2)
        with pytest.raises(InvalidLabel):
            augment_with_transposes([(m, 5)])


class TestDatasetHelpers:
    """Tests for swap_pair(), base_id(), build_dataset() and nepdf_stack()."""

    def test_swap_pair(self):
        pair = _pair([1, 2], [3, 4], label=-1, pair_id="s-1:XY")
        swapped = swap_pair(pair)
        assert swapped.id == "s-1:XY:T"
        assert swapped.label == 1
        assert swapped.x.tolist() == [3.0, 4.0]

    def test_base_id(self):
        assert base_id("v-000001:XY:T") == "v-000001"
        assert base_id("synth-000003") == "synth-000003"

    def test_build_dataset_preserves_order(self, rng):
        pairs = [_pair(rng.normal(size=10), rng.normal(size=10), pair_id=str(i)) for i in range(6)]
        serial = build_dataset(pairs, 4, threads=1)
        threaded = build_dataset(pairs, 4, threads=3)
        for a, b in zip(serial, threaded):
            assert np.array_equal(a.values, b.values)

    def test_stack_shape(self):
        ms = [build_nepdf(_pair([0, 1], [1, 0]), 4) for _ in range(3)]
        stacked = nepdf_stack(ms)
        assert stacked.shape == (3, 4, 4)
        assert stacked.dtype == np.float32
