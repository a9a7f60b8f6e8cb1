"""Dataset loading, statistics, splitting, scaling, and the synthetic
generator."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subgrade.dataset import (
    DEFAULT_SCHEMA,
    FEATURE_RANGES,
    INPUT_NAMES,
    TARGET_NAMES,
    TARGET_RANGES,
    Dataset,
    MinMaxScaler,
    SplitSpec,
    fit_scaler,
    load_csv,
    split,
    summarize,
    synthesize,
    transform,
)
from subgrade.errors import (
    DegenerateSplit,
    MissingColumn,
    NonFiniteValue,
    TooFewRows,
    UnparseableCell,
)

ALL_COLUMNS = INPUT_NAMES + TARGET_NAMES


def make_dataset(n=6, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(DEFAULT_SCHEMA, rng.uniform(0, 10, (n, 7)),
                   rng.uniform(1, 50, (n, 3)), np.arange(n))


def write_csv(path, rows, header=ALL_COLUMNS):
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


class TestLoadCsv:
    def test_identity_load(self, tmp_path):
        rows = [[float(i * 10 + j) for j in range(10)] for i in range(3)]
        ds = load_csv(write_csv(tmp_path / "d.csv", rows))
        assert ds.n == 3
        assert list(ds.row_ids) == [0, 1, 2]
        np.testing.assert_array_equal(ds.x[1], rows[1][:7])
        np.testing.assert_array_equal(ds.y[2], rows[2][7:])

    def test_header_case_and_order_free(self, tmp_path):
        header = [c.lower() for c in reversed(ALL_COLUMNS)]
        rows = [list(range(10)), list(range(10, 20))]
        ds = load_csv(write_csv(tmp_path / "d.csv", rows, header))
        # values land in canonical schema order, not file order
        assert ds.input_column("HARSH")[0] == 9.0

    def test_missing_column(self, tmp_path):
        header = [c for c in ALL_COLUMNS if c != "CA"]
        path = write_csv(tmp_path / "d.csv", [[1] * 9, [2] * 9], header)
        with pytest.raises(MissingColumn):
            load_csv(path)

    def test_nan_cell(self, tmp_path):
        rows = [[1] * 10, [1] * 4 + ["NaN"] + [1] * 5]
        with pytest.raises(NonFiniteValue):
            load_csv(write_csv(tmp_path / "d.csv", rows))

    def test_unparseable_cell(self, tmp_path):
        rows = [[1] * 10, ["oops"] + [1] * 9]
        with pytest.raises(UnparseableCell):
            load_csv(write_csv(tmp_path / "d.csv", rows))

    def test_too_few_rows(self, tmp_path):
        with pytest.raises(TooFewRows):
            load_csv(write_csv(tmp_path / "d.csv", [[1] * 10]))


class TestDatasetInvariants:
    def test_rejects_nonfinite(self):
        x = np.ones((3, 7))
        x[1, 2] = np.inf
        with pytest.raises(ValueError):
            Dataset(DEFAULT_SCHEMA, x, np.ones((3, 3)), np.arange(3))

    def test_rejects_duplicate_ids(self):
        with pytest.raises(ValueError):
            Dataset(DEFAULT_SCHEMA, np.ones((3, 7)), np.ones((3, 3)),
                    np.array([0, 1, 1]))

    def test_arrays_immutable(self):
        ds = make_dataset()
        with pytest.raises(ValueError):
            ds.x[0, 0] = 99.0


class TestSummarize:
    def test_quantile_hand_case(self):
        # column [1,2,3,4] under the linear-interpolation rule
        x = np.tile(np.array([[1.0], [2.0], [3.0], [4.0]]), (1, 7))
        y = np.ones((4, 3)) * np.arange(1, 5)[:, None]
        ds = Dataset(DEFAULT_SCHEMA, x, y, np.arange(4))
        col = summarize(ds).columns["HARSH"]
        assert col.median == pytest.approx(2.5, abs=1e-12)
        assert col.q25 == pytest.approx(1.75, abs=1e-12)
        assert col.q75 == pytest.approx(3.25, abs=1e-12)
        assert col.count == 4

    def test_constant_column(self):
        x = np.full((3, 7), 5.0)
        ds = Dataset(DEFAULT_SCHEMA, x, np.arange(9.0).reshape(3, 3), np.arange(3))
        col = summarize(ds).columns["LL"]
        assert col.std == 0.0
        assert col.minimum == col.maximum == col.median == 5.0

    def test_order_invariants(self):
        stats = summarize(make_dataset(40))
        for col in stats.columns.values():
            assert (col.minimum <= col.q25 <= col.median
                    <= col.q75 <= col.maximum)

    def test_synthetic_harsh_marginal(self):
        stats = summarize(synthesize(3, 121))
        harsh = stats.columns["HARSH"]
        assert abs(harsh.mean - 6.0) <= 0.6
        assert harsh.minimum >= 0.0 and harsh.maximum <= 12.0


class TestSplit:
    def test_121_at_70(self):
        ds = synthesize(0, 121)
        train, test = split(ds, SplitSpec(0.7, 7))
        assert (train.n, test.n) == (85, 36)
        merged = np.sort(np.concatenate([train.row_ids, test.row_ids]))
        np.testing.assert_array_equal(merged, ds.row_ids)

    def test_exact_fraction(self):
        ds = make_dataset(10)
        for seed in range(5):
            train, test = split(ds, SplitSpec(0.5, seed))
            assert (train.n, test.n) == (5, 5)

    def test_deterministic(self):
        ds = make_dataset(30)
        a = split(ds, SplitSpec(0.7, 11))
        b = split(ds, SplitSpec(0.7, 11))
        np.testing.assert_array_equal(a[0].row_ids, b[0].row_ids)
        np.testing.assert_array_equal(a[1].row_ids, b[1].row_ids)

    def test_degenerate(self):
        with pytest.raises(DegenerateSplit):
            split(make_dataset(4), SplitSpec(0.9, 0))

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(6, 60), seed=st.integers(0, 10),
           frac=st.floats(0.3, 0.7))
    def test_partition_property(self, n, seed, frac):
        ds = make_dataset(n, seed)
        try:
            train, test = split(ds, SplitSpec(frac, seed))
        except DegenerateSplit:
            return
        ids = np.concatenate([train.row_ids, test.row_ids])
        assert len(set(ids.tolist())) == n
        assert train.n == int(np.floor(frac * n + 0.5))


class TestScaler:
    def test_extrema(self):
        ds = make_dataset(5)
        s = fit_scaler(ds)
        np.testing.assert_array_equal(s.fitted_min, ds.x.min(axis=0))
        np.testing.assert_array_equal(s.fitted_max, ds.x.max(axis=0))

    def test_endpoints_map_to_unit(self):
        ds = make_dataset(9)
        scaled = transform(fit_scaler(ds), ds)
        assert np.allclose(scaled.x.min(axis=0), 0.0)
        assert np.allclose(scaled.x.max(axis=0), 1.0)

    def test_midpoint(self):
        s = MinMaxScaler(np.full(7, 2.0), np.full(7, 6.0))
        out = s.transform_matrix(np.full((1, 7), 4.0))
        assert np.allclose(out, 0.5)

    def test_targets_untouched(self):
        ds = make_dataset(6)
        scaled = transform(fit_scaler(ds), ds)
        np.testing.assert_array_equal(scaled.y, ds.y)

    def test_constant_feature_maps_to_zero(self):
        x = np.random.default_rng(0).uniform(0, 1, (4, 7))
        x[:, 3] = 7.0
        ds = Dataset(DEFAULT_SCHEMA, x, np.ones((4, 3)) * np.arange(4)[:, None],
                     np.arange(4))
        with pytest.warns(UserWarning):
            s = fit_scaler(ds)
        assert np.all(s.transform_matrix(ds.x)[:, 3] == 0.0)

    def test_out_of_range_not_clipped(self):
        s = MinMaxScaler(np.zeros(7), np.ones(7))
        out = s.transform_matrix(np.full((1, 7), 2.0))
        assert np.all(out == 2.0)

    def test_leakage_guard(self):
        ds = make_dataset(40)
        train, _ = split(ds, SplitSpec(0.7, 1))
        direct = fit_scaler(train)
        # refit after rebuilding the train rows from scratch: identical
        rebuilt = fit_scaler(Dataset(ds.schema, train.x.copy(), train.y.copy(),
                                     train.row_ids.copy()))
        np.testing.assert_array_equal(direct.fitted_min, rebuilt.fitted_min)
        np.testing.assert_array_equal(direct.fitted_max, rebuilt.fitted_max)


class TestSynthesize:
    def test_deterministic(self):
        a = synthesize(5, 40, noise_scale=0.0)
        b = synthesize(5, 40, noise_scale=0.0)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.y, b.y)

    def test_envelopes(self):
        ds = synthesize(2, 121)
        for j, name in enumerate(INPUT_NAMES):
            lo, hi = FEATURE_RANGES[name]
            assert ds.x[:, j].min() >= lo and ds.x[:, j].max() <= hi
        for j, name in enumerate(TARGET_NAMES):
            lo, hi = TARGET_RANGES[name]
            assert ds.y[:, j].min() >= lo and ds.y[:, j].max() <= hi

    def test_monotone_in_harsh(self):
        from subgrade.dataset import clean_targets
        row = np.array([[4.0, 40.0, 16.0, 25.0, 17.0, 1.0, 1.5]])
        bumped = row.copy()
        bumped[0, 0] += 1.0
        assert np.all(clean_targets(bumped) > clean_targets(row))

    def test_monotone_directions(self):
        from subgrade.dataset import clean_targets
        row = np.array([[4.0, 40.0, 16.0, 25.0, 17.0, 1.0, 1.5]])
        for j, sign in ((1, -1), (3, -1), (6, +1)):  # LL down, PI down, MDD up
            bumped = row.copy()
            bumped[0, j] += 0.5
            delta = clean_targets(bumped) - clean_targets(row)
            assert np.all(sign * delta > 0)

    def test_qualitative_correlations(self):
        ds = synthesize(0, 200, noise_scale=0.0)
        harsh = ds.input_column("HARSH")
        assert np.corrcoef(harsh, ds.input_column("LL"))[0, 1] < -0.5
        assert np.corrcoef(harsh, ds.input_column("PI"))[0, 1] < -0.5
        assert np.corrcoef(harsh, ds.input_column("MDD"))[0, 1] > 0.5

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            synthesize(0, 5)
