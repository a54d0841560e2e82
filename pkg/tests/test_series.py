import numpy as np
import pytest

from srlab.series import (
    Ar1Spec,
    PriceSeries,
    SeriesError,
    ShuffleSpec,
    load_series,
    mean_abs_increment,
    save_series,
    shuffle_returns,
    simulate_ar1,
)


def write(tmp_path, text, name="input.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadSeries:
    def test_minimal_csv(self, tmp_path):
        path = write(tmp_path, "timestamp,price\n1,1.0\n2,1.1\n")
        series = load_series(path)
        assert list(series.prices) == [1.0, 1.1]
        assert series.series_id == "input"

    def test_zero_volume_rows_dropped(self, tmp_path):
        path = write(
            tmp_path,
            "timestamp,price,vol\n1,1.0,5\n2,9.9,0\n3,1.2,7\n",
        )
        series = load_series(path, {"volume": "vol"})
        assert list(series.prices) == [1.0, 1.2]

    def test_unparseable_price_names_line(self, tmp_path):
        path = write(tmp_path, "timestamp,price\n1,1.0\n2,oops\n3,1.2\n")
        with pytest.raises(SeriesError, match="line 3"):
            load_series(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SeriesError, match="no such file"):
            load_series(tmp_path / "absent.csv")

    def test_fewer_than_two_rows(self, tmp_path):
        path = write(tmp_path, "timestamp,price\n1,1.0\n")
        with pytest.raises(SeriesError, match="fewer than 2"):
            load_series(path)

    def test_missing_price_column(self, tmp_path):
        path = write(tmp_path, "timestamp,close\n1,1.0\n2,1.1\n")
        with pytest.raises(SeriesError, match="close"):
            load_series(path, {"price": "close_typo"})

    def test_column_mapping_for_ohlc(self, tmp_path):
        path = write(tmp_path, "time,close\n1,2.0\n2,2.5\n")
        series = load_series(path, {"timestamp": "time", "price": "close"})
        assert list(series.prices) == [2.0, 2.5]

    def test_rows_sorted_by_timestamp(self, tmp_path):
        path = write(tmp_path, "timestamp,price\n3,3.0\n1,1.0\n2,2.0\n")
        series = load_series(path)
        assert list(series.prices) == [1.0, 2.0, 3.0]

    def test_wall_clock_timestamps(self, tmp_path):
        path = write(
            tmp_path,
            "timestamp,price\n2018-01-02T09:00:00,5.0\n2018-01-02T09:01:00,6.0\n",
        )
        series = load_series(path)
        assert list(series.prices) == [5.0, 6.0]
        assert series.timestamps[1] - series.timestamps[0] == pytest.approx(1.0)

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.Generator(np.random.PCG64(1))
        original = PriceSeries(rng.normal(size=100).cumsum() + 50, None, "rt")
        path = tmp_path / "rt.csv"
        save_series(original, path)
        loaded = load_series(path)
        assert np.array_equal(loaded.prices, original.prices)


class TestPriceSeries:
    def test_too_short(self):
        with pytest.raises(SeriesError):
            PriceSeries(np.array([1.0]))

    def test_non_increasing_timestamps(self):
        with pytest.raises(SeriesError, match="strictly increasing"):
            PriceSeries(np.array([1.0, 2.0]), np.array([5.0, 5.0]))


class TestMeanAbsIncrement:
    def test_direct(self):
        assert mean_abs_increment(PriceSeries(np.array([1.0, 2.0, 4.0]))) == 1.5

    def test_constant_series(self):
        assert mean_abs_increment(PriceSeries(np.array([5.0] * 4))) == 0.0

    def test_gaussian_walk_matches_folded_normal_oracle(self):
        rng = np.random.Generator(np.random.PCG64(7))
        walk = PriceSeries(np.cumsum(rng.normal(size=100_000)))
        # oracle: Monte-Carlo mean of |N(0,1)| from an independent stream
        oracle_rng = np.random.Generator(np.random.PCG64(8))
        oracle = float(np.mean(np.abs(oracle_rng.normal(size=1_000_000))))
        assert mean_abs_increment(walk) == pytest.approx(oracle, abs=0.01)
        assert mean_abs_increment(walk) == pytest.approx(np.sqrt(2 / np.pi), abs=0.01)

    def test_shift_invariance_and_scaling(self):
        rng = np.random.Generator(np.random.PCG64(2))
        prices = rng.normal(size=500).cumsum()
        base = mean_abs_increment(PriceSeries(prices))
        assert mean_abs_increment(PriceSeries(prices + 123.4)) == pytest.approx(base)
        assert mean_abs_increment(PriceSeries(prices * 3.5)) == pytest.approx(3.5 * base)


class TestShuffleReturns:
    def test_two_step_exhaustive(self):
        series = PriceSeries(np.array([1.0, 3.0, 2.0]))
        out = shuffle_returns(series, ShuffleSpec(0, 0))
        assert list(out.prices) in ([1.0, 3.0, 2.0], [1.0, 0.0, 2.0])

    def test_invariants(self):
        rng = np.random.Generator(np.random.PCG64(3))
        series = PriceSeries(rng.normal(size=10_000).cumsum() + 10)
        out = shuffle_returns(series, ShuffleSpec(11, 4))
        assert len(out) == len(series)
        assert out.prices[0] == series.prices[0]
        assert np.allclose(
            np.sort(np.diff(out.prices)), np.sort(np.diff(series.prices))
        )

    def test_distinct_seeds_differ(self):
        rng = np.random.Generator(np.random.PCG64(4))
        series = PriceSeries(rng.normal(size=1000).cumsum())
        for pair in range(10):
            a = shuffle_returns(series, ShuffleSpec(pair, 0))
            b = shuffle_returns(series, ShuffleSpec(pair + 100, 0))
            assert not np.array_equal(a.prices, b.prices)

    def test_same_spec_identical(self):
        rng = np.random.Generator(np.random.PCG64(5))
        series = PriceSeries(rng.normal(size=1000).cumsum())
        a = shuffle_returns(series, ShuffleSpec(9, 2))
        b = shuffle_returns(series, ShuffleSpec(9, 2))
        assert np.array_equal(a.prices, b.prices)

    def test_too_short(self):
        series = PriceSeries(np.array([1.0, 2.0]))
        assert len(shuffle_returns(series, ShuffleSpec(0, 0))) == 2


class TestSimulateAr1:
    def test_zero_noise_geometric_decay(self):
        series = simulate_ar1(Ar1Spec(rho=0.5, length=4, noise_sd=0.0, initial_value=8.0))
        assert list(series.prices) == [8.0, 4.0, 2.0, 1.0]

    def test_random_walk_increment_moments(self):
        series = simulate_ar1(Ar1Spec(rho=1.0, length=1_000_000, seed=6))
        diffs = np.diff(series.prices)
        assert np.mean(diffs) == pytest.approx(0.0, abs=0.01)
        assert np.std(diffs) == pytest.approx(1.0, abs=0.01)

    def test_stationary_variance(self):
        series = simulate_ar1(Ar1Spec(rho=0.9, length=1_000_000, seed=7))
        expected = 1.0 / (1.0 - 0.9**2)
        assert np.var(series.prices) == pytest.approx(expected, rel=0.05)

    def test_deterministic_per_seed(self):
        spec = Ar1Spec(rho=0.95, length=5000, seed=12)
        assert np.array_equal(simulate_ar1(spec).prices, simulate_ar1(spec).prices)

    def test_invalid_length(self):
        with pytest.raises(SeriesError):
            Ar1Spec(rho=1.0, length=1)
