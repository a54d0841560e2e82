import numpy as np
import pytest

from srlab.engine import (
    DetectorConfig,
    EngineError,
    ExitClass,
    Kind,
    Outcome,
    SrLevel,
    classify_exit,
    count_resistance_bounces,
    count_support_bounces,
    detect_events,
)
from srlab.series import Ar1Spec, PriceSeries, simulate_ar1


def excursion_oracle_support(window, s_bar):
    """Brute-force bounce count: walk the path, track the above/below state
    relative to s_bar, and count completed excursions away from and back to
    the starting side (down-then-up when the path starts above the boundary;
    an unreturned departure is an entry, not a bounce)."""
    below = [w <= s_bar for w in window]
    start = state = below[0]
    departed = False
    bounces = 0
    for flag in below[1:]:
        if flag == state:
            continue
        state = flag
        if state == start and departed:
            bounces += 1
            departed = False
        elif state != start:
            departed = True
    return bounces


def excursion_oracle_resistance(window, r_lower):
    return excursion_oracle_support([-w for w in window], -r_lower)


class TestBounceCounts:
    def test_support_two_bounces(self):
        # indicator sum: crossings at each adjacent sign change = 4, floor(4/2) = 2
        assert count_support_bounces([2, 1, 2, 1, 2], 1.5) == 2

    def test_support_single_cross_is_entry_not_bounce(self):
        assert count_support_bounces([2, 1], 1.5) == 0

    def test_support_no_crossings(self):
        assert count_support_bounces([2, 2, 2], 1.5) == 0

    def test_support_boundary_equality_counts_as_below(self):
        # path sits exactly on the boundary: [2, 1.5, 2] crosses twice
        assert count_support_bounces([2, 1.5, 2], 1.5) == 1

    def test_resistance_two_bounces(self):
        assert count_resistance_bounces([1, 2, 1, 2, 1], 1.5) == 2

    def test_resistance_single_cross(self):
        assert count_resistance_bounces([1, 2], 1.5) == 0

    def test_resistance_boundary_equality_counts_as_above(self):
        assert count_resistance_bounces([1, 1.5, 1], 1.5) == 1

    def test_reflection_symmetry(self):
        rng = np.random.Generator(np.random.PCG64(10))
        for _ in range(200):
            n = rng.integers(2, 40)
            w = rng.integers(-3, 4, size=n).astype(float) / 2
            c = float(rng.integers(-3, 4)) / 2 + 0.25
            assert count_resistance_bounces(w, c) == count_support_bounces(-w, -c)

    def test_matches_excursion_oracle(self):
        rng = np.random.Generator(np.random.PCG64(11))
        for _ in range(300):
            n = rng.integers(2, 51)
            w = rng.integers(0, 7, size=n).astype(float) / 2  # lattice prices
            c = float(rng.integers(0, 13)) / 4
            assert count_support_bounces(w, c) == excursion_oracle_support(list(w), c)
            assert count_resistance_bounces(w, c) == excursion_oracle_resistance(
                list(w), c
            )

    def test_window_too_short(self):
        with pytest.raises(EngineError):
            count_support_bounces([1.0], 0.5)


class TestClassifyExit:
    LEVEL = SrLevel(kind=Kind.SUPPORT, lower=1.0, upper=2.0, anchor=1.5, bounce_count=0)

    def test_bounce_above_upper(self):
        assert classify_exit(self.LEVEL, 2.5) is ExitClass.BOUNCE

    def test_penetration_below_lower(self):
        assert classify_exit(self.LEVEL, 0.5) is ExitClass.PENETRATION

    def test_still_inside(self):
        assert classify_exit(self.LEVEL, 1.5) is ExitClass.STILL_INSIDE

    def test_resistance_mirrored(self):
        level = SrLevel(kind=Kind.RESISTANCE, lower=1.0, upper=2.0, anchor=1.5,
                        bounce_count=0)
        assert classify_exit(level, 0.5) is ExitClass.BOUNCE
        assert classify_exit(level, 2.5) is ExitClass.PENETRATION


class TestDetectEvents:
    def test_crafted_single_support_bounce(self):
        # hand transcript, lag 5, gamma 0.5:
        #   t=6: window [6.8, 7.6, 8.2, 9.0, 9.5], min 6.8, band [6.3, 7.3];
        #        previous price 9.5 above the band, 7.2 inside -> entry;
        #        window crosses 7.3 once (initial rise) -> b_prev = 0
        #   t=7: price 8.0 exits above 7.3 -> bounce
        prices = [7.0, 6.8, 7.6, 8.2, 9.0, 9.5, 7.2, 8.0, 8.5, 8.6, 8.4, 8.3]
        series = PriceSeries(np.array(prices))
        config = DetectorConfig(lag_window=5, gamma=0.5)
        result = detect_events(series, config)
        assert len(result.events) == 1
        ev = result.events[0]
        assert ev.kind is Kind.SUPPORT
        assert ev.outcome is Outcome.BOUNCE
        assert ev.b_prev == 0
        assert ev.entry_index == 6
        assert ev.exit_index == 7
        assert ev.level.lower == pytest.approx(6.3)
        assert ev.level.upper == pytest.approx(7.3)

    def test_one_step_traversal_is_immediate_penetration(self):
        prices = [9.0, 8.0, 7.0, 7.5, 8.5, 6.0, 6.1, 6.2]
        series = PriceSeries(np.array(prices))
        result = detect_events(series, DetectorConfig(lag_window=5, gamma=0.5))
        ev = result.events[0]
        assert ev.kind is Kind.SUPPORT
        assert ev.outcome is Outcome.PENETRATION
        assert ev.entry_index == ev.exit_index == 5

    def test_monotone_series_has_no_support_entries(self):
        series = PriceSeries(np.arange(200, dtype=float))
        result = detect_events(series, DetectorConfig(lag_window=10, gamma=0.3))
        assert not any(ev.kind is Kind.SUPPORT for ev in result.events)

    def test_overlapping_bands_skipped_and_counted(self):
        prices = [0.0, 0.0, 0.0, 1.8, 1.8, 0.5, 0.6]
        series = PriceSeries(np.array(prices))
        result = detect_events(series, DetectorConfig(lag_window=5, gamma=1.0))
        assert result.events == []
        assert result.diagnostics.overlap_skips >= 1

    def test_series_too_short(self):
        series = PriceSeries(np.zeros(10) + np.arange(10))
        with pytest.raises(EngineError, match="too short"):
            detect_events(series, DetectorConfig(lag_window=10))

    def test_auto_gamma_on_constant_series_rejected(self):
        series = PriceSeries(np.full(50, 3.0))
        with pytest.raises(EngineError, match="gamma"):
            detect_events(series, DetectorConfig(lag_window=5))

    def test_determinism(self):
        series = simulate_ar1(Ar1Spec(rho=1.0, length=5000, seed=20))
        config = DetectorConfig(lag_window=60)
        assert detect_events(series, config).events == detect_events(series, config).events

    def test_event_invariants_by_replay(self):
        series = simulate_ar1(Ar1Spec(rho=1.0, length=20_000, seed=21))
        result = detect_events(series, DetectorConfig(lag_window=60))
        assert result.events
        x = series.prices
        prev_exit = -1
        for ev in result.events:
            lv = ev.level
            assert ev.exit_index >= ev.entry_index
            assert ev.entry_index > prev_exit
            prev_exit = ev.exit_index
            assert lv.upper - lv.lower == pytest.approx(2 * result.gamma)
            assert lv.anchor == pytest.approx((lv.lower + lv.upper) / 2)
            if ev.entry_index == ev.exit_index:  # one-step traversal
                assert ev.outcome is Outcome.PENETRATION
                continue
            # entry price inside the frozen level, dwell strictly inside
            assert lv.lower <= x[ev.entry_index] <= lv.upper
            for t in range(ev.entry_index + 1, ev.exit_index):
                assert lv.lower <= x[t] <= lv.upper
            exit_price = x[ev.exit_index]
            if ev.kind is Kind.SUPPORT:
                expected = Outcome.BOUNCE if exit_price > lv.upper else Outcome.PENETRATION
            else:
                expected = Outcome.BOUNCE if exit_price < lv.lower else Outcome.PENETRATION
            assert ev.outcome is expected

    def test_b_prev_matches_frozen_window_recount(self):
        series = simulate_ar1(Ar1Spec(rho=0.95, length=20_000, seed=22))
        config = DetectorConfig(lag_window=60)
        result = detect_events(series, config)
        x = series.prices
        checked = 0
        for ev in result.events:
            if ev.b_prev_clamped:
                continue
            window = x[ev.entry_index - 60 : ev.entry_index]
            if ev.kind is Kind.SUPPORT:
                expected = count_support_bounces(window, ev.level.upper)
            else:
                expected = count_resistance_bounces(window, ev.level.lower)
            assert ev.b_prev == expected
            checked += 1
        assert checked > 100

    def test_reflection_swaps_kinds(self):
        series = simulate_ar1(Ar1Spec(rho=1.0, length=10_000, seed=23))
        config = DetectorConfig(lag_window=60, gamma=0.8)
        fwd = detect_events(series, config).events
        mirrored = detect_events(
            PriceSeries(-series.prices, None, "neg"), config
        ).events
        assert len(fwd) == len(mirrored)
        flip = {Kind.SUPPORT: Kind.RESISTANCE, Kind.RESISTANCE: Kind.SUPPORT}
        for a, b in zip(fwd, mirrored):
            assert flip[a.kind] is b.kind
            assert a.outcome is b.outcome
            assert a.b_prev == b.b_prev
            assert (a.entry_index, a.exit_index) == (b.entry_index, b.exit_index)

    def test_b_prev_cap_clamps_and_flags(self):
        series = simulate_ar1(Ar1Spec(rho=0.9, length=50_000, seed=24))
        result = detect_events(series, DetectorConfig(lag_window=120, b_prev_cap=2))
        assert all(ev.b_prev <= 2 for ev in result.events)
        clamped = [ev for ev in result.events if ev.b_prev_clamped]
        assert clamped
        assert result.diagnostics.cap_clamps == len(clamped)

    def test_time_since_prev_bounce_presence(self):
        series = simulate_ar1(Ar1Spec(rho=0.95, length=20_000, seed=25))
        result = detect_events(series, DetectorConfig(lag_window=60))
        for ev in result.events:
            if ev.b_prev == 0:
                assert ev.time_since_prev_bounce is None
            else:
                assert ev.time_since_prev_bounce is not None
                assert 0 < ev.time_since_prev_bounce <= 60
