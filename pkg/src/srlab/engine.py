"""Rolling-window support/resistance discovery state machine.

At each scanning step the trailing window of ``lag_window`` prices defines
one candidate support level (window minimum +/- gamma) and one candidate
resistance level (window maximum +/- gamma).  When the current price
crosses into a level from its trend-facing side the level is frozen, the
machine dwells until the price exits the interval, and the episode is
recorded as a bounce or a penetration together with the number of bounces
the frozen window had already seen on that level.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from srlab.series import PriceSeries, SeriesError, mean_abs_increment


class Kind(str, enum.Enum):
    SUPPORT = "support"
    RESISTANCE = "resistance"
    COMBINED = "combined"  # aggregation pseudo-kind; never emitted by the engine


class Outcome(str, enum.Enum):
    BOUNCE = "bounce"
    PENETRATION = "penetration"


class ExitClass(str, enum.Enum):
    BOUNCE = "bounce"
    PENETRATION = "penetration"
    STILL_INSIDE = "still_inside"


class EngineError(ValueError):
    """Raised for unusable detector inputs."""


@dataclass(frozen=True)
class SrLevel:
    kind: Kind
    lower: float
    upper: float
    anchor: float
    bounce_count: int
    last_bounce_offset: int | None = None


@dataclass(frozen=True)
class EntryEvent:
    kind: Kind
    entry_index: int
    exit_index: int
    b_prev: int
    outcome: Outcome
    time_since_prev_bounce: int | None
    level: SrLevel
    b_prev_clamped: bool = False


@dataclass(frozen=True)
class DetectorConfig:
    """lag_window in steps; gamma in price units or "auto" (whole-series
    mean absolute increment); b_prev above b_prev_cap is clamped."""

    lag_window: int = 60
    gamma: float | str = "auto"
    b_prev_cap: int = 8

    def __post_init__(self):
        if self.lag_window < 2:
            raise EngineError("lag_window must be >= 2")
        if self.gamma != "auto" and float(self.gamma) <= 0:
            raise EngineError("gamma must be positive")
        if self.b_prev_cap < 1:
            raise EngineError("b_prev_cap must be >= 1")

    def resolve_gamma(self, series: PriceSeries) -> float:
        if self.gamma == "auto":
            return mean_abs_increment(series)
        return float(self.gamma)


@dataclass
class Diagnostics:
    overlap_skips: int = 0
    cap_clamps: int = 0
    open_at_end: int = 0


@dataclass
class DetectionResult:
    events: list[EntryEvent]
    gamma: float
    config: DetectorConfig
    series_id: str
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


def _support_crossings(window: np.ndarray, s_bar: float) -> np.ndarray:
    """Positions (index of the later point) where the path crosses s_bar.

    Prices equal to s_bar count as the lower side, matching the strict
    inequality on the upper side of the crossing indicators.
    """
    below = window <= s_bar
    return np.flatnonzero(below[:-1] != below[1:]) + 1


def _resistance_crossings(window: np.ndarray, r_lower: float) -> np.ndarray:
    """Crossing positions of r_lower; equality counts as the upper side."""
    above = window >= r_lower
    return np.flatnonzero(above[:-1] != above[1:]) + 1


def count_support_bounces(window, s_bar: float) -> int:
    """Completed bounces on a support level whose upper boundary is s_bar.

    Half the number of boundary crossings, rounded down: single crosses are
    entries, not bounces.
    """
    window = np.asarray(window, dtype=float)
    if len(window) < 2:
        raise EngineError("window needs at least 2 prices")
    return len(_support_crossings(window, s_bar)) // 2


def count_resistance_bounces(window, r_lower: float) -> int:
    """Completed bounces on a resistance level whose lower boundary is r_lower."""
    window = np.asarray(window, dtype=float)
    if len(window) < 2:
        raise EngineError("window needs at least 2 prices")
    return len(_resistance_crossings(window, r_lower)) // 2


def classify_exit(level: SrLevel, exit_price: float) -> ExitClass:
    """Classify a price relative to a frozen level.

    A bounce exits through the entry-side boundary (upper for support,
    lower for resistance); a penetration exits through the far boundary.
    """
    if level.lower <= exit_price <= level.upper:
        return ExitClass.STILL_INSIDE
    if level.kind is Kind.SUPPORT:
        return ExitClass.BOUNCE if exit_price > level.upper else ExitClass.PENETRATION
    return ExitClass.BOUNCE if exit_price < level.lower else ExitClass.PENETRATION


def _find_exit(x: np.ndarray, start: int, lower: float, upper: float) -> int:
    """First index >= start with price strictly outside [lower, upper], or -1."""
    n = len(x)
    pos = start
    chunk = 256
    while pos < n:
        end = min(pos + chunk, n)
        seg = x[pos:end]
        hits = np.flatnonzero((seg > upper) | (seg < lower))
        if len(hits):
            return pos + int(hits[0])
        pos = end
        chunk = min(chunk * 2, 1 << 16)
    return -1


def detect_events(series: PriceSeries, config: DetectorConfig) -> DetectionResult:
    """Run the discovery state machine over a series.

    While the machine dwells inside a level the level stays frozen, so a
    new window extremum cannot widen it mid-episode.  Scanning resumes at
    the step after the exit with the then-current trailing window.
    """
    x = series.prices
    n = len(x)
    lag = config.lag_window
    if n <= lag:
        raise EngineError(f"series length {n} too short for lag window {lag}")
    gamma = config.resolve_gamma(series)
    if gamma <= 0:
        raise EngineError("resolved gamma must be positive (constant series?)")

    roll = pd.Series(x).rolling(lag)
    # window for step t is x[t-lag:t]; rolling stats at t-1 cover exactly that
    win_min = np.empty(n)
    win_max = np.empty(n)
    win_min[:] = np.nan
    win_max[:] = np.nan
    win_min[1:] = roll.min().to_numpy()[:-1]
    win_max[1:] = roll.max().to_numpy()[:-1]

    x_prev = np.empty(n)
    x_prev[0] = np.nan
    x_prev[1:] = x[:-1]

    sup_upper = win_min + gamma
    sup_lower = win_min - gamma
    res_lower = win_max - gamma
    res_upper = win_max + gamma

    with np.errstate(invalid="ignore"):
        from_above = x_prev > sup_upper
        sup_enter = from_above & (x >= sup_lower) & (x <= sup_upper)
        sup_trav = from_above & (x < sup_lower)
        from_below = x_prev < res_lower
        res_enter = from_below & (x >= res_lower) & (x <= res_upper)
        res_trav = from_below & (x > res_upper)
        overlap = (win_max - win_min) <= 2.0 * gamma

    candidate = sup_enter | sup_trav | res_enter | res_trav
    candidate[: lag] = False
    cand_idx = np.flatnonzero(candidate)

    events: list[EntryEvent] = []
    diag = Diagnostics()
    pos = 0
    resume = lag
    while pos < len(cand_idx):
        t = int(cand_idx[pos])
        if t < resume:
            pos += 1
            continue
        if overlap[t]:
            diag.overlap_skips += 1
            pos += 1
            continue

        is_support = sup_enter[t] or sup_trav[t]
        window = x[t - lag : t]
        if is_support:
            kind = Kind.SUPPORT
            lower, upper = sup_lower[t], sup_upper[t]
            anchor = win_min[t]
            crossings = _support_crossings(window, upper)
        else:
            kind = Kind.RESISTANCE
            lower, upper = res_lower[t], res_upper[t]
            anchor = win_max[t]
            crossings = _resistance_crossings(window, lower)

        b_raw = len(crossings) // 2
        tsp = None
        if b_raw >= 1:
            # second crossing of the most recent completed bounce, window coords
            last_close = int(crossings[2 * b_raw - 1])
            tsp = t - (t - lag + last_close)
        clamped = b_raw > config.b_prev_cap
        if clamped:
            diag.cap_clamps += 1
        b_prev = min(b_raw, config.b_prev_cap)
        level = SrLevel(
            kind=kind,
            lower=float(lower),
            upper=float(upper),
            anchor=float(anchor),
            bounce_count=b_prev,
            last_bounce_offset=tsp,
        )

        if sup_trav[t] or res_trav[t]:
            # one-step traversal: the trend crossed the whole level
            exit_index = t
            outcome = Outcome.PENETRATION
        else:
            exit_index = _find_exit(x, t + 1, lower, upper)
            if exit_index < 0:
                diag.open_at_end += 1
                break
            cls = classify_exit(level, float(x[exit_index]))
            outcome = Outcome.BOUNCE if cls is ExitClass.BOUNCE else Outcome.PENETRATION

        events.append(
            EntryEvent(
                kind=kind,
                entry_index=t,
                exit_index=exit_index,
                b_prev=b_prev,
                outcome=outcome,
                time_since_prev_bounce=tsp,
                level=level,
                b_prev_clamped=clamped,
            )
        )
        resume = exit_index + 1
        pos = int(np.searchsorted(cand_idx, resume))
    return DetectionResult(
        events=events,
        gamma=gamma,
        config=config,
        series_id=series.series_id,
        diagnostics=diag,
    )
