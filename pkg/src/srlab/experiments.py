"""The three studies: permutation test, macro decay, micro decay.

Monte-Carlo replicates are independent tasks reduced in replicate order,
so results are identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import median

import numpy as np

from srlab.bayes import PosteriorTable, aggregate
from srlab.engine import DetectorConfig, EntryEvent, Kind, Outcome, detect_events
from srlab.series import Ar1Spec, PriceSeries, ShuffleSpec, shuffle_returns, simulate_ar1

ALL_KINDS = (Kind.SUPPORT, Kind.RESISTANCE, Kind.COMBINED)


@dataclass(frozen=True)
class LambdaRow:
    kind: Kind
    lag: int
    b_prev: int
    wins: int
    replicate_count: int  # comparisons actually made (shuffle cells with N=0 excluded)
    excluded: int

    @property
    def lam(self) -> float | None:
        if self.replicate_count == 0:
            return None
        return self.wins / self.replicate_count


@dataclass
class LambdaTable:
    series_id: str
    lag: int
    replicates: int
    seed: int
    rows: dict[tuple[Kind, int], LambdaRow]


@dataclass(frozen=True)
class DecayPoint:
    lag: int
    mean: float
    sd: float
    total: int


@dataclass(frozen=True)
class DecayCurve:
    kind: Kind
    b_prev: int
    points: tuple[DecayPoint, ...]


@dataclass(frozen=True)
class LogisticFit:
    b_prev: int
    a: float
    b: float
    se_a: float
    se_b: float
    p_a: float
    p_b: float
    total: int
    converged: bool
    failure: str | None = None


@dataclass(frozen=True)
class MedianStabilityTrace:
    target_b_prev: int
    points: tuple[tuple[int, float], ...]  # (replicates_used, running median)


def significance_stars(p: float) -> str:
    """Star annotation thresholds: <0.001, <0.01, <0.05."""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


# module-level state for pool workers, set once per worker by _init_worker
_WORK: dict = {}


def _init_worker(prices, series_id, config, seed):
    _WORK["series"] = PriceSeries(prices, None, series_id)
    _WORK["config"] = config
    _WORK["seed"] = seed


def _shuffle_cells(replicate: int):
    series = _WORK["series"]
    config = _WORK["config"]
    shuffled = shuffle_returns(series, ShuffleSpec(_WORK["seed"], replicate))
    table = aggregate(detect_events(shuffled, config).events, config.b_prev_cap)
    return {
        key: (post.mean, post.cell.total) for key, post in table.items()
    }


def _run_replicates(series, config, replicates, seed, workers):
    """Shuffle-side posterior summaries in replicate order."""
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(series.prices, series.series_id, config, seed),
        ) as pool:
            return list(pool.map(_shuffle_cells, range(replicates), chunksize=8))
    _init_worker(series.prices, series.series_id, config, seed)
    return [_shuffle_cells(r) for r in range(replicates)]


def permutation_lambda(
    series: PriceSeries,
    config: DetectorConfig,
    replicates: int,
    seed: int,
    workers: int | None = None,
) -> LambdaTable:
    """Estimated probability that the original series out-bounces a
    shuffled-returns surrogate, per (kind, b_prev).

    A replicate scores a win when the original's posterior mean strictly
    exceeds the replicate's; ties are non-wins.  Shuffle cells with no
    events are excluded from that row's denominator.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    cap = config.b_prev_cap
    original = aggregate(detect_events(series, config).events, cap)
    rep_cells = _run_replicates(series, config, replicates, seed, workers)

    rows: dict[tuple[Kind, int], LambdaRow] = {}
    for kind in ALL_KINDS:
        for b in range(cap + 1):
            key = (kind, b)
            p_o = original[key].mean
            wins = used = excluded = 0
            for cells in rep_cells:
                p_s, n_s = cells[key]
                if n_s == 0:
                    excluded += 1
                    continue
                used += 1
                if p_o > p_s:
                    wins += 1
            rows[key] = LambdaRow(
                kind=kind,
                lag=config.lag_window,
                b_prev=b,
                wins=wins,
                replicate_count=used,
                excluded=excluded,
            )
    return LambdaTable(
        series_id=series.series_id,
        lag=config.lag_window,
        replicates=replicates,
        seed=seed,
        rows=rows,
    )


def median_stability(
    series: PriceSeries,
    config: DetectorConfig,
    max_replicates: int,
    target_b_prev: int,
    seed: int,
    kind: Kind = Kind.COMBINED,
    workers: int | None = None,
) -> MedianStabilityTrace:
    """Running median of the shuffle-side posterior mean at one b_prev as
    replicates accumulate."""
    if max_replicates < 2:
        raise ValueError("max_replicates must be >= 2")
    rep_cells = _run_replicates(series, config, max_replicates, seed, workers)
    means: list[float] = []
    points = []
    for r, cells in enumerate(rep_cells, start=1):
        means.append(cells[(kind, target_b_prev)][0])
        points.append((r, float(median(means))))
    return MedianStabilityTrace(target_b_prev=target_b_prev, points=tuple(points))


def macro_decay_sweep(
    series: PriceSeries,
    lags: list[int],
    b_prev_range: list[int] | None = None,
    gamma: float | str = "auto",
    b_prev_cap: int = 8,
) -> list[DecayCurve]:
    """Posterior mean/sd per b_prev across lag window lengths.

    Gamma is resolved once from the whole series, so every lag uses the
    same level width.
    """
    if b_prev_range is None:
        b_prev_range = [1, 2, 3, 4]
    lags = list(lags)
    if any(lag >= len(series) for lag in lags):
        raise ValueError("lag too large for series")
    tables: dict[int, PosteriorTable] = {}
    for lag in lags:
        config = DetectorConfig(lag_window=lag, gamma=gamma, b_prev_cap=b_prev_cap)
        tables[lag] = aggregate(detect_events(series, config).events, b_prev_cap)
    curves = []
    for kind in ALL_KINDS:
        for b in b_prev_range:
            pts = tuple(
                DecayPoint(
                    lag=lag,
                    mean=tables[lag][(kind, b)].mean,
                    sd=tables[lag][(kind, b)].sd,
                    total=tables[lag][(kind, b)].cell.total,
                )
                for lag in lags
            )
            curves.append(DecayCurve(kind=kind, b_prev=b, points=pts))
    return curves


def _log_likelihood(y: np.ndarray, eta: np.ndarray) -> float:
    # log L = sum y*eta - log(1+exp(eta)), stable for large |eta|
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def _is_separated(x: np.ndarray, y: np.ndarray) -> bool:
    x1, x0 = x[y == 1], x[y == 0]
    return float(x1.max()) < float(x0.min()) or float(x0.max()) < float(x1.min())


def fit_logistic(x: np.ndarray, y: np.ndarray, b_prev: int = -1) -> LogisticFit:
    """Maximum-likelihood logistic fit of y on x by IRLS.

    Standard errors come from the observed information at the optimum;
    p-values are two-sided Wald.  Degenerate inputs (single-class y,
    constant x, perfect separation) are reported via the failure field
    with non-finite coefficients.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)

    def failed(reason):
        return LogisticFit(
            b_prev=b_prev,
            a=math.nan, b=math.nan, se_a=math.nan, se_b=math.nan,
            p_a=math.nan, p_b=math.nan, total=n, converged=False,
            failure=reason,
        )

    if n < 2:
        return failed("fewer than 2 observations")
    if y.min() == y.max():
        return failed("single-class outcomes")
    if x.min() == x.max():
        return failed("constant regressor")
    if _is_separated(x, y):
        return failed("perfect separation")

    design = np.column_stack([np.ones(n), x])
    beta = np.zeros(2)
    ll_prev = _log_likelihood(y, design @ beta)
    converged = False
    for _ in range(50):
        eta = design @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu)
        w = np.maximum(w, 1e-12)
        z = eta + (y - mu) / w
        wd = design * w[:, None]
        beta = np.linalg.solve(design.T @ wd, design.T @ (w * z))
        ll = _log_likelihood(y, design @ beta)
        if abs(ll - ll_prev) < 1e-8 * (abs(ll_prev) + 1e-8):
            converged = True
            break
        ll_prev = ll
        if np.max(np.abs(beta)) > 1e6:
            return failed("diverging coefficients (quasi-separation)")

    eta = design @ beta
    mu = 1.0 / (1.0 + np.exp(-eta))
    w = mu * (1.0 - mu)
    info = design.T @ (design * w[:, None])
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    zval = beta / se
    pvals = [math.erfc(abs(v) / math.sqrt(2.0)) for v in zval]
    return LogisticFit(
        b_prev=b_prev,
        a=float(beta[0]),
        b=float(beta[1]),
        se_a=float(se[0]),
        se_b=float(se[1]),
        p_a=float(pvals[0]),
        p_b=float(pvals[1]),
        total=n,
        converged=converged,
    )


def logistic_fit(
    events: list[EntryEvent],
    b_prev: int,
    x_transform=None,
) -> LogisticFit:
    """Micro-decay model for one b_prev: bounce odds against time since the
    level's previous bounce."""
    xs, ys = [], []
    for ev in events:
        if ev.b_prev == b_prev and ev.time_since_prev_bounce is not None:
            xs.append(float(ev.time_since_prev_bounce))
            ys.append(1.0 if ev.outcome is Outcome.BOUNCE else 0.0)
    x = np.array(xs)
    if x_transform is not None and len(x):
        x = np.asarray(x_transform(x), dtype=float)
    return fit_logistic(x, np.array(ys), b_prev=b_prev)


def ar1_study(
    rhos: list[float],
    length: int,
    config: DetectorConfig,
    seed: int,
) -> dict[float, dict[str, PosteriorTable]]:
    """Posterior tables for simulated AR(1) series and one shuffled-returns
    surrogate of each."""
    out: dict[float, dict[str, PosteriorTable]] = {}
    for i, rho in enumerate(rhos):
        series = simulate_ar1(
            Ar1Spec(rho=rho, length=length, noise_sd=1.0, initial_value=0.0, seed=seed + i)
        )
        original = aggregate(detect_events(series, config).events, config.b_prev_cap)
        shuffled = shuffle_returns(series, ShuffleSpec(seed + i, 0))
        surrogate = aggregate(detect_events(shuffled, config).events, config.b_prev_cap)
        out[rho] = {"original": original, "shuffled": surrogate}
    return out
