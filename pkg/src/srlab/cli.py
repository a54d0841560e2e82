"""Command-line front end for the discovery and evaluation pipelines.

Every command writes result files named ``<command>_<series-id>_<lag>``
plus a ``manifest.json`` into the output directory, prints the files it
wrote, and exits nonzero with a one-line diagnostic on failure (removing
any partial outputs).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

import srlab
from srlab.bayes import aggregate
from srlab.engine import DetectorConfig, EngineError, detect_events
from srlab.experiments import (
    ar1_study,
    logistic_fit,
    macro_decay_sweep,
    median_stability,
    permutation_lambda,
)
from srlab.series import Ar1Spec, SeriesError, load_series, simulate_ar1
from srlab import plotting, report

DEFAULT_LAGS = ",".join(str(lag) for lag in range(30, 1441, 30))


class Run:
    """Tracks files written by one command so failures can clean up."""

    def __init__(self, out_dir: Path, fmt: str):
        out_dir.mkdir(parents=True, exist_ok=True)
        self.out_dir = out_dir
        self.fmt = fmt
        self.written: list[Path] = []

    def table(self, stem: str, header, rows) -> Path:
        path = self.out_dir / f"{stem}.{self.fmt}"
        report.write_table(path, header, rows, self.fmt)
        self.written.append(path)
        return path

    def figure(self, render, payload, stem: str, title: str) -> Path:
        path = self.out_dir / f"{stem}.png"
        render(payload, path, title)
        self.written.append(path)
        return path

    def manifest(self, payload: dict) -> Path:
        payload = dict(payload)
        payload["output_files"] = [p.name for p in self.written]
        path = report.write_manifest(self.out_dir, payload)
        self.written.append(path)
        return path

    def cleanup(self) -> None:
        for path in self.written:
            path.unlink(missing_ok=True)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load(input_path: str, price_col, ts_col, vol_col):
    column_map = {}
    if price_col:
        column_map["price"] = price_col
    if ts_col:
        column_map["timestamp"] = ts_col
    if vol_col:
        column_map["volume"] = vol_col
    return load_series(input_path, column_map or None)


def validate_run(
    *,
    input_path: str | None = None,
    lag: int = 60,
    gamma: str = "auto",
    bprev_cap: int = 8,
    replicates: int | None = None,
    length: int | None = None,
) -> list[str]:
    """All configuration problems, without executing anything."""
    problems = []
    if lag < 2:
        problems.append("lag must be >= 2")
    if gamma != "auto":
        try:
            if float(gamma) <= 0:
                problems.append("gamma must be positive")
        except ValueError:
            problems.append(f"gamma must be 'auto' or a number, got {gamma!r}")
    if bprev_cap < 1:
        problems.append("bprev-cap must be >= 1")
    if replicates is not None and replicates < 1:
        problems.append("replicates must be >= 1")
    if length is not None and length <= lag:
        problems.append("length must exceed lag")
    if input_path is not None:
        path = Path(input_path)
        if not path.exists():
            problems.append(f"input file not found: {path}")
        else:
            try:
                series = load_series(path)
                if len(series) <= lag:
                    problems.append(
                        f"lag {lag} exceeds usable length ({len(series)} rows)"
                    )
            except SeriesError as exc:
                problems.append(str(exc))
    return problems


def _maybe_validate(validate: bool, **kwargs) -> None:
    if not validate:
        return
    problems = validate_run(**kwargs)
    for problem in problems:
        click.echo(problem)
    sys.exit(0 if not problems else 1)


def _gamma_value(gamma: str) -> float | str:
    return gamma if gamma == "auto" else float(gamma)


def _finish(run: Run) -> None:
    for path in run.written:
        click.echo(str(path))


def _execute(run: Run, body) -> None:
    try:
        body()
    except (SeriesError, EngineError, ValueError, OSError) as exc:
        run.cleanup()
        _fail(str(exc))
    _finish(run)


input_opt = click.option("--input", "input_path", required=True, help="Input price CSV.")
lag_opt = click.option("--lag", default=60, show_default=True, help="Lag window length in steps.")
gamma_opt = click.option("--gamma", default="auto", show_default=True,
                         help="Level half-width: 'auto' or a price value.")
cap_opt = click.option("--bprev-cap", default=8, show_default=True,
                       help="Clamp for previous-bounce counts.")
seed_opt = click.option("--seed", default=0, show_default=True, envvar="SRLAB_SEED",
                        help="Base RNG seed (env: SRLAB_SEED).")
out_opt = click.option("--out", "out_dir", default=".", show_default=True,
                       help="Output directory.")
fmt_opt = click.option("--format", "fmt", default="csv", show_default=True,
                       type=click.Choice(["csv", "json"]))
workers_opt = click.option("--workers", default=1, show_default=True,
                           help="Worker processes for replicate runs.")
plots_opt = click.option("--plots", is_flag=True, help="Also render PNG figures.")
validate_opt = click.option("--validate", is_flag=True,
                            help="Report config problems and exit without running.")
price_col_opt = click.option("--price-column", default=None, help="Price column name.")
ts_col_opt = click.option("--timestamp-column", default=None, help="Timestamp column name.")
vol_col_opt = click.option("--volume-column", default=None,
                           help="Volume column name; zero-volume rows are dropped.")


def _series_options(fn):
    for opt in (vol_col_opt, ts_col_opt, price_col_opt):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(srlab.__version__)
def main():
    """Support/resistance level discovery and statistical evaluation."""


@main.command()
@input_opt
@lag_opt
@gamma_opt
@cap_opt
@out_opt
@fmt_opt
@validate_opt
@_series_options
def detect(input_path, lag, gamma, bprev_cap, out_dir, fmt, validate,
           price_column, timestamp_column, volume_column):
    """Write the level-entry event log for one series."""
    _maybe_validate(validate, input_path=input_path, lag=lag, gamma=gamma,
                    bprev_cap=bprev_cap)
    run = Run(Path(out_dir), fmt)

    def body():
        series = _load(input_path, price_column, timestamp_column, volume_column)
        config = DetectorConfig(lag_window=lag, gamma=_gamma_value(gamma),
                                b_prev_cap=bprev_cap)
        result = detect_events(series, config)
        run.table(f"detect_{series.series_id}_{lag}", *report.event_rows(result))
        run.manifest({
            "command": "detect",
            "input": str(Path(input_path)),
            "series_id": series.series_id,
            "lag": lag,
            "gamma_requested": gamma,
            "gamma_resolved": result.gamma,
            "b_prev_cap": bprev_cap,
            "format": fmt,
            "events": len(result.events),
            "overlap_skips": result.diagnostics.overlap_skips,
            "cap_clamps": result.diagnostics.cap_clamps,
        })

    _execute(run, body)


@main.command()
@input_opt
@lag_opt
@gamma_opt
@cap_opt
@out_opt
@fmt_opt
@plots_opt
@validate_opt
@_series_options
def posterior(input_path, lag, gamma, bprev_cap, out_dir, fmt, plots, validate,
              price_column, timestamp_column, volume_column):
    """Write the conditional bounce-probability posterior table."""
    _maybe_validate(validate, input_path=input_path, lag=lag, gamma=gamma,
                    bprev_cap=bprev_cap)
    run = Run(Path(out_dir), fmt)

    def body():
        series = _load(input_path, price_column, timestamp_column, volume_column)
        config = DetectorConfig(lag_window=lag, gamma=_gamma_value(gamma),
                                b_prev_cap=bprev_cap)
        result = detect_events(series, config)
        table = aggregate(result.events, bprev_cap)
        stem = f"posterior_{series.series_id}_{lag}"
        run.table(stem, *report.posterior_rows(table))
        if plots:
            run.figure(plotting.plot_posterior, table, stem,
                       f"{series.series_id} lag={lag}")
        run.manifest({
            "command": "posterior",
            "input": str(Path(input_path)),
            "series_id": series.series_id,
            "lag": lag,
            "gamma_requested": gamma,
            "gamma_resolved": result.gamma,
            "b_prev_cap": bprev_cap,
            "format": fmt,
        })

    _execute(run, body)


@main.command()
@input_opt
@lag_opt
@gamma_opt
@cap_opt
@click.option("--replicates", default=1000, show_default=True)
@seed_opt
@out_opt
@fmt_opt
@workers_opt
@plots_opt
@validate_opt
@_series_options
def permtest(input_path, lag, gamma, bprev_cap, replicates, seed, out_dir, fmt,
             workers, plots, validate, price_column, timestamp_column, volume_column):
    """Shuffled-returns permutation test of level strength."""
    _maybe_validate(validate, input_path=input_path, lag=lag, gamma=gamma,
                    bprev_cap=bprev_cap, replicates=replicates)
    run = Run(Path(out_dir), fmt)

    def body():
        series = _load(input_path, price_column, timestamp_column, volume_column)
        config = DetectorConfig(lag_window=lag, gamma=_gamma_value(gamma),
                                b_prev_cap=bprev_cap)
        table = permutation_lambda(series, config, replicates, seed, workers=workers)
        stem = f"permtest_{series.series_id}_{lag}"
        run.table(stem, *report.lambda_rows(table, series.series_id))
        run.table(f"{stem}_detail", *report.lambda_detail_rows(table))
        if plots:
            run.figure(plotting.plot_lambda, table, stem,
                       f"{series.series_id} lag={lag} replicates={replicates}")
        run.manifest({
            "command": "permtest",
            "input": str(Path(input_path)),
            "series_id": series.series_id,
            "lag": lag,
            "gamma_requested": gamma,
            "gamma_resolved": config.resolve_gamma(series),
            "b_prev_cap": bprev_cap,
            "replicates": replicates,
            "seed": seed,
            "workers": workers,
            "format": fmt,
        })

    _execute(run, body)


@main.command()
@input_opt
@click.option("--lags", default=DEFAULT_LAGS, show_default=False,
              help="Comma-separated lag windows (default 30..1440 step 30).")
@gamma_opt
@cap_opt
@out_opt
@fmt_opt
@plots_opt
@validate_opt
@_series_options
def macro(input_path, lags, gamma, bprev_cap, out_dir, fmt, plots, validate,
          price_column, timestamp_column, volume_column):
    """Bounce-probability decay across lag window lengths."""
    try:
        lag_list = sorted({int(v) for v in lags.split(",") if v.strip()})
    except ValueError:
        _fail(f"unparseable --lags value: {lags!r}")
    if not lag_list:
        _fail("--lags is empty")
    _maybe_validate(validate, input_path=input_path, lag=lag_list[0], gamma=gamma,
                    bprev_cap=bprev_cap)
    run = Run(Path(out_dir), fmt)

    def body():
        series = _load(input_path, price_column, timestamp_column, volume_column)
        curves = macro_decay_sweep(series, lag_list, gamma=_gamma_value(gamma),
                                   b_prev_cap=bprev_cap)
        stem = f"macro_{series.series_id}_{lag_list[0]}-{lag_list[-1]}"
        run.table(stem, *report.decay_rows(curves))
        if plots:
            run.figure(plotting.plot_decay, curves, stem, series.series_id)
        run.manifest({
            "command": "macro",
            "input": str(Path(input_path)),
            "series_id": series.series_id,
            "lags": lag_list,
            "gamma_requested": gamma,
            "b_prev_cap": bprev_cap,
            "format": fmt,
        })

    _execute(run, body)


@main.command()
@input_opt
@lag_opt
@gamma_opt
@cap_opt
@out_opt
@fmt_opt
@validate_opt
@_series_options
def micro(input_path, lag, gamma, bprev_cap, out_dir, fmt, validate,
          price_column, timestamp_column, volume_column):
    """Logistic fits of bounce odds vs time since the previous bounce."""
    _maybe_validate(validate, input_path=input_path, lag=lag, gamma=gamma,
                    bprev_cap=bprev_cap)
    run = Run(Path(out_dir), fmt)

    def body():
        series = _load(input_path, price_column, timestamp_column, volume_column)
        config = DetectorConfig(lag_window=lag, gamma=_gamma_value(gamma),
                                b_prev_cap=bprev_cap)
        result = detect_events(series, config)
        fits = [logistic_fit(result.events, b) for b in range(1, bprev_cap + 1)]
        run.table(f"micro_{series.series_id}_{lag}", *report.logistic_rows(fits))
        run.manifest({
            "command": "micro",
            "input": str(Path(input_path)),
            "series_id": series.series_id,
            "lag": lag,
            "gamma_requested": gamma,
            "gamma_resolved": result.gamma,
            "b_prev_cap": bprev_cap,
            "format": fmt,
        })

    _execute(run, body)


@main.command()
@click.option("--rho", "rhos", multiple=True, type=float, default=(1.0, 0.95, 0.9),
              show_default=True, help="AR(1) coefficient; repeatable.")
@click.option("--length", default=1_000_000, show_default=True)
@lag_opt
@gamma_opt
@cap_opt
@seed_opt
@out_opt
@fmt_opt
@plots_opt
@validate_opt
def ar1(rhos, length, lag, gamma, bprev_cap, seed, out_dir, fmt, plots, validate):
    """Posterior tables for simulated AR(1) series and shuffled surrogates."""
    _maybe_validate(validate, lag=lag, gamma=gamma, bprev_cap=bprev_cap,
                    length=length)
    run = Run(Path(out_dir), fmt)

    def body():
        config = DetectorConfig(lag_window=lag, gamma=_gamma_value(gamma),
                                b_prev_cap=bprev_cap)
        tables = ar1_study(list(rhos), length, config, seed)
        for rho, pair in tables.items():
            series_id = f"ar1_rho{rho:g}"
            for side, table in pair.items():
                stem = f"ar1_{series_id}_{side}_{lag}"
                run.table(stem, *report.posterior_rows(table))
                if plots:
                    run.figure(plotting.plot_posterior, table, stem,
                               f"{series_id} ({side}) lag={lag}")
        run.manifest({
            "command": "ar1",
            "rhos": list(rhos),
            "length": length,
            "lag": lag,
            "gamma_requested": gamma,
            "b_prev_cap": bprev_cap,
            "seed": seed,
            "format": fmt,
        })

    _execute(run, body)


@main.command()
@input_opt
@lag_opt
@gamma_opt
@cap_opt
@click.option("--replicates", default=100, show_default=True,
              help="Maximum shuffle replicates for the trace.")
@click.option("--target-bprev", default=8, show_default=True)
@seed_opt
@out_opt
@fmt_opt
@workers_opt
@plots_opt
@validate_opt
@_series_options
def stability(input_path, lag, gamma, bprev_cap, replicates, target_bprev, seed,
              out_dir, fmt, workers, plots, validate,
              price_column, timestamp_column, volume_column):
    """Running-median convergence diagnostic for the shuffle estimates."""
    _maybe_validate(validate, input_path=input_path, lag=lag, gamma=gamma,
                    bprev_cap=bprev_cap, replicates=replicates)
    run = Run(Path(out_dir), fmt)

    def body():
        series = _load(input_path, price_column, timestamp_column, volume_column)
        config = DetectorConfig(lag_window=lag, gamma=_gamma_value(gamma),
                                b_prev_cap=bprev_cap)
        trace = median_stability(series, config, replicates, target_bprev, seed,
                                 workers=workers)
        stem = f"stability_{series.series_id}_{lag}"
        run.table(stem, *report.stability_rows(trace))
        if plots:
            run.figure(plotting.plot_stability, trace, stem,
                       f"{series.series_id} lag={lag}")
        run.manifest({
            "command": "stability",
            "input": str(Path(input_path)),
            "series_id": series.series_id,
            "lag": lag,
            "gamma_requested": gamma,
            "b_prev_cap": bprev_cap,
            "replicates": replicates,
            "target_b_prev": target_bprev,
            "seed": seed,
            "workers": workers,
            "format": fmt,
        })

    _execute(run, body)


if __name__ == "__main__":
    main()
