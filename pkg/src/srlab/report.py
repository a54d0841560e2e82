"""File output for every pipeline: delimited tables plus a run manifest.

Every run directory gets a ``manifest.json`` recording the resolved
configuration, the gamma value actually used, the tool version, and the
RNG algorithm, so any output file can be regenerated bit-exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import srlab
from srlab.bayes import PosteriorTable
from srlab.engine import DetectionResult, Kind
from srlab.experiments import (
    DecayCurve,
    LambdaTable,
    LogisticFit,
    MedianStabilityTrace,
    significance_stars,
)

KIND_ORDER = (Kind.SUPPORT, Kind.RESISTANCE, Kind.COMBINED)


def _fmt(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return value


def write_table(path: Path, header: list[str], rows: list[list], fmt: str) -> None:
    """Write one result table as CSV or as a JSON list of records."""
    if fmt == "json":
        records = [dict(zip(header, row)) for row in rows]
        path.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_manifest(out_dir: Path, payload: dict) -> Path:
    manifest = dict(payload)
    manifest["tool_version"] = srlab.__version__
    manifest["rng_algorithm"] = srlab.RNG_ALGORITHM
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def event_rows(result: DetectionResult) -> tuple[list[str], list[list]]:
    header = [
        "kind", "entry_index", "exit_index", "b_prev", "outcome",
        "time_since_prev_bounce", "level_lower", "level_upper", "level_anchor",
        "b_prev_clamped", "series_id", "lag", "gamma", "b_prev_cap",
        "overlap_skips", "cap_clamps",
    ]
    diag = result.diagnostics
    rows = [
        [
            ev.kind.value, ev.entry_index, ev.exit_index, ev.b_prev,
            ev.outcome.value, ev.time_since_prev_bounce,
            ev.level.lower, ev.level.upper, ev.level.anchor,
            int(ev.b_prev_clamped), result.series_id,
            result.config.lag_window, result.gamma, result.config.b_prev_cap,
            diag.overlap_skips, diag.cap_clamps,
        ]
        for ev in result.events
    ]
    return header, rows


def posterior_rows(table: PosteriorTable) -> tuple[list[str], list[list]]:
    header = ["kind", "b_prev", "n", "k", "N", "mean", "sd"]
    keys = sorted(table, key=lambda k: (KIND_ORDER.index(k[0]), k[1]))
    rows = [
        [
            kind.value, b, table[(kind, b)].cell.n, table[(kind, b)].cell.k,
            table[(kind, b)].cell.total, table[(kind, b)].mean, table[(kind, b)].sd,
        ]
        for kind, b in keys
    ]
    return header, rows


def lambda_rows(table: LambdaTable, asset: str) -> tuple[list[str], list[list]]:
    """One row per (asset, type, lag); lambda per b_prev 1..8 as columns."""
    cap = max(b for _, b in table.rows)
    upper = min(cap, 8)
    header = ["asset", "type", "lag"] + [f"b_prev_{b}" for b in range(1, upper + 1)]
    rows = []
    for kind in KIND_ORDER:
        row: list = [asset, kind.value, table.lag]
        for b in range(1, upper + 1):
            lam = table.rows[(kind, b)].lam
            row.append(lam if lam is not None else None)
        rows.append(row)
    return header, rows


def lambda_detail_rows(table: LambdaTable) -> tuple[list[str], list[list]]:
    header = ["kind", "lag", "b_prev", "lambda", "wins", "replicate_count", "excluded"]
    keys = sorted(table.rows, key=lambda k: (KIND_ORDER.index(k[0]), k[1]))
    rows = [
        [
            kind.value, table.rows[(kind, b)].lag, b,
            table.rows[(kind, b)].lam, table.rows[(kind, b)].wins,
            table.rows[(kind, b)].replicate_count, table.rows[(kind, b)].excluded,
        ]
        for kind, b in keys
    ]
    return header, rows


def decay_rows(curves: list[DecayCurve]) -> tuple[list[str], list[list]]:
    header = ["kind", "b_prev", "lag", "mean", "sd", "N"]
    rows = [
        [c.kind.value, c.b_prev, p.lag, p.mean, p.sd, p.total]
        for c in curves
        for p in c.points
    ]
    return header, rows


def logistic_rows(fits: list[LogisticFit]) -> tuple[list[str], list[list]]:
    header = ["b_prev", "a", "b", "N", "se_a", "se_b", "p_a", "p_b",
              "stars_a", "stars_b", "converged", "failure"]
    rows = []
    for f in fits:
        stars_a = significance_stars(f.p_a) if f.failure is None else ""
        stars_b = significance_stars(f.p_b) if f.failure is None else ""
        rows.append([
            f.b_prev, f.a, f.b, f.total, f.se_a, f.se_b, f.p_a, f.p_b,
            stars_a, stars_b, int(f.converged), f.failure,
        ])
    return header, rows


def stability_rows(trace: MedianStabilityTrace) -> tuple[list[str], list[list]]:
    header = ["replicates_used", "running_median", "target_b_prev"]
    rows = [[r, m, trace.target_b_prev] for r, m in trace.points]
    return header, rows
