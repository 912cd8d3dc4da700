"""CSV and verdict-file emission.

CSV files are RFC-4180 style with a header row, '.' decimal separator, and
full double precision (17 significant digits), so reruns with identical
configurations are bit-identical.  Verdict files are JSON and additionally
carry wall-clock times, which are excluded from determinism comparisons.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagonal import ThreeSeriesReport, TraceSample
from .flows import FlowSample


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def flow_frames_to_csv(flow: FlowSample, path) -> Path:
    """One row per grid time: the time, then the row-major frame entries."""
    d = flow.dim
    header = ["time"] + [f"m{i}{j}" for i in range(d) for j in range(d)]
    rows = ([t] + list(frame.ravel()) for t, frame in zip(flow.times, flow.frames))
    return write_csv(path, header, rows)


def _subsample(n: int, max_rows: int) -> np.ndarray:
    if n <= max_rows:
        return np.arange(n)
    idx = np.unique(np.geomspace(1, n, max_rows).astype(np.int64)) - 1
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def trace_to_csv(trace: TraceSample, path, max_rows: int = 1000) -> Path:
    idx = _subsample(trace.k.size, max_rows)
    rows = zip(trace.k[idx], trace.partial_sums[idx], trace.analytic_mean[idx])
    return write_csv(path, ["k", "partial_sum", "analytic_mean"], rows)


def three_series_to_csv(report: ThreeSeriesReport, path, max_rows: int = 1000) -> Path:
    idx = _subsample(report.k.size, max_rows)
    rows = zip(report.k[idx], report.prob_partial[idx],
               report.mean_partial[idx], report.var_partial[idx])
    return write_csv(path, ["k", "prob_exceed_partial", "mean_truncated_partial",
                            "var_truncated_partial"], rows)


@dataclass(frozen=True)
class Criterion:
    """One named pass/fail line of an experiment verdict."""

    name: str
    passed: bool
    value: float | str
    threshold: str

    def describe(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: value={format_value(self.value)} ({self.threshold})"


def write_verdict(path, experiment: str, criteria, config: dict,
                  wall_time_s: float) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "experiment": experiment,
        "passed": all(c.passed for c in criteria),
        "criteria": [
            {"name": c.name, "passed": bool(c.passed),
             "value": c.value if isinstance(c.value, str) else float(c.value),
             "threshold": c.threshold}
            for c in criteria
        ],
        "config": config,
        "wall_time_s": wall_time_s,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path
