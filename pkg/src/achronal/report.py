"""CSV and JSON emission for experiment reports.

CSV holds rows only, so reruns are byte-identical; timings go to the JSON
summary.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .experiments import ExperimentReport


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([format_value(row[c]) for c in report.columns])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        # JSON has no inf/nan literals
        return f if math.isfinite(f) else str(f)
    return obj


def summary(report: ExperimentReport) -> dict:
    return {
        "experiment": report.experiment,
        "params": _jsonable(report.params),
        "verdicts": [_jsonable(v.as_dict()) for v in report.verdicts],
        "wall_ms": float(report.wall_ms),
    }


def write_report(report: ExperimentReport, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / f"{report.experiment}.csv", "json": out / f"{report.experiment}.json"}
    paths["csv"].write_text(to_csv(report))
    paths["json"].write_text(json.dumps(summary(report), indent=2) + "\n")
    return paths


def read_csv_rows(path: str | Path) -> list[dict]:
    """Rows with numeric fields parsed back to float."""
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for k, v in raw.items():
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
            rows.append(row)
    return rows
