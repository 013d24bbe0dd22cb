"""Single-series line plots written as SVG with reproducible bytes."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import ExperimentReport  # noqa: E402

STYLE = {
    "svg.hashsalt": "achronal",
    "svg.fonttype": "none",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (5.0, 3.5),
}


def series(report: ExperimentReport) -> tuple[list[float], list[float], list[float] | None]:
    if report.plot is None:
        raise ValueError(f"{report.experiment} has no plottable series")
    xcol, ycol = report.plot
    xs, ys, errs = [], [], []
    for r in report.rows:
        x = float(r[xcol])
        if math.isfinite(x):
            xs.append(x)
            ys.append(float(r[ycol]))
            errs.append(float(r.get("error_estimate", 0.0)))
    return xs, ys, errs


def plot_report(report: ExperimentReport, path: str | Path) -> Path:
    xs, ys, errs = series(report)
    xcol, ycol = report.plot
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.errorbar(xs, ys, yerr=errs, marker="o", ms=3, lw=1.2, capsize=2)
        limit = [r for r in report.rows if not math.isfinite(float(r[xcol]))]
        if limit:
            ax.axhline(float(limit[0][ycol]), color="0.4", ls="--", lw=0.8, label=f"{xcol} = inf")
            ax.legend(frameon=False)
        ax.set_xlabel(xcol)
        ax.set_ylabel(ycol)
        ax.set_title(report.experiment)
        fig.tight_layout()
        path = Path(path)
        # no timestamp so reruns produce identical files
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
