"""
app/bench/output.py

  <out>/<scenario>.csv   scenario,series,parameter,client_ms,server_ms,operations
  <out>/<scenario>.gp    gnuplot script plotting the CSV
  <out>/summary.csv      per-curve slope, intercept, R², monotone flag
  <out>/<scenario>.png   with --plot (matplotlib, Agg backend)
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

POINT_COLUMNS = ("scenario", "series", "parameter", "client_ms", "server_ms", "operations")
SUMMARY_COLUMNS = ("scenario", "series", "side", "slope", "intercept", "r_squared", "monotone")


@dataclass(frozen=True)
class BenchPoint:
    scenario: str
    series: str
    parameter: int
    client_ms: float
    server_ms: float
    operations: int


@dataclass(frozen=True)
class CurveSummary:
    scenario: str
    series: str
    side: str  # client | server
    slope: float
    intercept: float
    r_squared: float
    monotone: bool


def _write_rows(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def write_points(out_dir: Path, scenario: str, points: Sequence[BenchPoint]) -> Path:
    rows = (
        {**asdict(p), "client_ms": f"{p.client_ms:.4f}", "server_ms": f"{p.server_ms:.4f}"} for p in points
    )
    return _write_rows(out_dir / f"{scenario}.csv", POINT_COLUMNS, rows)


def write_summary(out_dir: Path, summaries: Sequence[CurveSummary]) -> Path:
    rows = (
        {**asdict(s), "slope": f"{s.slope:.6f}", "intercept": f"{s.intercept:.6f}", "r_squared": f"{s.r_squared:.4f}"}
        for s in summaries
    )
    return _write_rows(out_dir / "summary.csv", SUMMARY_COLUMNS, rows)


def write_gnuplot(out_dir: Path, scenario: str, parameter: str, series: Sequence[str]) -> Path:
    plots = []
    for name in series:
        for column, side in ((4, "client"), (5, "server")):
            plots.append(
                f"'{scenario}.csv' using 3:(strcol(2) eq '{name}' ? ${column} : NaN) "
                f"with linespoints title '{name} {side}'"
            )
    script = "\n".join(
        [
            "set datafile separator ','",
            "set key autotitle columnhead",
            "set terminal pngcairo size 900,540",
            f"set output '{scenario}.png'",
            f"set title '{scenario}'",
            f"set xlabel '{parameter}'",
            "set ylabel 'milliseconds'",
            "set grid",
            "plot " + ", \\\n     ".join(plots),
            "",
        ]
    )
    path = out_dir / f"{scenario}.gp"
    path.write_text(script, encoding="utf-8")
    return path


def plot_png(out_dir: Path, scenario: str, parameter: str, points: Sequence[BenchPoint]) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(9, 5.4))
    for name in dict.fromkeys(p.series for p in points):
        curve = [p for p in points if p.series == name]
        xs = [p.parameter for p in curve]
        ax.plot(xs, [p.client_ms for p in curve], marker="o", label=f"{name} client")
        ax.plot(xs, [p.server_ms for p in curve], marker="s", linestyle="--", label=f"{name} server")
    ax.set_title(scenario)
    ax.set_xlabel(parameter)
    ax.set_ylabel("milliseconds")
    ax.yaxis.grid(True, linestyle="--", alpha=0.35)
    ax.legend(fontsize=8)
    path = out_dir / f"{scenario}.png"
    fig.savefig(path, dpi=140, bbox_inches="tight")
    plt.close(fig)
    logger.info("plot written to %s", path)
    return path
