"""
app/bench/runner.py

Runs the registered scenarios: every (series, sweep point) is measured
`repetitions` times and the medians are written out, one CSV per scenario.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from tqdm import tqdm

from app.bench.output import (
    BenchPoint,
    CurveSummary,
    plot_png,
    write_gnuplot,
    write_points,
    write_summary,
)
from app.bench.scenarios import MIN_REPETITIONS, SCENARIOS, BenchScenario
from app.bench.stats import is_monotone, linear_fit, median
from app.bench.workload import BenchContext
from app.core.exceptions import UnsupportedSecurityParameter
from app.core.logging_config import configure_logging
from app.models.enums import ParameterProfile

logger = logging.getLogger(__name__)

# toy exponents collide within a handful of tokens
BENCH_PROFILES = (ParameterProfile.TEST.value, ParameterProfile.PRODUCTION.value)


def run_scenario(
    ctx: BenchContext, scenario: BenchScenario, repetitions: int, progress: bool = True
) -> list[BenchPoint]:
    repetitions = max(repetitions, scenario.repetitions)
    points: list[BenchPoint] = []
    grid = [(series, n) for series in scenario.series for n in scenario.sweep]
    for series, n in tqdm(grid, desc=scenario.name, unit="pt", disable=not progress, file=sys.stderr):
        samples = [scenario.measure(ctx, series, n) for _ in range(repetitions)]
        points.append(
            BenchPoint(
                scenario=scenario.name,
                series=series,
                parameter=n,
                client_ms=median([s.client_s for s in samples]) * 1000.0,
                server_ms=median([s.server_s for s in samples]) * 1000.0,
                operations=samples[-1].operations,
            )
        )
    return points


def summarize(points: Sequence[BenchPoint]) -> list[CurveSummary]:
    summaries: list[CurveSummary] = []
    for scenario, series in dict.fromkeys((p.scenario, p.series) for p in points):
        curve = sorted((p for p in points if p.scenario == scenario and p.series == series), key=lambda p: p.parameter)
        xs = [p.parameter for p in curve]
        for side in ("client", "server"):
            ys = [getattr(p, f"{side}_ms") for p in curve]
            fit = linear_fit(xs, ys)
            summaries.append(
                CurveSummary(
                    scenario=scenario,
                    series=series,
                    side=side,
                    slope=fit.slope,
                    intercept=fit.intercept,
                    r_squared=fit.r_squared,
                    monotone=is_monotone(ys),
                )
            )
    return summaries


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m app.bench", description="Encrypted RBAC benchmarks")
    parser.add_argument(
        "--scenario",
        action="append",
        default=None,
        help=f"scenario name or 'all' (repeatable); one of {', '.join(SCENARIOS)}",
    )
    parser.add_argument("--profile", default=ParameterProfile.TEST.value, choices=BENCH_PROFILES)
    parser.add_argument("--repetitions", type=int, default=MIN_REPETITIONS)
    parser.add_argument("--out", type=Path, default=Path("bench-out"))
    parser.add_argument("--plot", action="store_true", help="also render PNGs with matplotlib")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--quiet", action="store_true", help="no progress bars")
    return parser


def _selected(names: Optional[list[str]]) -> list[BenchScenario]:
    if not names or "all" in names:
        return list(SCENARIOS.values())
    unknown = [n for n in names if n not in SCENARIOS]
    if unknown:
        raise KeyError(", ".join(unknown))
    return [SCENARIOS[n] for n in names]


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(logging.INFO, stream=sys.stderr)
    try:
        scenarios = _selected(args.scenario)
    except KeyError as exc:
        print(f"error: unknown scenario {exc.args[0]}", file=sys.stderr)
        return 2
    if args.repetitions < MIN_REPETITIONS:
        print(f"error: --repetitions must be at least {MIN_REPETITIONS}", file=sys.stderr)
        return 2

    try:
        ctx = BenchContext.create(args.profile, seed=args.seed)
    except UnsupportedSecurityParameter as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    all_points: list[BenchPoint] = []
    for scenario in scenarios:
        logger.info("running %s (%s)", scenario.name, scenario.description)
        points = run_scenario(ctx, scenario, args.repetitions, progress=not args.quiet)
        all_points.extend(points)
        write_points(out, scenario.name, points)
        write_gnuplot(out, scenario.name, scenario.parameter, scenario.series)
        if args.plot:
            plot_png(out, scenario.name, scenario.parameter, points)

    summaries = write_summary(out, summarize(all_points))
    logger.info("wrote %d scenario(s) to %s (summary: %s)", len(scenarios), out, summaries.name)
    return 0
