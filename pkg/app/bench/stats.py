"""
app/bench/stats.py

Per-point medians and the per-curve least-squares line used for the
linearity and monotonicity checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Medians of short timings jitter; a drop smaller than this still counts as
# nondecreasing.
MONOTONE_TOLERANCE = 0.10


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def median(values: Sequence[float]) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


def linear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    xs, ys = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if xs.size < 2 or np.ptp(xs) == 0:
        return LinearFit(slope=0.0, intercept=float(ys.mean()) if ys.size else 0.0, r_squared=1.0)
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = ys - (slope * xs + intercept)
    ss_res = float(np.sum(residual**2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return LinearFit(slope=float(slope), intercept=float(intercept), r_squared=r_squared)


def is_monotone(y: Sequence[float], tolerance: float = MONOTONE_TOLERANCE) -> bool:
    ys = np.asarray(y, dtype=float)
    if ys.size < 2:
        return True
    running_max = np.maximum.accumulate(ys)
    return bool(np.all(ys >= running_max * (1.0 - tolerance)))
