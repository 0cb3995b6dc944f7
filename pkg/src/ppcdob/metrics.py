"""Tracking-error statistics, box-plot summaries and convergence diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .simcore import DomainError


@dataclass(frozen=True)
class ErrorSummary:
    rms: float
    max_abs: float
    mean_abs: float
    n: int


@dataclass(frozen=True)
class BoxStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    lower_fence: float
    upper_fence: float
    n_outliers: int


@dataclass(frozen=True)
class FiniteTimeParams:
    """Constants of V' + kappa1 V + kappa2 V**gamma <= 0."""

    kappa1: float
    kappa2: float
    gamma: float
    v0: float
    t0: float = 0.0

    def __post_init__(self):
        if not (self.kappa1 > 0 and self.kappa2 > 0):
            raise DomainError("kappa1 and kappa2 must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError("gamma must lie in (0, 1)")
        if not self.v0 >= 0.0:
            raise DomainError("v0 must be non-negative")


def summarize(errors: Sequence[float]) -> ErrorSummary:
    """RMS, max |e| and mean |e| (the mean is taken over absolute values)."""
    a = np.abs(np.asarray(errors, dtype=float))
    if a.size == 0:
        raise DomainError("cannot summarize an empty error sequence")
    # sorting makes the sums independent of sample order
    a = np.sort(a)
    return ErrorSummary(
        rms=float(math.sqrt(np.sum(a * a) / a.size)),
        max_abs=float(a[-1]),
        mean_abs=float(np.sum(a) / a.size),
        n=int(a.size),
    )


def box_stats(errors: Sequence[float]) -> BoxStats:
    """Five-number summary; quartiles interpolate linearly between order statistics (type 7)."""
    a = np.asarray(errors, dtype=float)
    if a.size == 0:
        raise DomainError("cannot summarize an empty error sequence")
    q1, med, q3 = np.quantile(a, [0.25, 0.5, 0.75], method="linear")
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    return BoxStats(
        min=float(a.min()), q1=float(q1), median=float(med), q3=float(q3), max=float(a.max()),
        lower_fence=float(lo), upper_fence=float(hi),
        n_outliers=int(np.count_nonzero((a < lo) | (a > hi))),
    )


def convergence_time(times: Sequence[float], errors: Sequence[float], threshold: float) -> float | None:
    """Earliest time after which |e| stays below ``threshold`` for the rest of the trace.

    The crossing is located by linear interpolation between the last sample
    at or above the threshold and the next one. Returns None if the final
    sample is not below the threshold.
    """
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    t = np.asarray(times, dtype=float)
    a = np.abs(np.asarray(errors, dtype=float))
    if a.size == 0 or a[-1] >= threshold:
        return None
    above = np.flatnonzero(a >= threshold)
    if above.size == 0:
        return float(t[0])
    i = int(above[-1])
    e0, e1 = a[i], a[i + 1]
    w = (e0 - threshold) / (e0 - e1)
    return float(t[i] + w * (t[i + 1] - t[i]))


def settling_time(times: Sequence[float], errors: Sequence[float], band: float) -> float | None:
    """Time to enter and stay inside a +/- ``band`` error band."""
    return convergence_time(times, errors, band)


def finite_time_bound(p: FiniteTimeParams) -> float:
    """Upper bound on the time for V to reach zero."""
    k1, k2, g = p.kappa1, p.kappa2, p.gamma
    return p.t0 + math.log((k1 * p.v0 ** (1.0 - g) + k2) / k2) / (k1 * (1.0 - g))
