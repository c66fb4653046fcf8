"""Statistics of the NLI cost: empirical cdf, tail exponent, cubic scaling and gamma fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import SymbolSequence, _unit_gaussian, stream
from .selection import CostChannel, window_costs

__all__ = [
    "DegenerateError",
    "EmpiricalDistribution",
    "GammaFit",
    "ScalingSummary",
    "empirical_cdf",
    "tail_exponent",
    "cubic_scaling_check",
    "gamma_fit_moments",
    "rank_correlation",
    "paired_window_costs",
    "cdf_rows",
    "histogram_rows",
]

DEFAULT_TAIL = (0.0, 0.02)
MIN_TAIL_POINTS = 200


class DegenerateError(ValueError):
    """Samples carry no spread to fit."""


@dataclass(frozen=True)
class EmpiricalDistribution:
    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size < 2:
            raise ValueError("an empirical distribution needs at least two samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("samples must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return self.values.size

    def cdf(self, x):
        """Right-continuous step cdf ``#{v <= x} / count``."""
        return np.searchsorted(self.values, x, side="right") / self.count

    def quantile(self, q):
        """Smallest sample ``v`` with ``cdf(v) >= q``."""
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)):
            raise ValueError("quantile levels must lie in [0, 1]")
        idx = np.clip(np.ceil(np.round(q * self.count, 9)).astype(int) - 1, 0, self.count - 1)
        return self.values[idx]


def empirical_cdf(samples) -> EmpiricalDistribution:
    return EmpiricalDistribution(samples)


def tail_exponent(dist: EmpiricalDistribution, lower_quantile_range=DEFAULT_TAIL, *,
                  min_points: int = MIN_TAIL_POINTS) -> float:
    """Least-squares slope of ``log F`` against ``log x`` over a lower-tail quantile range.

    The fit uses the sample points whose cdf level lies in ``(lo, hi]``;
    non-positive samples are skipped since the log is undefined there.
    """
    lo, hi = lower_quantile_range
    if not 0 <= lo < hi <= 0.2:
        raise ValueError("tail range must satisfy 0 <= lo < hi <= 0.2")
    level = np.arange(1, dist.count + 1) / dist.count
    sel = (level > lo) & (level <= hi) & (dist.values > 0)
    if np.count_nonzero(sel) < min_points:
        raise ValueError(f"only {np.count_nonzero(sel)} tail points, need {min_points}")
    # ties share the cdf level of their last occurrence
    F = dist.cdf(dist.values[sel])
    slope, _ = np.polyfit(np.log(dist.values[sel]), np.log(F), 1)
    return float(slope)


@dataclass(frozen=True)
class ScalingSummary:
    median_ratio: float
    iqr: float
    expected: float
    count: int
    passed: bool


def cubic_scaling_check(costs_p1, costs_p2, power_ratio: float, *, rel_tol: float = 0.10) -> ScalingSummary:
    """Per-sequence ratio of the costs at two powers against ``power_ratio ** 3``."""
    c1 = np.asarray(costs_p1, dtype=float)
    c2 = np.asarray(costs_p2, dtype=float)
    if c1.shape != c2.shape or c1.ndim != 1:
        raise ValueError("costs must be paired one-dimensional arrays of equal length")
    if not power_ratio > 1:
        raise ValueError("power ratio must exceed one")
    ok = c1 > 0
    if not np.any(ok):
        raise DegenerateError("no positive reference costs")
    r = c2[ok] / c1[ok]
    q1, med, q3 = np.percentile(r, [25, 50, 75])
    expected = power_ratio**3
    return ScalingSummary(float(med), float(q3 - q1), expected, int(r.size),
                          bool(abs(med - expected) <= rel_tol * expected))


@dataclass(frozen=True)
class GammaFit:
    shape: float
    mean: float

    def __post_init__(self):
        if not (self.shape > 0 and self.mean > 0):
            raise ValueError("gamma parameters must be positive")


def gamma_fit_moments(samples) -> GammaFit:
    """Method of moments: ``shape = mean**2 / var``."""
    s = np.asarray(samples, dtype=float).ravel()
    if s.size < 2 or np.any(s <= 0):
        raise ValueError("need at least two positive samples")
    mean = float(np.mean(s))
    var = float(np.var(s))
    if var <= 1e-14 * mean**2:
        raise DegenerateError("samples have zero variance")
    return GammaFit(mean * mean / var, mean)


def rank_correlation(a, b) -> float:
    """Spearman rank correlation; used to compare the rankings induced by two cost functions."""
    return float(stats.spearmanr(np.asarray(a), np.asarray(b)).statistic)


def paired_window_costs(burst_length: int, n: int, powers, channel: CostChannel, *, bursts: int = 1,
                        seed: int = 0, normalize: bool = True) -> np.ndarray:
    """Sliding-window costs of the same unbiased bursts launched at each power.

    Returns ``(len(powers), bursts * (burst_length - n + 1))``. With
    ``normalize`` each cost is divided by the power (NLI energy relative to
    the mean signal energy per symbol).
    """
    out = []
    for P in powers:
        row = []
        for b in range(bursts):
            unit = _unit_gaussian(stream(seed, b), (channel.pol_count, burst_length))
            x = SymbolSequence(unit * math.sqrt(P))
            (y,) = channel.noiseless_output([x])
            c = window_costs(x, y, n)
            row.append(c / P if normalize else c)
        out.append(np.concatenate(row))
    return np.array(out)


def cdf_rows(dist: EmpiricalDistribution, points: int = 200) -> list[tuple[float, float]]:
    """``(value, cdf)`` pairs on a log-spaced grid of cdf levels (dense in the lower tail)."""
    levels = np.unique(np.geomspace(1.0 / dist.count, 1.0, points))
    vals = dist.quantile(levels)
    return [(float(v), float(dist.cdf(v))) for v in vals]


def histogram_rows(samples, bins: int = 100) -> list[tuple[float, float, float]]:
    """``(left edge, right edge, density)`` rows."""
    dens, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins, density=True)
    return [(float(edges[i]), float(edges[i + 1]), float(dens[i])) for i in range(bins)]
