"""Classical change statistics: OLS trend of log peaks, Mann-Kendall test, flood seasonality."""

from __future__ import annotations

import calendar
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .series import AnnualMaxSeries


@dataclass(frozen=True)
class TrendResult:
    slope: float  # %/year
    ci_low: float
    ci_high: float
    start_year: int
    n: int

    def to_dict(self):
        return asdict(self)


def ols_log_trend(s: AnnualMaxSeries, start_year: int = 1961, min_points: int = 10) -> TrendResult:
    """Least-squares slope of ln(discharge) on year, in percent per year, with a 95% t interval."""
    s = s.since(start_year)
    if len(s) < min_points:
        raise ValueError(f"trend needs at least {min_points} years from {start_year}, got {len(s)}")
    if np.any(s.discharge <= 0):
        raise ValueError("log trend needs strictly positive discharges")
    x = s.years.astype(float)
    y = np.log(s.discharge)
    n = len(x)
    xc = x - x.mean()
    sxx = np.dot(xc, xc)
    slope = np.dot(xc, y - y.mean()) / sxx
    resid = y - y.mean() - slope * xc
    s2 = np.dot(resid, resid) / (n - 2)
    half = stats.t.ppf(0.975, n - 2) * math.sqrt(s2 / sxx)
    return TrendResult(100 * slope, 100 * (slope - half), 100 * (slope + half), start_year, n)


@dataclass(frozen=True)
class MkResult:
    s_statistic: int
    variance: float
    z: float
    p_value: float
    significant_upward: bool
    degenerate: bool = False

    def to_dict(self):
        return asdict(self)


def mann_kendall(s, alpha: float = 0.05) -> MkResult:
    """Mann-Kendall test with tie-corrected variance and continuity correction.

    ``significant_upward`` is set when Z exceeds the two-sided critical value.
    An all-tied series has zero variance; it is reported as not significant
    with ``degenerate=True``.
    """
    z = np.asarray(s.discharge if isinstance(s, AnnualMaxSeries) else s, dtype=float)
    n = len(z)
    if n < 8:
        raise ValueError(f"Mann-Kendall needs at least 8 observations, got {n}")
    diff = z[None, :] - z[:, None]
    s_stat = int(np.sign(diff[np.triu_indices(n, 1)]).sum())
    _, counts = np.unique(z, return_counts=True)
    ties = counts[counts > 1]
    var = (n * (n - 1) * (2 * n + 5) - np.sum(ties * (ties - 1) * (2 * ties + 5))) / 18.0
    if var <= 0:
        return MkResult(s_stat, 0.0, 0.0, 1.0, False, degenerate=True)
    if s_stat > 0:
        zs = (s_stat - 1) / math.sqrt(var)
    elif s_stat < 0:
        zs = (s_stat + 1) / math.sqrt(var)
    else:
        zs = 0.0
    p = 2 * stats.norm.sf(abs(zs))
    crit = stats.norm.ppf(1 - alpha / 2)
    return MkResult(s_stat, float(var), float(zs), float(p), bool(zs > crit))


@dataclass(frozen=True)
class SeasonalityResult:
    mean_angle: float  # radians in [0, 2*pi)
    mean_day: float  # day of year
    concentration_r: float
    n: int

    def to_dict(self):
        return asdict(self)


def seasonality(days, years=None, year_length: float = 365.0) -> SeasonalityResult:
    """Mean date and concentration R of flood occurrence days.

    Days map to angles 2*pi*day/L, with L the actual length of each event's year
    when ``years`` is given and ``year_length`` otherwise. The mean angle maps back
    to a day using the average L.
    """
    days = np.asarray(days, dtype=float)
    if days.size == 0:
        raise ValueError("seasonality needs at least one flood date")
    if years is not None:
        lengths = np.array([366.0 if calendar.isleap(int(y)) else 365.0 for y in years])
        if lengths.shape != days.shape:
            raise ValueError("days and years must have equal length")
    else:
        lengths = np.full(days.shape, float(year_length))
    theta = 2 * np.pi * days / lengths
    xbar, ybar = np.cos(theta).mean(), np.sin(theta).mean()
    angle = math.atan2(ybar, xbar) % (2 * np.pi)
    r = min(1.0, math.hypot(xbar, ybar))
    return SeasonalityResult(angle, angle * lengths.mean() / (2 * np.pi), r, int(days.size))
