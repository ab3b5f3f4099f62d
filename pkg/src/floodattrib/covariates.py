"""Year-indexed driver covariates: precipitation aggregates, decadal LOESS smoothing,
land-use intensity index and reservoir index.
"""

from __future__ import annotations

import calendar
import datetime as dt
import enum
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

PRECIP_DURATIONS = (1, 7, 30)


class CovariateKind(enum.Enum):
    ANNUAL_TOTAL_P = "annual_total_p"
    MAX_P30 = "max_p30"
    MAX_P7 = "max_p7"
    MAX_P1 = "max_p1"
    LAND_USE_INTENSITY = "land_use_intensity"
    RESERVOIR_INDEX = "reservoir_index"

    @property
    def is_precipitation(self) -> bool:
        return self in _PRECIP_KINDS

    @property
    def duration(self) -> int | None:
        """Window length in days for the annual-maximum kinds, else None."""
        return {CovariateKind.MAX_P1: 1, CovariateKind.MAX_P7: 7, CovariateKind.MAX_P30: 30}.get(self)


_PRECIP_KINDS = {
    CovariateKind.ANNUAL_TOTAL_P,
    CovariateKind.MAX_P30,
    CovariateKind.MAX_P7,
    CovariateKind.MAX_P1,
}


@dataclass(frozen=True)
class DailySeries:
    """Gap-free catchment-averaged daily precipitation (mm/day) starting at ``start_date``."""

    start_date: dt.date
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("daily values must be one-dimensional")
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise ValueError("daily precipitation must be finite and non-negative")
        object.__setattr__(self, "values", values)

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=len(self.values) - 1)

    def by_year(self) -> dict[int, np.ndarray]:
        """Split into calendar years; the series must start on 1 Jan and end on 31 Dec."""
        if len(self.values) == 0:
            return {}
        if (self.start_date.month, self.start_date.day) != (1, 1):
            raise ValueError(f"daily series starts mid-year ({self.start_date.isoformat()})")
        end = self.end_date
        if (end.month, end.day) != (12, 31):
            raise ValueError(f"daily series ends mid-year ({end.isoformat()})")
        out = {}
        pos = 0
        for year in range(self.start_date.year, end.year + 1):
            ndays = 366 if calendar.isleap(year) else 365
            out[year] = self.values[pos : pos + ndays]
            pos += ndays
        return out


@dataclass(frozen=True)
class CovariateSeries:
    years: np.ndarray
    values: np.ndarray
    kind: CovariateKind

    def __post_init__(self):
        years = np.asarray(self.years, dtype=int)
        values = np.asarray(self.values, dtype=float)
        if years.shape != values.shape or years.ndim != 1:
            raise ValueError("covariate years and values must be 1-D and of equal length")
        if np.any(np.diff(years) <= 0):
            raise ValueError("covariate years must be strictly increasing")
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", CovariateKind(self.kind))

    def __len__(self):
        return len(self.years)

    def at(self, years) -> np.ndarray:
        """Values at the requested years; raises ``KeyError`` on a missing year."""
        lookup = dict(zip(self.years.tolist(), self.values.tolist()))
        try:
            return np.array([lookup[int(y)] for y in years], dtype=float)
        except KeyError as exc:
            raise KeyError(f"{self.kind.value} has no value for year {exc.args[0]}") from None


def annual_max_precip(d: DailySeries, duration: int) -> CovariateSeries:
    """Per calendar year, the largest sum over ``duration`` consecutive days.

    Windows never straddle a year boundary.
    """
    if duration not in PRECIP_DURATIONS:
        raise ValueError(f"precipitation duration {duration} not in {PRECIP_DURATIONS}")
    kind = {1: CovariateKind.MAX_P1, 7: CovariateKind.MAX_P7, 30: CovariateKind.MAX_P30}[duration]
    years, maxima = [], []
    for year, vals in d.by_year().items():
        csum = np.concatenate(([0.0], np.cumsum(vals)))
        maxima.append(float(np.max(csum[duration:] - csum[:-duration])))
        years.append(year)
    return CovariateSeries(np.array(years), np.array(maxima), kind)


def annual_total_precip(d: DailySeries) -> CovariateSeries:
    years = d.by_year()
    return CovariateSeries(
        np.array(list(years)),
        np.array([float(np.sum(v)) for v in years.values()]),
        CovariateKind.ANNUAL_TOTAL_P,
    )


def precipitation_covariate(d: DailySeries, kind: CovariateKind) -> CovariateSeries:
    """Unsmoothed annual series for one of the four precipitation kinds."""
    if kind is CovariateKind.ANNUAL_TOTAL_P:
        return annual_total_precip(d)
    if kind.duration is None:
        raise ValueError(f"{kind.value} is not a precipitation covariate")
    return annual_max_precip(d, kind.duration)


def loess_smooth(s: CovariateSeries, span_points: int = 10) -> CovariateSeries:
    """Degree-0 LOESS: tricube-weighted average over the ``span_points`` nearest indices.

    Windows become one-sided near the ends so the output keeps the input length.
    Ties in distance are resolved towards the earlier index. The tricube bandwidth
    is the largest in-window distance inflated by 1e-9 (relative).
    """
    n = len(s)
    if span_points < 1:
        raise ValueError("span_points must be positive")
    if n < span_points:
        raise ValueError(f"series of length {n} is shorter than the LOESS span ({span_points})")
    idx = np.arange(n)
    out = np.empty(n)
    for i in range(n):
        dist = np.abs(idx - i)
        window = np.lexsort((idx, dist))[:span_points]
        h = dist[window].max() * (1.0 + 1e-9)
        if h == 0:
            out[i] = s.values[i]
            continue
        w = (1.0 - (dist[window] / h) ** 3) ** 3
        out[i] = np.sum(w * s.values[window]) / np.sum(w)
    return CovariateSeries(s.years.copy(), out, s.kind)


@dataclass(frozen=True)
class CropCell:
    """One grid cell's cropland (km²) with its year-2000 yield and linear yield trend."""

    crop_area: float
    yield_2000: float
    yield_trend: float = 0.0

    def __post_init__(self):
        if not self.crop_area >= 0:
            raise ValueError("crop area must be non-negative")
        if not self.yield_2000 >= 0:
            raise ValueError("year-2000 yield must be non-negative")


def land_use_intensity(cells, total_area, y_ref=8.72, year=2000, base_year=2000) -> float:
    """Area-share-weighted yield ratio summed over cells, for a single year.

    Yields are extrapolated linearly from ``base_year``; negative extrapolations are
    clamped to zero with a warning.
    """
    if not total_area > 0:
        raise ValueError("catchment area must be positive")
    if not y_ref > 0:
        raise ValueError("reference yield must be positive")
    li = 0.0
    for cell in cells:
        y = cell.yield_2000 + cell.yield_trend * (year - base_year)
        if y < 0:
            logger.warning("extrapolated yield %.3f t/ha in %d clamped to 0", y, year)
            y = 0.0
        li += (cell.crop_area / total_area) * (y / y_ref)
    return li


def land_use_intensity_series(cells, total_area, years, y_ref=8.72, base_year=2000) -> CovariateSeries:
    values = [land_use_intensity(cells, total_area, y_ref, int(y), base_year) for y in years]
    return CovariateSeries(np.asarray(years), np.array(values), CovariateKind.LAND_USE_INTENSITY)


@dataclass(frozen=True)
class ReservoirRecord:
    year_built: int
    capacity: float  # 1e6 m3
    drainage_area: float  # km2

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError("reservoir capacity must be positive")
        if not self.drainage_area > 0:
            raise ValueError("reservoir drainage area must be positive")


def reservoir_index(reservoirs, year, catchment_area, mean_annual_flow_volume) -> float:
    """Sum of (drainage-area share) x (capacity / mean annual flow volume) over dams built by ``year``."""
    if not catchment_area > 0:
        raise ValueError("catchment area must be positive")
    if not mean_annual_flow_volume > 0:
        raise ValueError("mean annual flow volume must be positive")
    ri = 0.0
    for r in reservoirs:
        if r.drainage_area > catchment_area:
            raise ValueError(
                f"reservoir drainage area {r.drainage_area} km2 exceeds catchment area {catchment_area} km2"
            )
        if r.year_built <= year:
            ri += (r.drainage_area / catchment_area) * (r.capacity / mean_annual_flow_volume)
    return ri


def reservoir_index_series(reservoirs, years, catchment_area, mean_annual_flow_volume) -> CovariateSeries:
    values = [reservoir_index(reservoirs, int(y), catchment_area, mean_annual_flow_volume) for y in years]
    return CovariateSeries(np.asarray(years), np.array(values), CovariateKind.RESERVOIR_INDEX)

