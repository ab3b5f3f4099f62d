"""Annual maximum discharge series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AnnualMaxSeries:
    """Annual maximum discharge (m³/s) per year for one site."""

    years: np.ndarray
    discharge: np.ndarray
    site_id: str = ""

    def __post_init__(self):
        years = np.asarray(self.years, dtype=int)
        q = np.asarray(self.discharge, dtype=float)
        if years.ndim != 1 or years.shape != q.shape:
            raise ValueError("years and discharge must be 1-D and of equal length")
        if len(np.unique(years)) != len(years):
            raise ValueError("duplicate years in annual maximum series")
        if np.any(~np.isfinite(q)):
            raise ValueError("annual maxima must be finite")
        order = np.argsort(years, kind="stable")
        object.__setattr__(self, "years", years[order])
        object.__setattr__(self, "discharge", q[order])

    def __len__(self):
        return len(self.years)

    def since(self, start_year: int) -> "AnnualMaxSeries":
        keep = self.years >= start_year
        return AnnualMaxSeries(self.years[keep], self.discharge[keep], self.site_id)

    def select(self, years) -> "AnnualMaxSeries":
        keep = np.isin(self.years, np.asarray(years, dtype=int))
        return AnnualMaxSeries(self.years[keep], self.discharge[keep], self.site_id)
