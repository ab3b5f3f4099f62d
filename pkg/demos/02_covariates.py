"""
Building the covariates
=======================

Daily rain becomes annual maxima of 1-, 7- and 30-day totals, which are then
smoothed by a degree-0 tricube LOESS over 10 neighbouring years. Land use and
reservoirs give the two other indices.
"""

import datetime as dt

import numpy as np

from floodattrib import (
    CovariateKind,
    CropCell,
    DailySeries,
    ReservoirRecord,
    annual_max_precip,
    land_use_intensity_series,
    loess_smooth,
    reservoir_index,
    reservoir_index_series,
)

rng = np.random.default_rng(1)
ndays = (dt.date(2000, 12, 31) - dt.date(1961, 1, 1)).days + 1
rain = DailySeries(dt.date(1961, 1, 1), rng.gamma(0.4, 8.0, ndays))

p1 = annual_max_precip(rain, 1)
p7 = annual_max_precip(rain, 7)
smooth = loess_smooth(p1, 10)
print("year   max1d  smoothed   max7d")
for y, a, s, b in list(zip(p1.years, p1.values, smooth.values, p7.values))[:8]:
    print(f"{y}  {a:6.1f}  {s:8.1f}  {b:6.1f}")
print("lengths preserved:", len(p1) == len(smooth))

# land-use intensity: crop share times yield relative to a reference yield
cells = [CropCell(120.0, 6.5, 0.08), CropCell(60.0, 5.0, 0.05)]
li = land_use_intensity_series(cells, 900.0, np.arange(1961, 2021, 10))
print("\nLI by decade:", dict(zip(li.years.tolist(), li.values.round(4).tolist())))

# reservoir index is a step function that switches on when a dam is built
dam = [ReservoirRecord(1970, 514.0, 1395.0)]
print("Traun RI:", round(reservoir_index(dam, 2000, 3426.0, 4137.0), 4))
steps = reservoir_index_series(dam, np.arange(1966, 1975), 3426.0, 4137.0)
print("RI 1966-1974:", steps.values.round(4).tolist())
print("covariate kinds:", [k.value for k in CovariateKind])
