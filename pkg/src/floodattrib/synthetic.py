"""Synthetic sites with known flood-generating model, for validation runs."""

from __future__ import annotations

import calendar
import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from . import covariates as cv
from .covariates import CovariateKind, CropCell, DailySeries, ReservoirRecord
from .extreme_value import GumbelParams, LinkForm, gumbel_quantile
from .pipeline import SiteRecord
from .series import AnnualMaxSeries

STORM_START_DAY = 150  # zero-based day of year where the storm block begins
BACKGROUND_FRACTION = 0.2  # background daily rain as a fraction of the block's daily rain


@dataclass(frozen=True)
class SyntheticSiteSpec:
    """True model and covariate shapes for one synthetic site.

    ``true_model`` is one of ``G0``, ``G_A``, ``G_C``, ``G_R``. The location at the
    mean of the linked covariate is ``mu_mean`` unless ``a`` is given explicitly.
    Precipitation of kind ``precip_kind`` follows
    ``level * (1 + trend * t + amplitude * sin(2 pi (year - start) / period + phase))``
    with ``t`` running from 0 to 1 over the record.
    """

    site_id: str = "synthetic"
    true_model: str = "G0"
    a: float | None = None
    mu_mean: float = 100.0
    b: float = 0.0
    sigma: float = 20.0
    n_years: int = 60
    start_year: int = 1961
    precip_kind: CovariateKind = CovariateKind.MAX_P1
    precip_level: float = 50.0
    precip_trend: float = 0.0
    precip_amplitude: float = 0.2
    precip_period: float = 30.0
    precip_phase: float = 0.0
    crop_share: float = 0.1
    yield_2000: float = 6.0
    yield_trend: float = 0.1
    reservoirs: tuple = ()
    catchment_area: float = 500.0
    outlet_elevation: float = 400.0
    mean_annual_flow_volume: float = 300.0
    flood_day_mean: float = 180.0
    flood_day_spread: float = 30.0
    y_ref: float = 8.72
    loess_span: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.true_model not in ("G0", "G_A", "G_C", "G_R"):
            raise ValueError(f"unknown true model {self.true_model!r}")
        object.__setattr__(self, "precip_kind", CovariateKind(self.precip_kind))
        if not self.precip_kind.is_precipitation:
            raise ValueError("precip_kind must be a precipitation covariate")
        if self.n_years < self.loess_span:
            raise ValueError("record shorter than the LOESS span")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def precipitation_shape(spec: SyntheticSiteSpec) -> np.ndarray:
    """Target annual values of ``spec.precip_kind`` for every year of the record."""
    k = np.arange(spec.n_years)
    t = k / max(spec.n_years - 1, 1)
    wave = np.sin(2 * np.pi * k / spec.precip_period + spec.precip_phase)
    values = spec.precip_level * (1 + spec.precip_trend * t + spec.precip_amplitude * wave)
    if np.any(values <= 0):
        raise ValueError("covariate shape requires non-positive precipitation")
    return values


def daily_precipitation(kind: CovariateKind, targets, start_year: int) -> DailySeries:
    """Daily series whose annual value of ``kind`` equals ``targets`` exactly.

    Each year gets a uniform block of ``duration`` days carrying the target total
    over a lighter background, so the block is the unique maximising window.
    Annual totals are spread evenly.
    """
    chunks = []
    for i, m in enumerate(targets):
        ndays = 366 if calendar.isleap(start_year + i) else 365
        if kind is CovariateKind.ANNUAL_TOTAL_P:
            chunks.append(np.full(ndays, m / ndays))
            continue
        dur = kind.duration
        block = m / dur
        year = np.full(ndays, BACKGROUND_FRACTION * block)
        year[STORM_START_DAY : STORM_START_DAY + dur] = block
        chunks.append(year)
    return DailySeries(dt.date(start_year, 1, 1), np.concatenate(chunks))


def _inputs(spec: SyntheticSiteSpec):
    years = np.arange(spec.start_year, spec.start_year + spec.n_years)
    daily = daily_precipitation(spec.precip_kind, precipitation_shape(spec), spec.start_year)
    cells = [CropCell(spec.crop_share * spec.catchment_area, spec.yield_2000, spec.yield_trend)]
    reservoirs = [r if isinstance(r, ReservoirRecord) else ReservoirRecord(*r) for r in spec.reservoirs]
    return years, daily, cells, reservoirs


def _location(spec, years, daily, cells, reservoirs) -> np.ndarray:
    if spec.true_model == "G_A":
        raw = cv.precipitation_covariate(daily, spec.precip_kind)
        g = LinkForm.LOG_LOG.transform(cv.loess_smooth(raw, spec.loess_span).at(years))
    elif spec.true_model == "G_C":
        g = cv.land_use_intensity_series(cells, spec.catchment_area, years, spec.y_ref).values
    elif spec.true_model == "G_R":
        g = cv.reservoir_index_series(reservoirs, years, spec.catchment_area, spec.mean_annual_flow_volume).values
    else:
        g = np.zeros(spec.n_years)
    b = 0.0 if spec.true_model == "G0" else spec.b
    a = spec.a if spec.a is not None else math.log(spec.mu_mean) - b * float(np.mean(g))
    return np.exp(a + b * g)


def true_location(spec: SyntheticSiteSpec) -> np.ndarray:
    """Gumbel location per year implied by ``spec``."""
    return _location(spec, *_inputs(spec))


def generate_synthetic_site(spec: SyntheticSiteSpec) -> SiteRecord:
    """Draw annual maxima from the spec's Gumbel model with covariates built from the emitted inputs.

    The linked covariate is recomputed from the emitted daily precipitation, crop
    cells or reservoirs with the same builders the attribution pipeline uses, so
    the true model is expressed in exactly the covariate the fit will see.
    Annual maxima are inverse-CDF draws, so equal seeds give equal uniforms.
    """
    rng = np.random.default_rng(spec.seed)
    years, daily, cells, reservoirs = _inputs(spec)
    mu = _location(spec, years, daily, cells, reservoirs)

    u = np.clip(rng.uniform(size=spec.n_years), 1e-300, 1 - 1e-16)
    z = gumbel_quantile(u, GumbelParams(mu, spec.sigma))
    for i in np.flatnonzero(z <= 0):
        # discharge must stay positive; redraw the offending years deterministically
        while z[i] <= 0:
            z[i] = gumbel_quantile(rng.uniform(), GumbelParams(mu[i], spec.sigma))

    lengths = np.array([366 if calendar.isleap(int(y)) else 365 for y in years])
    raw_days = np.rint(rng.normal(spec.flood_day_mean, spec.flood_day_spread, spec.n_years)).astype(int)
    doy = (raw_days - 1) % lengths + 1
    return SiteRecord(
        spec.site_id,
        spec.catchment_area,
        spec.outlet_elevation,
        spec.mean_annual_flow_volume,
        AnnualMaxSeries(years, z, spec.site_id),
        daily,
        cells,
        reservoirs,
        [(int(y), int(d)) for y, d in zip(years, doy)],
    )


def default_suite(n_sites: int = 5, seed: int = 0) -> list[SyntheticSiteSpec]:
    """A mixed set of synthetic sites cycling through G0, G_A (1-day, 7-day), G_C and G_R."""
    templates = [
        dict(true_model="G0", precip_amplitude=0.15),
        dict(true_model="G_A", b=0.61, precip_kind=CovariateKind.MAX_P1, precip_amplitude=0.35,
             precip_trend=0.3),
        dict(true_model="G_A", b=0.61, precip_kind=CovariateKind.MAX_P7, precip_level=120.0,
             precip_amplitude=0.35),
        dict(true_model="G_C", b=4.0, crop_share=0.15, yield_2000=5.0, yield_trend=0.12),
        dict(true_model="G_R", b=-2.0, reservoirs=((1975, 150.0, 400.0),)),
    ]
    specs = []
    for i in range(n_sites):
        t = templates[i % len(templates)]
        specs.append(SyntheticSiteSpec(site_id=f"S{i:03d}", seed=seed * 1000 + i,
                                       catchment_area=100.0 * (i + 1) + 400.0, **t))
    return specs
