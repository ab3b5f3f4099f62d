"""Per-site attribution: covariates -> model fits -> WAIC -> attribution -> trend statistics."""

from __future__ import annotations

import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from . import covariates as cv
from .bayes import FitProblem, InitializationError, SamplerError, sample
from .config import RunConfig, driver_of, link_of
from .covariates import CovariateKind, CovariateSeries, DailySeries
from .diagnostics import diagnose
from .selection import AttributionDecision, Driver, WaicReport, attribute, waic
from .series import AnnualMaxSeries
from .trend import MkResult, SeasonalityResult, TrendResult, mann_kendall, ols_log_trend, seasonality

logger = logging.getLogger(__name__)

MIN_FIT_YEARS = 10
DENSITY_GRID_POINTS = 101


@dataclass
class SiteRecord:
    site_id: str
    catchment_area: float  # km2
    outlet_elevation: float  # m
    mean_annual_flow_volume: float  # 1e6 m3
    annual_max: AnnualMaxSeries
    precipitation: DailySeries | None = None
    crop_cells: list = field(default_factory=list)
    reservoirs: list = field(default_factory=list)
    flood_dates: list = field(default_factory=list)  # (year, day_of_year)


@dataclass
class ModelResult:
    key: str
    driver: Driver
    covariate: CovariateKind | None
    link: str
    prior: dict
    waic: WaicReport | None
    summary: dict
    diagnostics: dict
    converged: bool
    degenerate: bool = False
    error: str | None = None
    b_density: tuple | None = None  # (grid, density)

    @property
    def usable(self) -> bool:
        return self.waic is not None and self.converged and self.error is None

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "driver": self.driver.value,
            "covariate": self.covariate.value if self.covariate else None,
            "link": self.link,
            "prior": self.prior,
            "waic": self.waic.to_dict() if self.waic else None,
            "summary": self.summary,
            "diagnostics": self.diagnostics,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "error": self.error,
            "b_density": None
            if self.b_density is None
            else {"b": self.b_density[0].tolist(), "density": self.b_density[1].tolist()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelResult":
        dens = d.get("b_density")
        return cls(
            key=d["key"],
            driver=Driver(d["driver"]),
            covariate=CovariateKind(d["covariate"]) if d["covariate"] else None,
            link=d["link"],
            prior=d["prior"],
            waic=WaicReport.from_dict(d["waic"]) if d["waic"] else None,
            summary=d["summary"],
            diagnostics=d["diagnostics"],
            converged=d["converged"],
            degenerate=d.get("degenerate", False),
            error=d.get("error"),
            b_density=None if dens is None else (np.asarray(dens["b"]), np.asarray(dens["density"])),
        )


@dataclass
class SiteResult:
    site_id: str
    catchment_area: float
    outlet_elevation: float
    prior_mode: str
    fit_years: list
    dropped_years: list
    models: dict
    decision: AttributionDecision
    sweep: dict  # precipitation kind -> G_A-vs-G0 decision
    trend: TrendResult | None
    mk: MkResult | None
    seasonality: SeasonalityResult | None
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "site_id": self.site_id,
            "catchment_area": self.catchment_area,
            "outlet_elevation": self.outlet_elevation,
            "prior_mode": self.prior_mode,
            "fit_years": self.fit_years,
            "dropped_years": self.dropped_years,
            "models": {k: m.to_dict() for k, m in self.models.items()},
            "decision": self.decision.to_dict(),
            "sweep": {k.value: v.to_dict() for k, v in self.sweep.items()},
            "trend": self.trend.to_dict() if self.trend else None,
            "mann_kendall": self.mk.to_dict() if self.mk else None,
            "seasonality": self.seasonality.to_dict() if self.seasonality else None,
            "flags": self.flags,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SiteResult":
        return cls(
            site_id=d["site_id"],
            catchment_area=d["catchment_area"],
            outlet_elevation=d["outlet_elevation"],
            prior_mode=d["prior_mode"],
            fit_years=d["fit_years"],
            dropped_years=d["dropped_years"],
            models={k: ModelResult.from_dict(m) for k, m in d["models"].items()},
            decision=AttributionDecision.from_dict(d["decision"]),
            sweep={CovariateKind(k): AttributionDecision.from_dict(v) for k, v in d["sweep"].items()},
            trend=TrendResult(**d["trend"]) if d["trend"] else None,
            mk=MkResult(**d["mann_kendall"]) if d["mann_kendall"] else None,
            seasonality=SeasonalityResult(**d["seasonality"]) if d["seasonality"] else None,
            flags=d.get("flags", []),
        )


def model_key(kind: CovariateKind | None) -> str:
    if kind is None:
        return "G0"
    prefix = {Driver.ATMOSPHERIC: "G_A", Driver.CATCHMENT: "G_C", Driver.RIVER_SYSTEM: "G_R"}[driver_of(kind)]
    return f"{prefix}:{kind.value}"


def fit_seed(seed: int, site_id: str, key: str) -> tuple:
    """Seed entropy for one fit; independent of run order and prior mode."""
    return (int(seed), zlib.crc32(site_id.encode()), zlib.crc32(key.encode()))


def build_covariates(site: SiteRecord, cfg: RunConfig, years) -> dict:
    """Requested covariates for ``site``; precipitation is LOESS-smoothed, LI and RI are not."""
    out = {}
    for kind in cfg.covariates:
        if kind.is_precipitation:
            if site.precipitation is None:
                raise ValueError(f"site {site.site_id} has no daily precipitation for {kind.value}")
            raw = cv.precipitation_covariate(site.precipitation, kind)
            out[kind] = cv.loess_smooth(raw, cfg.loess_span)
        elif kind is CovariateKind.LAND_USE_INTENSITY:
            out[kind] = cv.land_use_intensity_series(
                site.crop_cells, site.catchment_area, years, cfg.y_ref, cfg.base_year
            )
        else:
            out[kind] = cv.reservoir_index_series(
                site.reservoirs, years, site.catchment_area, site.mean_annual_flow_volume
            )
    return out


def _summaries(draws) -> dict:
    out = {}
    flat = draws.flat()
    for j, name in enumerate(draws.param_names):
        x = flat[:, j]
        if name == "log_sigma":
            name, x = "sigma", np.exp(x)
        q = np.quantile(x, [0.025, 0.5, 0.975])
        out[name] = {
            "mean": float(x.mean()),
            "sd": float(x.std(ddof=1)),
            "q2.5": float(q[0]),
            "q50": float(q[1]),
            "q97.5": float(q[2]),
        }
    return out


def _density_grid(b: np.ndarray):
    lo, hi = float(b.min()), float(b.max())
    grid = np.linspace(lo, hi, DENSITY_GRID_POINTS)
    if hi - lo <= 0 or np.std(b) == 0:
        return grid, np.zeros_like(grid)
    return grid, stats.gaussian_kde(b)(grid)


def _prior_dict(prior) -> dict:
    if prior is None or prior.is_flat:
        return {"kind": "flat"}
    return {"kind": "truncated_normal", "mean": prior.mean, "sd": prior.sd, "truncation": prior.truncation.value}


def fit_model(site_id, obs, kind, covariate, cfg: RunConfig) -> tuple:
    """Fit one model and return ``(ModelResult, draws or None)``."""
    key = model_key(kind)
    prior = cfg.prior_for(kind) if kind is not None else None
    link = link_of(kind).value if kind is not None else "time_invariant"
    driver = driver_of(kind) if kind is not None else Driver.TIME_INVARIANT
    if kind is None:
        prob = FitProblem(obs)
    else:
        prob = FitProblem(obs, covariate, link_of(kind), prior)
    scfg = replace(cfg.sampler, seed=fit_seed(cfg.seed, site_id, key))
    try:
        draws = sample(prob, scfg)
    except (InitializationError, SamplerError) as exc:
        return ModelResult(key, driver, kind, link, _prior_dict(prior), None, {}, {}, False, error=str(exc)), None
    diag = diagnose(draws)
    rep = waic(draws, prob)
    dens = _density_grid(draws.flat()[:, 1]) if prob.has_slope else None
    return (
        ModelResult(key, driver, kind, link, _prior_dict(prior), rep, _summaries(draws), diag.to_dict(), diag.passed,
                    b_density=dens),
        draws,
    )


def run_site(site: SiteRecord, cfg: RunConfig) -> SiteResult:
    """Attribution workflow for one site; deterministic given ``cfg.seed``."""
    flags = []
    am = site.annual_max.since(cfg.start_year)
    covs = build_covariates(site, cfg, am.years)
    covered = set(am.years.tolist())
    for series in covs.values():
        covered &= set(series.years.tolist())
    fit_years = sorted(covered)
    dropped = sorted(set(am.years.tolist()) - covered)
    if dropped:
        logger.warning("site %s: %d AM years lack covariate coverage and are dropped", site.site_id, len(dropped))
        flags.append(f"dropped_years:{len(dropped)}")
    if len(fit_years) < MIN_FIT_YEARS:
        raise ValueError(f"site {site.site_id}: only {len(fit_years)} years with full covariate coverage")
    obs = am.select(fit_years)
    aligned = {k: CovariateSeries(obs.years, s.at(obs.years), k) for k, s in covs.items()}

    models = {}
    g0, _ = fit_model(site.site_id, obs, None, None, cfg)
    if g0.error is not None:
        raise RuntimeError(f"site {site.site_id}: time-invariant fit failed: {g0.error}")
    if not g0.converged:
        flags.append("G0:not_converged")
    models[g0.key] = g0
    for kind, series in aligned.items():
        key = model_key(kind)
        prior = cfg.prior_for(kind)
        if np.ptp(series.values) == 0 and prior.is_flat:
            # slope unidentified under a flat prior; the model is G0 with an idle parameter
            models[key] = ModelResult(
                key, driver_of(kind), kind, link_of(kind).value, _prior_dict(prior), g0.waic,
                dict(g0.summary), g0.diagnostics, g0.converged, degenerate=True,
            )
            flags.append(f"{key}:constant_covariate")
            continue
        res, _ = fit_model(site.site_id, obs, kind, series, cfg)
        if res.error is not None:
            flags.append(f"{key}:failed")
        elif not res.converged:
            flags.append(f"{key}:not_converged")
        models[key] = res

    decision = _decide(models, cfg, [cfg.atmospheric_covariate, CovariateKind.LAND_USE_INTENSITY,
                                     CovariateKind.RESERVOIR_INDEX])
    sweep = {
        kind: _decide(models, cfg, [kind]) for kind in cfg.covariates if kind.is_precipitation
    }

    trend = mk = seas = None
    try:
        trend = ols_log_trend(site.annual_max, cfg.start_year)
        mk = mann_kendall(site.annual_max.since(cfg.start_year))
    except ValueError as exc:
        flags.append(f"trend:{exc}")
    if site.flood_dates:
        yrs, days = zip(*site.flood_dates)
        seas = seasonality(days, yrs)
    return SiteResult(
        site.site_id, site.catchment_area, site.outlet_elevation, cfg.prior_mode, fit_years, dropped,
        models, decision, sweep, trend, mk, seas, flags,
    )


def _decide(models, cfg, kinds) -> AttributionDecision:
    g0 = models["G0"]
    candidates = {}
    for kind in kinds:
        m = models.get(model_key(kind))
        if m is not None and m.usable:
            candidates[m.driver] = m.waic
    if not candidates:
        return AttributionDecision(Driver.TIME_INVARIANT, {Driver.TIME_INVARIANT: g0.waic.waic}, 0.0,
                                   cfg.waic_threshold)
    return attribute(g0.waic, candidates, cfg.waic_threshold)


def _run_one(args):
    site, cfg = args
    try:
        return site.site_id, run_site(site, cfg), None
    except Exception as exc:  # reported, never dropped
        return site.site_id, None, f"{type(exc).__name__}: {exc}"


def run_sites(sites, cfg: RunConfig, workers: int | None = None):
    """Run every site; returns ``(results, failures)`` both sorted by site id.

    ``len(results) + len(failures) == len(sites)`` always holds.
    """
    workers = cfg.workers if workers is None else workers
    jobs = [(s, cfg) for s in sites]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = [_run_one(j) for j in jobs]
    outcomes.sort(key=lambda o: o[0])
    results = [r for _, r, err in outcomes if err is None]
    failures = [{"site_id": sid, "error": err} for sid, _, err in outcomes if err is not None]
    return results, failures
