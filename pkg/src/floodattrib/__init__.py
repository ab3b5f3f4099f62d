"""Bayesian attribution of changes in annual flood peaks to atmospheric, catchment and river-system drivers."""

from .bayes import (
    FitProblem,
    GaussianPrior,
    InitializationError,
    PosteriorDraws,
    SamplerConfig,
    SamplerError,
    grad_log_posterior,
    log_posterior,
    sample,
)
from .config import ConfigError, RunConfig, load_config
from .covariates import (
    CovariateKind,
    CovariateSeries,
    CropCell,
    DailySeries,
    ReservoirRecord,
    annual_max_precip,
    annual_total_precip,
    land_use_intensity,
    land_use_intensity_series,
    loess_smooth,
    reservoir_index,
    reservoir_index_series,
)
from .diagnostics import Diagnostics, diagnose
from .extreme_value import (
    GumbelParams,
    LinkForm,
    LinkModel,
    SlopePrior,
    Truncation,
    gumbel_cdf,
    gumbel_logpdf,
    gumbel_quantile,
    link_mu,
    slope_prior_logpdf,
)
from .io import IngestError, ingest, report
from .pipeline import SiteRecord, SiteResult, run_site, run_sites
from .selection import AttributionDecision, Driver, WaicReport, attribute, waic, waic_from_loglik
from .series import AnnualMaxSeries
from .synthetic import SyntheticSiteSpec, default_suite, generate_synthetic_site
from .trend import mann_kendall, ols_log_trend, seasonality

__all__ = [
    "AnnualMaxSeries",
    "AttributionDecision",
    "ConfigError",
    "CovariateKind",
    "CovariateSeries",
    "CropCell",
    "DailySeries",
    "Diagnostics",
    "Driver",
    "FitProblem",
    "GaussianPrior",
    "GumbelParams",
    "IngestError",
    "InitializationError",
    "LinkForm",
    "LinkModel",
    "PosteriorDraws",
    "ReservoirRecord",
    "RunConfig",
    "SamplerConfig",
    "SamplerError",
    "SiteRecord",
    "SiteResult",
    "SlopePrior",
    "SyntheticSiteSpec",
    "Truncation",
    "WaicReport",
    "annual_max_precip",
    "annual_total_precip",
    "attribute",
    "default_suite",
    "diagnose",
    "generate_synthetic_site",
    "grad_log_posterior",
    "gumbel_cdf",
    "gumbel_logpdf",
    "gumbel_quantile",
    "ingest",
    "land_use_intensity",
    "land_use_intensity_series",
    "link_mu",
    "load_config",
    "loess_smooth",
    "log_posterior",
    "mann_kendall",
    "ols_log_trend",
    "report",
    "reservoir_index",
    "reservoir_index_series",
    "run_site",
    "run_sites",
    "sample",
    "seasonality",
    "slope_prior_logpdf",
    "waic",
    "waic_from_loglik",
]

__version__ = "0.1.0"
