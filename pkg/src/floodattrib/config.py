"""Run configuration and its TOML representation."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace

from .bayes import SamplerConfig
from .covariates import CovariateKind
from .extreme_value import LinkForm, SlopePrior, Truncation
from .selection import Driver

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


ALL_COVARIATES = (
    CovariateKind.ANNUAL_TOTAL_P,
    CovariateKind.MAX_P30,
    CovariateKind.MAX_P7,
    CovariateKind.MAX_P1,
    CovariateKind.LAND_USE_INTENSITY,
    CovariateKind.RESERVOIR_INDEX,
)

# Literature-derived elasticity priors (normal moments, truncation side).
DEFAULT_PRIORS = {
    CovariateKind.ANNUAL_TOTAL_P: SlopePrior.truncated_normal(0.61, 0.06, Truncation.LOWER_AT_ZERO),
    CovariateKind.MAX_P30: SlopePrior.truncated_normal(0.61, 0.18, Truncation.LOWER_AT_ZERO),
    CovariateKind.MAX_P7: SlopePrior.truncated_normal(0.61, 0.18, Truncation.LOWER_AT_ZERO),
    CovariateKind.MAX_P1: SlopePrior.truncated_normal(0.61, 0.18, Truncation.LOWER_AT_ZERO),
    CovariateKind.LAND_USE_INTENSITY: SlopePrior.truncated_normal(0.13, 0.13, Truncation.LOWER_AT_ZERO),
    CovariateKind.RESERVOIR_INDEX: SlopePrior.truncated_normal(-0.30, 0.18, Truncation.UPPER_AT_ZERO),
}


def driver_of(kind: CovariateKind) -> Driver:
    if kind.is_precipitation:
        return Driver.ATMOSPHERIC
    if kind is CovariateKind.LAND_USE_INTENSITY:
        return Driver.CATCHMENT
    return Driver.RIVER_SYSTEM


def link_of(kind: CovariateKind) -> LinkForm:
    """Elasticity (log-log) link for precipitation, log-linear for the indices."""
    return LinkForm.LOG_LOG if kind.is_precipitation else LinkForm.LOG_LINEAR


@dataclass(frozen=True)
class RunConfig:
    covariates: tuple = ALL_COVARIATES
    atmospheric_covariate: CovariateKind = CovariateKind.MAX_P1
    prior_mode: str = "informative"
    priors: dict = field(default_factory=lambda: dict(DEFAULT_PRIORS))
    sampler: SamplerConfig = SamplerConfig()
    waic_threshold: float = 2.0
    start_year: int = 1961
    seed: int = 0
    y_ref: float = 8.72
    base_year: int = 2000
    loess_span: int = 10
    min_record_length: int = 40
    workers: int = 1

    def __post_init__(self):
        covs = tuple(CovariateKind(c) for c in self.covariates)
        if len(set(covs)) != len(covs):
            raise ConfigError("covariate list contains duplicates")
        object.__setattr__(self, "covariates", covs)
        object.__setattr__(self, "atmospheric_covariate", CovariateKind(self.atmospheric_covariate))
        if not self.atmospheric_covariate.is_precipitation:
            raise ConfigError("atmospheric_covariate must be a precipitation kind")
        if self.prior_mode not in ("informative", "flat"):
            raise ConfigError(f"prior_mode must be 'informative' or 'flat', not {self.prior_mode!r}")
        priors = dict(DEFAULT_PRIORS)
        priors.update({CovariateKind(k): v for k, v in self.priors.items()})
        object.__setattr__(self, "priors", priors)
        if self.waic_threshold < 0:
            raise ConfigError("waic_threshold must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.loess_span < 1:
            raise ConfigError("loess_span must be positive")

    def prior_for(self, kind: CovariateKind) -> SlopePrior:
        if self.prior_mode == "flat":
            return SlopePrior.flat()
        return self.priors[kind]

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_SAMPLER_KEYS = {f.name for f in fields(SamplerConfig)} - {"seed"}
_PRIOR_KEYS = {"mean", "sd", "truncation", "kind"}


def config_from_dict(d: dict) -> RunConfig:
    """Build a :class:`RunConfig` from parsed TOML; unknown keys raise :class:`ConfigError`."""
    top = {f.name for f in fields(RunConfig)}
    unknown = set(d) - top
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = dict(d)
    if "sampler" in kw:
        s = kw["sampler"]
        bad = set(s) - _SAMPLER_KEYS
        if bad:
            raise ConfigError(f"unknown [sampler] keys: {sorted(bad)}")
        try:
            kw["sampler"] = SamplerConfig(**s)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[sampler]: {exc}") from None
    if "priors" in kw:
        priors = {}
        for name, p in kw["priors"].items():
            try:
                kind = CovariateKind(name)
            except ValueError:
                raise ConfigError(f"unknown covariate in [priors]: {name!r}") from None
            bad = set(p) - _PRIOR_KEYS
            if bad:
                raise ConfigError(f"unknown keys in [priors.{name}]: {sorted(bad)}")
            if p.get("kind", "truncated_normal") == "flat":
                priors[kind] = SlopePrior.flat()
            else:
                try:
                    priors[kind] = SlopePrior.truncated_normal(p["mean"], p["sd"], p.get("truncation", "none"))
                except KeyError as exc:
                    raise ConfigError(f"[priors.{name}] is missing {exc.args[0]!r}") from None
                except ValueError as exc:
                    raise ConfigError(f"[priors.{name}]: {exc}") from None
        kw["priors"] = priors
    if "covariates" in kw:
        try:
            kw["covariates"] = tuple(CovariateKind(c) for c in kw["covariates"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    try:
        return RunConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


def config_to_toml(cfg: RunConfig) -> str:
    """Serialise a config back to TOML (round-trips through :func:`load_config`)."""
    lines = [
        f"covariates = [{', '.join(repr(c.value).replace(chr(39), chr(34)) for c in cfg.covariates)}]",
        f'atmospheric_covariate = "{cfg.atmospheric_covariate.value}"',
        f'prior_mode = "{cfg.prior_mode}"',
        f"waic_threshold = {cfg.waic_threshold!r}",
        f"start_year = {cfg.start_year}",
        f"seed = {cfg.seed}",
        f"y_ref = {cfg.y_ref!r}",
        f"base_year = {cfg.base_year}",
        f"loess_span = {cfg.loess_span}",
        f"min_record_length = {cfg.min_record_length}",
        f"workers = {cfg.workers}",
        "",
        "[sampler]",
    ]
    for name in sorted(_SAMPLER_KEYS):
        lines.append(f"{name} = {getattr(cfg.sampler, name)!r}")
    for kind in ALL_COVARIATES:
        p = cfg.priors[kind]
        lines += ["", f"[priors.{kind.value}]"]
        if p.is_flat:
            lines.append('kind = "flat"')
        else:
            lines += [f"mean = {p.mean!r}", f"sd = {p.sd!r}", f'truncation = "{p.truncation.value}"']
    return "\n".join(lines) + "\n"
