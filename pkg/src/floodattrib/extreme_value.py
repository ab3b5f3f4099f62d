"""Gumbel distribution, covariate links for the location parameter, and slope priors.

All functions accept scalars or numpy arrays and broadcast in the usual way.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class GumbelParams:
    """Location ``mu`` and scale ``sigma`` of a Gumbel distribution (discharge units)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.mu)):
            raise ValueError(f"Gumbel location must be finite, got {self.mu!r}")
        if not np.all(np.asarray(self.sigma) > 0) or not np.all(np.isfinite(self.sigma)):
            raise ValueError(f"Gumbel scale must be positive and finite, got {self.sigma!r}")


def gumbel_cdf(z, p: GumbelParams):
    """Gumbel cumulative distribution function exp(-exp(-(z - mu) / sigma))."""
    u = (np.asarray(z, dtype=float) - p.mu) / p.sigma
    with np.errstate(over="ignore"):
        return np.exp(-np.exp(-u))


def gumbel_logpdf(z, p: GumbelParams):
    """Log-density -ln(sigma) - u - exp(-u) with u = (z - mu) / sigma."""
    u = (np.asarray(z, dtype=float) - p.mu) / p.sigma
    with np.errstate(over="ignore"):
        return -np.log(p.sigma) - u - np.exp(-u)


def gumbel_quantile(prob, p: GumbelParams):
    """Inverse of :func:`gumbel_cdf`. Raises ``ValueError`` for probabilities outside (0, 1)."""
    prob = np.asarray(prob, dtype=float)
    if np.any(~((prob > 0) & (prob < 1))):
        raise ValueError("quantile probability must lie strictly inside (0, 1)")
    return p.mu - p.sigma * np.log(-np.log(prob))


def gumbel_moment_estimates(z) -> GumbelParams:
    """Method-of-moments Gumbel fit: sigma = sqrt(6) s / pi, mu = mean - gamma sigma."""
    z = np.asarray(z, dtype=float)
    sd = z.std(ddof=1) if z.size > 1 else 0.0
    sigma = math.sqrt(6.0) * sd / math.pi
    if not sigma > 0:
        sigma = max(abs(float(z.mean())) * 0.1, 1e-3)
    return GumbelParams(float(z.mean() - EULER_GAMMA * sigma), sigma)


class LinkForm(enum.Enum):
    """How the Gumbel location depends on a covariate ``x``.

    ``TIME_INVARIANT``: log(mu) = a.  ``LOG_LOG``: log(mu) = a + b log(x).
    ``LOG_LINEAR``: log(mu) = a + b x.
    """

    TIME_INVARIANT = "time_invariant"
    LOG_LOG = "log_log"
    LOG_LINEAR = "log_linear"

    def transform(self, x):
        """Covariate as it enters the linear predictor (log x, x, or zeros)."""
        x = np.asarray(x, dtype=float)
        if self is LinkForm.LOG_LOG:
            if np.any(~(x > 0)):
                raise ValueError("log-log link needs a strictly positive covariate")
            return np.log(x)
        if self is LinkForm.LOG_LINEAR:
            return x
        return np.zeros_like(x)


@dataclass(frozen=True)
class LinkModel:
    form: LinkForm
    a: float
    b: float = 0.0


def link_mu(m: LinkModel, x=1.0):
    """Gumbel location implied by link ``m`` at covariate value(s) ``x``."""
    if m.form is LinkForm.TIME_INVARIANT:
        return np.exp(m.a) * np.ones_like(np.asarray(x, dtype=float))
    return np.exp(m.a + m.b * m.form.transform(x))


class Truncation(enum.Enum):
    NONE = "none"
    LOWER_AT_ZERO = "lower_at_zero"  # support b >= 0
    UPPER_AT_ZERO = "upper_at_zero"  # support b <= 0


@dataclass(frozen=True)
class SlopePrior:
    """Prior on the covariate slope ``b``: flat (improper) or a (truncated) normal."""

    kind: str = "flat"
    mean: float = 0.0
    sd: float = 1.0
    truncation: Truncation = Truncation.NONE

    def __post_init__(self):
        if self.kind not in ("flat", "truncated_normal"):
            raise ValueError(f"unknown slope prior kind {self.kind!r}")
        if self.kind == "truncated_normal" and not self.sd > 0:
            raise ValueError("prior standard deviation must be positive")
        object.__setattr__(self, "truncation", Truncation(self.truncation))

    @classmethod
    def flat(cls) -> "SlopePrior":
        return cls("flat")

    @classmethod
    def truncated_normal(cls, mean, sd, truncation=Truncation.NONE) -> "SlopePrior":
        return cls("truncated_normal", float(mean), float(sd), Truncation(truncation))

    @property
    def is_flat(self) -> bool:
        return self.kind == "flat"

    @property
    def log_retained_mass(self) -> float:
        """Log of the normal mass kept after truncation (0 for no truncation)."""
        if self.is_flat or self.truncation is Truncation.NONE:
            return 0.0
        z = self.mean / self.sd
        if self.truncation is Truncation.LOWER_AT_ZERO:
            return float(special.log_ndtr(z))
        return float(special.log_ndtr(-z))

    def in_support(self, b):
        b = np.asarray(b, dtype=float)
        if self.truncation is Truncation.LOWER_AT_ZERO:
            return b >= 0
        if self.truncation is Truncation.UPPER_AT_ZERO:
            return b <= 0
        return ~np.isnan(b)

    def sample(self, rng: np.random.Generator, size=None):
        if self.is_flat:
            return rng.standard_normal(size)
        lo, hi = -np.inf, np.inf
        if self.truncation is Truncation.LOWER_AT_ZERO:
            lo = (0.0 - self.mean) / self.sd
        elif self.truncation is Truncation.UPPER_AT_ZERO:
            hi = (0.0 - self.mean) / self.sd
        return stats.truncnorm.rvs(lo, hi, loc=self.mean, scale=self.sd, size=size, random_state=rng)


def slope_prior_logpdf(b, prior: SlopePrior):
    """Log-density of the slope prior; flat priors return 0, points off the support -inf."""
    b = np.asarray(b, dtype=float)
    if prior.is_flat:
        return np.zeros_like(b)
    u = (b - prior.mean) / prior.sd
    logp = -0.5 * u * u - math.log(prior.sd) - 0.5 * math.log(2 * math.pi) - prior.log_retained_mass
    return np.where(prior.in_support(b), logp, -np.inf)


def slope_prior_grad(b, prior: SlopePrior):
    """d/db of :func:`slope_prior_logpdf` inside the support."""
    b = np.asarray(b, dtype=float)
    if prior.is_flat:
        return np.zeros_like(b)
    return -(b - prior.mean) / prior.sd**2
