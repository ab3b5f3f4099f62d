import numpy as np
import pytest

from floodattrib.bayes import FitProblem
from floodattrib.config import DEFAULT_PRIORS
from floodattrib.covariates import CovariateKind, CovariateSeries
from floodattrib.extreme_value import LinkForm, SlopePrior, Truncation
from floodattrib.series import AnnualMaxSeries

MODEL_FORMS = ("G0", "G_A", "G_C", "G_R")
PRIOR_MODES = ("flat", "informative")

_KIND = {
    "G_A": (CovariateKind.MAX_P1, LinkForm.LOG_LOG),
    "G_C": (CovariateKind.LAND_USE_INTENSITY, LinkForm.LOG_LINEAR),
    "G_R": (CovariateKind.RESERVOIR_INDEX, LinkForm.LOG_LINEAR),
}


def make_problem(form: str, prior_mode: str = "flat", n: int = 40, seed: int = 0) -> FitProblem:
    """A small fit problem with a covariate of realistic range for each model form."""
    rng = np.random.default_rng(seed)
    years = np.arange(1961, 1961 + n)
    if form == "G0":
        z = rng.gumbel(100.0, 20.0, n)
        return FitProblem(AnnualMaxSeries(years, z))
    kind, link = _KIND[form]
    if form == "G_A":
        x = 40.0 * np.exp(rng.normal(0, 0.2, n))
        mu = 3.0 * x**0.61
    elif form == "G_C":
        x = np.linspace(0.05, 0.3, n)
        mu = 80.0 * np.exp(1.5 * x)
    else:
        x = np.where(years >= 1980, 0.2, 0.0)
        mu = 120.0 * np.exp(-0.8 * x)
    z = rng.gumbel(mu, 15.0)
    prior = SlopePrior.flat() if prior_mode == "flat" else DEFAULT_PRIORS[kind]
    return FitProblem(AnnualMaxSeries(years, z), CovariateSeries(years, x, kind), link, prior)


def interior_points(prob: FitProblem, count: int, seed: int = 1) -> np.ndarray:
    """Random parameter vectors near the data scale, strictly inside the slope support."""
    rng = np.random.default_rng(seed)
    a0 = np.log(np.mean(prob.observations.discharge))
    a = a0 + rng.uniform(-0.3, 0.3, count)
    ls = np.log(np.std(prob.observations.discharge)) + rng.uniform(-0.5, 0.5, count)
    if not prob.has_slope:
        return np.column_stack([a, ls])
    b = rng.uniform(0.05, 1.0, count)
    if prob.slope_prior.truncation is Truncation.UPPER_AT_ZERO or (
        prob.slope_prior.is_flat and prob.covariate.kind is CovariateKind.RESERVOIR_INDEX
    ):
        b = -b
    a = a - b * prob.g.mean()
    return np.column_stack([a, b, ls])


@pytest.fixture(params=[(f, m) for f in MODEL_FORMS for m in PRIOR_MODES], ids=lambda p: f"{p[0]}-{p[1]}")
def problem(request):
    form, mode = request.param
    return make_problem(form, mode)
