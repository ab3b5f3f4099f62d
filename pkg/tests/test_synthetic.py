import dataclasses
import math

import numpy as np
import pytest
from scipy import stats

from floodattrib import covariates as cv
from floodattrib.covariates import CovariateKind
from floodattrib.synthetic import (
    SyntheticSiteSpec,
    default_suite,
    generate_synthetic_site,
    precipitation_shape,
    true_location,
)

EULER_GAMMA = 0.5772156649015329


def test_zero_slope_matches_direct_gumbel_draws():
    pooled, direct = [], []
    for seed in range(20):
        spec = SyntheticSiteSpec(true_model="G_A", b=0.0, mu_mean=100.0, sigma=20.0, seed=seed,
                                 precip_amplitude=0.4, precip_trend=0.5)
        pooled.append(generate_synthetic_site(spec).annual_max.discharge)
        direct.append(np.random.default_rng(seed).gumbel(100.0, 20.0, spec.n_years))
    pooled, direct = np.concatenate(pooled), np.concatenate(direct)
    assert stats.ks_2samp(pooled, direct).pvalue > 0.01
    assert stats.kstest(pooled, stats.gumbel_r(100.0, 20.0).cdf).pvalue > 0.01


def test_zero_slope_location_is_constant():
    for model in ("G_A", "G_C", "G_R"):
        spec = SyntheticSiteSpec(true_model=model, b=0.0, mu_mean=80.0, reservoirs=((1980, 100.0, 200.0),))
        np.testing.assert_allclose(true_location(spec), 80.0, rtol=1e-14)


def doubling_spec(seed=0, sigma=10.0):
    base = SyntheticSiteSpec(true_model="G_C", crop_share=0.3, yield_2000=6.0, yield_trend=0.15, sigma=sigma,
                             seed=seed)
    years = np.arange(base.start_year, base.start_year + base.n_years)
    li = cv.land_use_intensity_series(
        [cv.CropCell(base.crop_share * base.catchment_area, base.yield_2000, base.yield_trend)],
        base.catchment_area, years, base.y_ref,
    ).values
    # LI is linear in time, so this doubles the decade-mean location exactly
    return dataclasses.replace(base, b=math.log(2.0) / (li[-10:].mean() - li[:10].mean()))


def test_location_doubling_moment_check():
    spec = doubling_spec()
    mu = true_location(spec)
    assert mu[-10:].mean() / mu[:10].mean() == pytest.approx(2.0, rel=1e-12)
    first, last = [], []
    for seed in range(100):
        z = generate_synthetic_site(dataclasses.replace(spec, seed=seed)).annual_max.discharge
        first.append(z[:10].mean())
        last.append(z[-10:].mean())
    first, last = np.array(first), np.array(last)
    # Gumbel mean is mu + gamma sigma and its variance is (pi sigma)^2 / 6
    se = math.pi * spec.sigma / math.sqrt(6) / math.sqrt(10 * 100)
    assert first.mean() == pytest.approx(mu[:10].mean() + EULER_GAMMA * spec.sigma, abs=4 * se)
    assert last.mean() == pytest.approx(mu[-10:].mean() + EULER_GAMMA * spec.sigma, abs=4 * se)
    shift = EULER_GAMMA * spec.sigma
    assert (last.mean() - shift) / (first.mean() - shift) == pytest.approx(2.0, rel=0.02)


def test_fixed_seed_is_bit_identical():
    spec = default_suite(5, seed=3)[1]
    a, b = generate_synthetic_site(spec), generate_synthetic_site(spec)
    assert a.annual_max.discharge.tobytes() == b.annual_max.discharge.tobytes()
    assert a.precipitation.values.tobytes() == b.precipitation.values.tobytes()
    assert (a.crop_cells, a.reservoirs, a.flood_dates) == (b.crop_cells, b.reservoirs, b.flood_dates)
    c = generate_synthetic_site(dataclasses.replace(spec, seed=spec.seed + 1))
    assert a.annual_max.discharge.tobytes() != c.annual_max.discharge.tobytes()


@pytest.mark.parametrize("kind", list(CovariateKind)[:4])
def test_emitted_precipitation_reproduces_covariate(kind):
    spec = SyntheticSiteSpec(true_model="G_A", b=0.61, precip_kind=kind, precip_level=80.0, precip_trend=0.4,
                             precip_amplitude=0.3)
    site = generate_synthetic_site(spec)
    target = precipitation_shape(spec)
    raw = cv.precipitation_covariate(site.precipitation, kind)
    np.testing.assert_allclose(raw.values, target, rtol=1e-12)
    smoothed_target = cv.loess_smooth(cv.CovariateSeries(raw.years, target, kind), spec.loess_span)
    np.testing.assert_allclose(cv.loess_smooth(raw, spec.loess_span).values, smoothed_target.values, rtol=0.02)


def test_positive_discharge_and_valid_dates():
    for spec in default_suite(10, seed=1):
        site = generate_synthetic_site(spec)
        assert np.all(site.annual_max.discharge > 0)
        assert all(1 <= d <= 366 for _, d in site.flood_dates)
        assert len(site.annual_max) == spec.n_years


def test_infeasible_shape_rejected():
    with pytest.raises(ValueError, match="non-positive precipitation"):
        generate_synthetic_site(SyntheticSiteSpec(precip_trend=-2.0))


@pytest.mark.parametrize(
    "kw",
    [dict(true_model="G_X"), dict(precip_kind=CovariateKind.LAND_USE_INTENSITY), dict(n_years=5),
     dict(sigma=0.0)],
)
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        SyntheticSiteSpec(**kw)


def test_default_suite_cycles_models():
    models = [s.true_model for s in default_suite(10)]
    assert models[:5] == ["G0", "G_A", "G_A", "G_C", "G_R"] and models[5:] == models[:5]
    assert len({s.site_id for s in default_suite(10)}) == 10
