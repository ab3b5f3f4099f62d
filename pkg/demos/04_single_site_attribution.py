"""
Attributing one site
====================

A synthetic site whose floods follow 1-day rainfall. The workflow fits G0 and
the three driver-informed candidates, then picks the driver whose WAIC beats
G0 by more than 2.
"""

from floodattrib import RunConfig, SamplerConfig, SyntheticSiteSpec, generate_synthetic_site, run_site
from floodattrib.covariates import CovariateKind

spec = SyntheticSiteSpec(site_id="demo", true_model="G_A", b=0.61, n_years=70, sigma=10.0,
                         precip_amplitude=0.35, precip_trend=0.6, seed=12,
                         reservoirs=((1985, 80.0, 200.0),))
site = generate_synthetic_site(spec)
cfg = RunConfig(covariates=(CovariateKind.MAX_P1, CovariateKind.LAND_USE_INTENSITY, CovariateKind.RESERVOIR_INDEX),
                sampler=SamplerConfig(iterations=1500, warmup=500))

for mode in ("informative", "flat"):
    r = run_site(site, cfg.with_overrides(prior_mode=mode))
    print(f"\n{mode} priors -> {r.decision.selected.value} (margin {r.decision.margin:.1f})")
    for key, m in r.models.items():
        b = m.summary.get("b")
        slope = f"b median {b['q50']:+.3f}" if b else ""
        print(f"  {key:<24} WAIC {m.waic.waic:8.2f}  converged {m.converged!s:<5} {slope}")
    print(f"  trend {r.trend.slope:+.2f} %/yr, Mann-Kendall Z {r.mk.z:.2f}, "
          f"flood season day {r.seasonality.mean_day:.0f} (R = {r.seasonality.concentration_r:.2f})")
