"""
Gumbel annual maxima and covariate links
========================================

A flood of a given return period under a stationary Gumbel, and how the
three link forms move the location parameter when a covariate changes.
"""

import numpy as np

from floodattrib import GumbelParams, LinkForm, LinkModel, SlopePrior, Truncation, gumbel_quantile, link_mu
from floodattrib.extreme_value import slope_prior_logpdf

# a stationary site: mu = 120 m3/s, sigma = 35 m3/s
p = GumbelParams(120.0, 35.0)
for T in (2, 10, 100):
    print(f"{T:>4}-year flood: {float(gumbel_quantile(1 - 1 / T, p)):7.1f} m3/s")

# elasticity link: a 10% wetter year raises mu by about 0.61 * 10%
elastic = LinkModel(LinkForm.LOG_LOG, a=np.log(120.0) - 0.61 * np.log(40.0), b=0.61)
print("\nmu at 40 mm and 44 mm of 1-day rain:", link_mu(elastic, [40.0, 44.0]).round(2))

# log-linear links for the catchment and river-system indices
li = LinkModel(LinkForm.LOG_LINEAR, a=np.log(120.0), b=0.13)
ri = LinkModel(LinkForm.LOG_LINEAR, a=np.log(120.0), b=-0.30)
print("mu with LI = 0.4:", round(float(link_mu(li, 0.4)), 2))
print("mu with RI = 0.05 (the Traun):", round(float(link_mu(ri, 0.05)), 2))

# informative slope priors put no mass on the wrong sign
prior = SlopePrior.truncated_normal(-0.30, 0.18, Truncation.UPPER_AT_ZERO)
print("\nlog prior density of b_R at -0.3 and +0.1:", slope_prior_logpdf(np.array([-0.3, 0.1]), prior))
