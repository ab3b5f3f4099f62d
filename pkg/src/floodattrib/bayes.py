"""Posterior for covariate-linked Gumbel models and a Hamiltonian Monte Carlo sampler.

Parameters are ``(a, log_sigma)`` for the time-invariant model and
``(a, b, log_sigma)`` when a covariate drives the location::

    log(mu_i) = a + b * g(x_i),   sigma = exp(log_sigma)

with ``g = log`` for the log-log link and the identity for the log-linear link.
Flat (improper) priors are used on ``a`` and ``log_sigma`` unless Gaussian priors
are supplied explicitly.

The sampler works on an unconstrained, decorrelated reparametrisation:
the covariate is centred and scaled, and a truncated slope is sampled as the
log of its distance from zero (with the Jacobian added). Chains are advanced in
lock-step with numpy but each owns its RNG stream and its own adaptation state,
so results do not depend on how chains are scheduled.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .covariates import CovariateSeries
from .extreme_value import (
    LinkForm,
    SlopePrior,
    Truncation,
    gumbel_moment_estimates,
)
from .series import AnnualMaxSeries

logger = logging.getLogger(__name__)

# Each iteration scales the step size by U(1 - j, 1 + j). A wide range keeps a fixed
# 8-step trajectory from locking onto a half period, which makes draws antithetic.
STEP_JITTER = 0.5
# Starts placing an observation more than this many scale units below its location
# sit in the Gumbel's double-exponential tail, where gradients defeat any step size.
INIT_MIN_RESIDUAL = -10.0


class InitializationError(RuntimeError):
    pass


class SamplerError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaussianPrior:
    mean: float
    sd: float

    def logpdf(self, x):
        u = (x - self.mean) / self.sd
        return -0.5 * u * u - math.log(self.sd) - 0.5 * math.log(2 * math.pi)

    def grad(self, x):
        return -(x - self.mean) / self.sd**2


class FitProblem:
    """Observations, optional covariate, link form and priors for one model fit.

    Parameters
    ----------
    observations : AnnualMaxSeries
    covariate : CovariateSeries, optional
        Must cover exactly the observation years. Omit for the time-invariant model.
    link : LinkForm
    slope_prior : SlopePrior
    intercept_prior, log_scale_prior : GaussianPrior, optional
        Proper priors on ``a`` and ``log_sigma``; flat when omitted.
    """

    def __init__(
        self,
        observations: AnnualMaxSeries,
        covariate: CovariateSeries | None = None,
        link: LinkForm = LinkForm.TIME_INVARIANT,
        slope_prior: SlopePrior = SlopePrior.flat(),
        intercept_prior: GaussianPrior | None = None,
        log_scale_prior: GaussianPrior | None = None,
    ):
        if len(observations) == 0:
            raise ValueError("no observations to fit")
        link = LinkForm(link)
        if (covariate is None) != (link is LinkForm.TIME_INVARIANT):
            raise ValueError("a covariate is required exactly when the link is not time-invariant")
        self.observations = observations
        self.covariate = covariate
        self.link = link
        self.slope_prior = slope_prior
        self.intercept_prior = intercept_prior
        self.log_scale_prior = log_scale_prior
        self.z = observations.discharge
        if covariate is not None:
            if not np.array_equal(np.asarray(covariate.years), observations.years):
                raise ValueError("covariate years do not align one-to-one with the observation years")
            self.g = link.transform(covariate.values)
        else:
            self.g = np.zeros_like(self.z)
        self.g_center = float(self.g.mean())
        sd = float(self.g.std())
        self.g_scale = sd if sd > 1e-12 else 1.0
        if not slope_prior.is_flat:
            self._slope_log_norm = (-math.log(slope_prior.sd) - 0.5 * math.log(2 * math.pi)
                                    - slope_prior.log_retained_mass)

    @property
    def has_slope(self) -> bool:
        return self.link is not LinkForm.TIME_INVARIANT

    @property
    def param_names(self) -> tuple[str, ...]:
        return ("a", "b", "log_sigma") if self.has_slope else ("a", "log_sigma")

    @property
    def dim(self) -> int:
        return len(self.param_names)

    @property
    def improper(self) -> bool:
        flat_slope = self.has_slope and self.slope_prior.is_flat
        return flat_slope or self.intercept_prior is None or self.log_scale_prior is None

    def _split(self, theta):
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        a = theta[:, 0]
        b = theta[:, 1] if self.has_slope else np.zeros_like(a)
        return a, b, theta[:, -1]

    def pointwise_loglik(self, theta) -> np.ndarray:
        """Gumbel log-likelihood of every observation, shape ``(k, n)`` for ``k`` parameter rows."""
        a, b, ls = self._split(theta)
        mu = np.exp(a[:, None] + b[:, None] * self.g[None, :])
        u = (self.z[None, :] - mu) / np.exp(ls)[:, None]
        with np.errstate(over="ignore", invalid="ignore"):
            return -ls[:, None] - u - np.exp(-u)

    def logp_and_grad(self, theta):
        """Vectorised log-posterior and its gradient for parameter rows ``theta`` (k, d)."""
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        n = len(self.z)
        a, ls = theta[:, :1], theta[:, -1]
        eta = a + theta[:, 1:2] * self.g if self.has_slope else np.broadcast_to(a, (len(a), n))
        grad = np.empty_like(theta)
        with np.errstate(over="ignore", invalid="ignore"):
            mu = np.exp(eta)
            inv_sigma = np.exp(-ls)[:, None]
            u = (self.z - mu) * inv_sigma
            e = np.exp(-u)
            logp = -n * ls - np.sum(u + e, axis=1)
            r = (1.0 - e) * mu * inv_sigma
            grad[:, 0] = r.sum(axis=1)
            grad[:, -1] = np.sum(u * (1.0 - e), axis=1) - n
            if self.has_slope:
                b = theta[:, 1]
                grad[:, 1] = r @ self.g
                prior = self.slope_prior
                if not prior.is_flat:
                    dev = (b - prior.mean) / prior.sd
                    logp = logp - 0.5 * dev * dev + self._slope_log_norm
                    grad[:, 1] -= dev / prior.sd
                    logp = np.where(prior.in_support(b), logp, -np.inf)
        if self.intercept_prior is not None:
            logp = logp + self.intercept_prior.logpdf(theta[:, 0])
            grad[:, 0] += self.intercept_prior.grad(theta[:, 0])
        if self.log_scale_prior is not None:
            logp = logp + self.log_scale_prior.logpdf(ls)
            grad[:, -1] += self.log_scale_prior.grad(ls)
        logp = np.where(np.isfinite(logp), logp, -np.inf)
        return logp, grad


def log_posterior(theta, prob: FitProblem) -> float:
    """Unnormalised log-posterior at a single parameter vector (``-inf`` off the prior support)."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameter vector must be finite")
    return float(prob.logp_and_grad(theta)[0][0])


def grad_log_posterior(theta, prob: FitProblem) -> np.ndarray:
    """Analytic gradient of :func:`log_posterior` w.r.t. ``(a, [b,] log_sigma)``.

    ``theta`` must lie strictly inside the slope prior's support.
    """
    theta = np.asarray(theta, dtype=float)
    if prob.has_slope and prob.slope_prior.truncation is not Truncation.NONE:
        b = theta[1]
        if not prob.slope_prior.in_support(b) or b == 0:
            raise ValueError("gradient requested on or outside the truncated prior support")
    return prob.logp_and_grad(theta)[1][0]


class _Unconstrained:
    """Map between sampler coordinates ``u = (a_c, beta, log_sigma)`` and ``(a, b, log_sigma)``.

    ``a_c = a + b * c`` is the intercept at the covariate mean ``c``; ``b_s = b * s``
    is the slope per covariate standard deviation; ``beta = b_s`` for an unbounded
    slope and ``log(|b_s|)`` when the prior is truncated at zero.
    """

    def __init__(self, prob: FitProblem):
        self.prob = prob
        self.c = prob.g_center
        self.s = prob.g_scale
        trunc = prob.slope_prior.truncation if prob.has_slope else Truncation.NONE
        self.sign = {Truncation.NONE: 0.0, Truncation.LOWER_AT_ZERO: 1.0, Truncation.UPPER_AT_ZERO: -1.0}[trunc]

    def to_theta(self, u):
        if not self.prob.has_slope:
            return u.copy()
        theta = np.empty_like(u)
        beta = u[:, 1]
        b = (beta if self.sign == 0 else self.sign * np.exp(beta)) / self.s
        theta[:, 0] = u[:, 0] - b * self.c
        theta[:, 1] = b
        theta[:, 2] = u[:, 2]
        return theta

    def from_theta(self, theta):
        theta = np.atleast_2d(theta)
        if not self.prob.has_slope:
            return theta.copy()
        a, b, ls = theta[:, 0], theta[:, 1], theta[:, 2]
        bs = b * self.s
        beta = bs if self.sign == 0 else np.log(self.sign * bs)
        return np.stack([a + b * self.c, beta, ls], axis=1)

    def logp_and_grad(self, u):
        # divergent trajectories overflow here; the sampler rejects non-finite states
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return self._logp_and_grad(u)

    def _logp_and_grad(self, u):
        theta = self.to_theta(u)
        logp, g = self.prob.logp_and_grad(theta)
        if not self.prob.has_slope:
            return logp, g
        # chain rule: a = a_c - b c, b = b_s / s, b_s = beta or sign * exp(beta)
        db_dbeta = 1.0 / self.s if self.sign == 0 else theta[:, 1]
        g[:, 1] = (g[:, 1] - self.c * g[:, 0]) * db_dbeta
        if self.sign != 0:
            logp = logp + u[:, 1]
            g[:, 1] += 1.0
        return logp, g


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 4
    iterations: int = 10000
    warmup: int = 1000
    seed: int | tuple = 0
    leapfrog_steps: int = 8
    target_accept: float = 0.8
    step_size_min: float = 1e-6
    step_size_max: float = 5.0
    init_retries: int = 100

    def __post_init__(self):
        if self.chains < 1 or self.iterations < 1 or self.warmup < 0 or self.leapfrog_steps < 1:
            raise ValueError("chains, iterations and leapfrog_steps must be positive; warmup non-negative")
        if not 0 < self.target_accept < 1:
            raise ValueError("target acceptance must lie in (0, 1)")
        if not 0 < self.step_size_min <= self.step_size_max:
            raise ValueError("invalid step-size bounds")


@dataclass
class PosteriorDraws:
    """Post-warmup draws, shape ``(chains, iterations, dim)``, on the natural scale."""

    draws: np.ndarray
    param_names: tuple[str, ...]
    seeds: list = field(default_factory=list)
    accept_rate: np.ndarray | None = None
    step_size: np.ndarray | None = None
    n_divergent: np.ndarray | None = None
    improper: bool = False

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_iterations(self) -> int:
        return self.draws.shape[1]

    def flat(self) -> np.ndarray:
        return self.draws.reshape(-1, self.draws.shape[-1])

    def param(self, name: str) -> np.ndarray:
        """Draws of one parameter, shape ``(chains, iterations)``."""
        return self.draws[:, :, self.param_names.index(name)]


class _DualAveraging:
    def __init__(self, eps0, target, gamma=0.05, t0=10.0, kappa=0.75):
        self.target, self.gamma, self.t0, self.kappa = target, gamma, t0, kappa
        self.restart(eps0)

    def restart(self, eps0):
        self.mu = np.log(10.0 * eps0)
        self.hbar = np.zeros_like(eps0)
        self.log_eps_bar = np.zeros_like(eps0)
        self.t = 0

    def update(self, accept_stat):
        self.t += 1
        w = 1.0 / (self.t + self.t0)
        self.hbar = (1 - w) * self.hbar + w * (self.target - accept_stat)
        log_eps = self.mu - math.sqrt(self.t) / self.gamma * self.hbar
        eta = self.t ** (-self.kappa)
        self.log_eps_bar = eta * log_eps + (1 - eta) * self.log_eps_bar
        return np.exp(log_eps)

    @property
    def final(self):
        return np.exp(self.log_eps_bar)


def _adaptation_windows(warmup: int) -> list[int]:
    """Iteration indices (exclusive ends) at which the diagonal metric is re-estimated."""
    if warmup < 20:
        return []
    if warmup >= 150:
        init, term, base = 75, 50, 25
    else:
        init, term = int(0.15 * warmup), int(0.1 * warmup)
        base = warmup - init - term
    ends = []
    start, size = init, base
    last = warmup - term
    while start < last:
        end = start + size
        if end + 2 * size > last:
            end = last
        ends.append(end)
        start, size = end, 2 * size
    return ends


def _initial_points(prob, tr, rngs, retries):
    est = gumbel_moment_estimates(prob.z)
    mu_hat = est.mu if est.mu > 0 else float(np.median(prob.z))
    if not mu_hat > 0:
        raise InitializationError("cannot derive a positive location estimate from the data")
    rows = []
    for rng in rngs:
        for _ in range(retries):
            ac = math.log(mu_hat) + rng.uniform(-0.5, 0.5)
            ls = math.log(est.sigma) + rng.uniform(-0.5, 0.5)
            if prob.has_slope:
                b = float(prob.slope_prior.sample(rng))
                if tr.sign != 0 and b == 0.0:
                    continue
                theta = np.array([[ac - b * tr.c, b, ls]])
                u = tr.from_theta(theta)
            else:
                u = np.array([[ac, ls]])
            logp, grad = tr.logp_and_grad(u)
            if not (np.isfinite(logp[0]) and np.all(np.isfinite(grad))):
                continue
            a, b, ls = prob._split(tr.to_theta(u))
            resid = (prob.z - np.exp(a[0] + b[0] * prob.g)) / math.exp(ls[0])
            if resid.min() >= INIT_MIN_RESIDUAL:
                rows.append(u[0])
                break
        else:
            raise InitializationError(f"no usable starting point after {retries} initialisation attempts")
    return np.array(rows)


def sample(prob: FitProblem, cfg: SamplerConfig = SamplerConfig()) -> PosteriorDraws:
    """Draw ``cfg.chains`` HMC chains of ``cfg.iterations`` post-warmup draws.

    Warmup adapts a per-chain step size by dual averaging and a diagonal mass
    matrix in doubling windows. Identical ``(prob, cfg)`` give bit-identical draws.
    """
    flat_count = sum(
        [prob.has_slope and prob.slope_prior.is_flat, prob.intercept_prior is None, prob.log_scale_prior is None]
    )
    if flat_count and len(prob.z) < 3:
        raise ValueError("flat priors need at least 3 observations for a proper posterior")

    root = np.random.SeedSequence(cfg.seed)
    children = root.spawn(cfg.chains)
    rngs = [np.random.default_rng(c) for c in children]
    tr = _Unconstrained(prob)
    k, d = cfg.chains, prob.dim

    u = _initial_points(prob, tr, rngs, cfg.init_retries)
    logp, grad = tr.logp_and_grad(u)
    inv_metric = np.ones((k, d))
    eps = _initial_step_size(tr, u, logp, grad, inv_metric, rngs, cfg)
    da = _DualAveraging(eps, cfg.target_accept)
    windows = _adaptation_windows(cfg.warmup)
    window_start = (75 if cfg.warmup >= 150 else int(0.15 * cfg.warmup)) if windows else 0
    window_buf = []

    total = cfg.warmup + cfg.iterations
    out = np.empty((k, cfg.iterations, d))
    accepted = np.zeros(k)
    warm_accept = np.zeros(k)
    divergent = np.zeros(k, dtype=int)
    for it in range(total):
        jitter = np.array([rng.uniform(1 - STEP_JITTER, 1 + STEP_JITTER) for rng in rngs])
        u, logp, grad, acc_stat, moved, div = _hmc_step(
            tr, u, logp, grad, eps * jitter, inv_metric, rngs, cfg.leapfrog_steps
        )
        if it < cfg.warmup:
            warm_accept += moved
            eps = np.clip(da.update(acc_stat), cfg.step_size_min, cfg.step_size_max)
            if windows and it >= window_start:
                window_buf.append(u.copy())
                if it + 1 == windows[0]:
                    buf = np.array(window_buf)
                    n = buf.shape[0]
                    var = buf.var(axis=0, ddof=1) if n > 1 else np.ones((k, d))
                    inv_metric = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
                    window_buf = []
                    windows = windows[1:]
                    eps = _initial_step_size(tr, u, logp, grad, inv_metric, rngs, cfg, eps)
                    da.restart(eps)
            if it + 1 == cfg.warmup:
                if np.any(warm_accept == 0):
                    raise SamplerError(
                        f"chains {np.flatnonzero(warm_accept == 0).tolist()} rejected every warmup proposal; "
                        f"final step sizes {eps.tolist()}"
                    )
                eps = np.clip(da.final, cfg.step_size_min, cfg.step_size_max)
        else:
            j = it - cfg.warmup
            out[:, j, :] = tr.to_theta(u)
            accepted += moved
            divergent += div
    if cfg.warmup == 0 and np.any(accepted == 0):
        raise SamplerError("a chain never moved; the step size is unsuitable for this posterior")
    return PosteriorDraws(
        draws=out,
        param_names=prob.param_names,
        seeds=[list(c.spawn_key) for c in children],
        accept_rate=accepted / cfg.iterations,
        step_size=eps,
        n_divergent=divergent,
        improper=prob.improper,
    )


def _hmc_step(tr, u, logp, grad, eps, inv_metric, rngs, n_steps):
    k, d = u.shape
    p0 = np.stack([rng.standard_normal(d) for rng in rngs]) / np.sqrt(inv_metric)
    e = eps[:, None]
    q = u.copy()
    p = p0 + 0.5 * e * grad
    lp_new, g_new = logp, grad
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n_steps):
            q = q + e * inv_metric * p
            lp_new, g_new = tr.logp_and_grad(q)
            if step < n_steps - 1:
                p = p + e * g_new
        p = p + 0.5 * e * g_new
        h0 = logp - 0.5 * np.sum(p0 * p0 * inv_metric, axis=1)
        h1 = lp_new - 0.5 * np.sum(p * p * inv_metric, axis=1)
        log_ratio = h1 - h0
    finite = np.isfinite(log_ratio) & np.all(np.isfinite(g_new), axis=1)
    log_ratio = np.where(finite, log_ratio, -np.inf)
    divergent = ~finite | (log_ratio < -1000.0)
    acc_stat = np.exp(np.minimum(log_ratio, 0.0))
    draw = np.array([rng.uniform() for rng in rngs])
    moved = finite & (np.log(draw) < log_ratio)
    u_next = np.where(moved[:, None], q, u)
    logp_next = np.where(moved, lp_new, logp)
    grad_next = np.where(moved[:, None], g_new, grad)
    return u_next, logp_next, grad_next, acc_stat, moved, divergent


def _initial_step_size(tr, u, logp, grad, inv_metric, rngs, cfg, eps=None):
    """Per-chain heuristic: double or halve a single leapfrog step until acceptance crosses 0.5."""
    k = u.shape[0]
    eps = np.ones(k) if eps is None else eps.copy()
    eps = np.clip(eps, cfg.step_size_min, cfg.step_size_max)
    direction = None
    for _ in range(50):
        _, _, _, acc, _, _ = _hmc_step(tr, u, logp, grad, eps, inv_metric, _Frozen(rngs), 1)
        up = acc > 0.5
        if direction is None:
            direction = np.where(up, 1.0, -1.0)
        crossing = np.where(direction > 0, ~up, up)
        active = ~crossing & (eps > cfg.step_size_min) & (eps < cfg.step_size_max)
        if not np.any(active):
            break
        eps = np.where(active, eps * 2.0**direction, eps)
        eps = np.clip(eps, cfg.step_size_min, cfg.step_size_max)
    return eps


class _Frozen(list):
    """Deterministic momentum source for the step-size heuristic, independent of the chain RNGs."""

    def __init__(self, rngs):
        super().__init__(np.random.default_rng(1234 + i) for i in range(len(rngs)))
