"""Convergence diagnostics: rank-normalised split R-hat and effective sample size."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

RHAT_THRESHOLD = 1.01
ESS_THRESHOLD = 400


def _split_chains(x: np.ndarray) -> np.ndarray:
    """(chains, n) -> (2*chains, n//2), dropping the middle draw for odd n."""
    n = x.shape[1]
    half = n // 2
    return np.concatenate([x[:, :half], x[:, n - half :]], axis=0)


def _rank_normalize(x: np.ndarray) -> np.ndarray:
    ranks = stats.rankdata(x, method="average").reshape(x.shape)
    return special.ndtri((ranks - 0.375) / (x.size + 0.25))


def split_rhat_raw(x) -> float:
    """Plain split R-hat on draws shaped ``(chains, n)``."""
    x = _split_chains(np.asarray(x, dtype=float))
    m, n = x.shape
    within = x.var(axis=1, ddof=1).mean()
    between = n * x.mean(axis=1).var(ddof=1)
    var_plus = (n - 1) / n * within + between / n
    return float(np.sqrt(var_plus / within))


def rhat(x) -> float:
    """Rank-normalised split R-hat: the larger of the bulk and folded-tail versions."""
    x = np.asarray(x, dtype=float)
    bulk = split_rhat_raw(_rank_normalize(x))
    folded = np.abs(x - np.median(x))
    tail = split_rhat_raw(_rank_normalize(folded))
    return max(bulk, tail)


def _autocov(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of each row via FFT."""
    n = x.shape[1]
    xc = x - x.mean(axis=1, keepdims=True)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, nfft, axis=1)
    acov = np.fft.irfft(f * np.conj(f), nfft, axis=1)[:, :n]
    return acov / n


def ess_raw(x) -> float:
    """Multi-chain ESS with Geyer's initial monotone sequence, capped at the draw count."""
    x = np.asarray(x, dtype=float)
    m, n = x.shape
    acov = _autocov(x)
    chain_var = acov[:, 0] * n / (n - 1)
    within = chain_var.mean()
    var_plus = within * (n - 1) / n
    if m > 1:
        var_plus += x.mean(axis=1).var(ddof=1)
    rho = 1.0 - (within - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    tau = -1.0
    prev = np.inf
    for t in range(0, n - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        pair = min(pair, prev)
        prev = pair
        tau += 2.0 * pair
    ess = m * n / tau if tau > 0 else m * n
    return float(min(ess, m * n))


def ess_bulk(x) -> float:
    x = np.asarray(x, dtype=float)
    return ess_raw(_split_chains(_rank_normalize(x)))


@dataclass
class Diagnostics:
    rhat: dict = field(default_factory=dict)
    ess: dict = field(default_factory=dict)
    indeterminate: list = field(default_factory=list)
    stuck_chains: list = field(default_factory=list)
    n_divergent: int = 0
    passed: bool = False

    def to_dict(self) -> dict:
        return {
            "rhat": self.rhat,
            "ess": self.ess,
            "indeterminate": list(self.indeterminate),
            "stuck_chains": list(self.stuck_chains),
            "n_divergent": int(self.n_divergent),
            "passed": bool(self.passed),
        }


def diagnose(d, rhat_threshold=RHAT_THRESHOLD, ess_threshold=ESS_THRESHOLD) -> Diagnostics:
    """R-hat and bulk ESS per parameter of a :class:`~floodattrib.bayes.PosteriorDraws`.

    Parameters whose draws have zero variance are listed as indeterminate and get
    ``None`` in place of R-hat and ESS.
    """
    draws = d.draws
    if draws.shape[0] < 2 or draws.shape[1] < 4:
        raise ValueError("diagnostics need at least 2 chains with 4 draws each")
    out = Diagnostics()
    for j, name in enumerate(d.param_names):
        x = draws[:, :, j]
        if np.ptp(x) == 0 or np.any(x.var(axis=1) == 0):
            out.indeterminate.append(name)
            out.rhat[name] = None
            out.ess[name] = None
            continue
        out.rhat[name] = rhat(x)
        out.ess[name] = ess_bulk(x)
    if d.accept_rate is not None:
        out.stuck_chains = [int(i) for i in np.flatnonzero(np.asarray(d.accept_rate) == 0)]
    if d.n_divergent is not None:
        out.n_divergent = int(np.sum(d.n_divergent))
    out.passed = (
        not out.indeterminate
        and not out.stuck_chains
        and all(r < rhat_threshold for r in out.rhat.values())
        and all(e > ess_threshold for e in out.ess.values())
    )
    return out
