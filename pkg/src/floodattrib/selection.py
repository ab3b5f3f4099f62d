"""WAIC from posterior draws and the driver attribution rule."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp


class Driver(enum.Enum):
    TIME_INVARIANT = "time_invariant"
    ATMOSPHERIC = "atmospheric"
    CATCHMENT = "catchment"
    RIVER_SYSTEM = "river_system"


# exact WAIC ties resolve in this order
DRIVER_PRECEDENCE = (Driver.ATMOSPHERIC, Driver.CATCHMENT, Driver.RIVER_SYSTEM)


@dataclass(frozen=True)
class WaicReport:
    lppd: float
    p_waic: float
    waic: float
    se: float
    pointwise_lppd: np.ndarray = field(repr=False)
    pointwise_p_waic: np.ndarray = field(repr=False)

    def to_dict(self, pointwise=False) -> dict:
        out = {"lppd": self.lppd, "p_waic": self.p_waic, "waic": self.waic, "se": self.se}
        if pointwise:
            out["pointwise_lppd"] = self.pointwise_lppd.tolist()
            out["pointwise_p_waic"] = self.pointwise_p_waic.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "WaicReport":
        return cls(
            d["lppd"],
            d["p_waic"],
            d["waic"],
            d["se"],
            np.asarray(d.get("pointwise_lppd", []), dtype=float),
            np.asarray(d.get("pointwise_p_waic", []), dtype=float),
        )


def waic_from_loglik(loglik) -> WaicReport:
    """WAIC from a ``(draws, observations)`` matrix of pointwise log-likelihoods.

    Uses the variance form of the effective number of parameters.
    """
    ll = np.asarray(loglik, dtype=float)
    if ll.ndim != 2:
        raise ValueError("log-likelihood matrix must be (draws, observations)")
    s, n = ll.shape
    if s < 2:
        raise ValueError("WAIC needs at least 2 posterior draws")
    if n == 0:
        raise ValueError("WAIC needs at least one observation")
    lppd_i = logsumexp(ll, axis=0) - math.log(s)
    p_i = ll.var(axis=0, ddof=1)
    elpd_i = lppd_i - p_i
    lppd = float(lppd_i.sum())
    p_waic = float(p_i.sum())
    se = float(2.0 * math.sqrt(n * elpd_i.var())) if n > 1 else 0.0
    return WaicReport(lppd, p_waic, -2.0 * (lppd - p_waic), se, lppd_i, p_i)


def waic(draws, prob) -> WaicReport:
    """WAIC of fitted draws (:class:`PosteriorDraws`) on the problem's observations."""
    return waic_from_loglik(prob.pointwise_loglik(draws.flat()))


@dataclass(frozen=True)
class AttributionDecision:
    selected: Driver
    waic_table: dict
    margin: float
    threshold: float
    tie_break: tuple = DRIVER_PRECEDENCE

    def to_dict(self) -> dict:
        return {
            "selected": self.selected.value,
            "waic": {k.value: v for k, v in self.waic_table.items()},
            "margin": self.margin,
            "threshold": self.threshold,
            "tie_break": [d.value for d in self.tie_break],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttributionDecision":
        return cls(
            Driver(d["selected"]),
            {Driver(k): v for k, v in d["waic"].items()},
            d["margin"],
            d["threshold"],
            tuple(Driver(x) for x in d.get("tie_break", [x.value for x in DRIVER_PRECEDENCE])),
        )


def _waic_value(r) -> float:
    return float(r.waic if isinstance(r, WaicReport) else r)


def attribute(g0, candidates: dict, threshold: float = 2.0) -> AttributionDecision:
    """Pick the driver whose model beats the time-invariant one by more than ``threshold``.

    ``g0`` and the values of ``candidates`` (keyed by :class:`Driver`) may be
    :class:`WaicReport` objects or plain WAIC numbers. The margin is
    ``WAIC(G0) - WAIC(best candidate)``.
    """
    if not candidates:
        raise ValueError("attribution needs at least one driver-informed candidate")
    g0_waic = _waic_value(g0)
    table = {Driver.TIME_INVARIANT: g0_waic}
    for drv, rep in candidates.items():
        drv = Driver(drv)
        if drv is Driver.TIME_INVARIANT:
            raise ValueError("the time-invariant model cannot be a candidate")
        table[drv] = _waic_value(rep)
    if any(math.isnan(v) for v in table.values()):
        raise ValueError(f"NaN WAIC in attribution inputs: {table}")
    ordered = [d for d in DRIVER_PRECEDENCE if d in table]
    best = min(ordered, key=lambda d: (table[d], ordered.index(d)))
    margin = g0_waic - table[best]
    selected = best if table[best] < g0_waic - threshold else Driver.TIME_INVARIANT
    return AttributionDecision(selected, table, margin, threshold)
