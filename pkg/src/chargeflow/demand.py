"""Demand models: fixed rates, or rates thinned by customer patience."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PatienceDistribution:
    """Willingness-to-wait of arriving customers, described by its survivor
    function ``p(tau) = P(patience > tau)``.

    Subclasses provide the survivor function, its derivative, and the
    utility/conjugate pair induced by the thinned demand curve
    ``r(tau) = rbar * p(tau)``. All methods are vectorized; ``rbar`` may be a
    per-site array.
    """

    def survivor(self, tau):
        raise NotImplementedError

    def survivor_slope(self, tau):
        raise NotImplementedError

    def utility(self, r, rbar):
        raise NotImplementedError

    def conjugate(self, tau, rbar):
        raise NotImplementedError

    def subset(self, keep):
        return self


@dataclass(frozen=True)
class UniformPatience(PatienceDistribution):
    """Patience uniform on ``[0, t_max]``; ``t_max`` is a scalar or per-site array."""

    t_max: object

    def __post_init__(self):
        if np.any(np.asarray(self.t_max, dtype=float) <= 0):
            raise ValueError("t_max must be positive")

    def _t(self):
        return np.asarray(self.t_max, dtype=float)

    def survivor(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.clip(1.0 - tau / self._t(), 0.0, 1.0)

    def survivor_slope(self, tau):
        tau = np.asarray(tau, dtype=float)
        t = self._t()
        inside = (tau > 0) & (tau < t)
        return np.where(inside, -1.0 / t, 0.0)

    def utility(self, r, rbar):
        r = np.asarray(r, dtype=float)
        rbar = np.asarray(rbar, dtype=float)
        t = self._t()
        rc = np.minimum(r, rbar)
        return t * rc * (1.0 - rc / (2.0 * rbar))

    def conjugate(self, tau, rbar):
        # min over r in [0, rbar] of tau*r - U(r); the r <= rbar cap only
        # matters for tau < 0, where the minimizer sits at rbar
        tau = np.asarray(tau, dtype=float)
        rbar = np.asarray(rbar, dtype=float)
        t = self._t()
        gap = np.clip(t - tau, 0.0, None)
        inner = -rbar * gap**2 / (2.0 * t)
        below = tau * rbar - t * rbar / 2.0
        return np.where(tau < 0, below, inner)

    def subset(self, keep):
        t = self._t()
        return self if t.ndim == 0 else UniformPatience(t[keep])


@dataclass(frozen=True)
class InelasticDemand:
    rates: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float).ravel()
        if np.any(~np.isfinite(r)) or np.any(r < 0):
            raise ValueError("rates must be finite and nonnegative")
        object.__setattr__(self, "rates", r)

    @property
    def max_rates(self):
        return self.rates

    def subset(self, keep):
        return InelasticDemand(self.rates[keep])

    def scaled(self, total):
        return InelasticDemand(self.rates * (total / self.rates.sum()))


@dataclass(frozen=True)
class ElasticDemand:
    """Maximal rates ``rbar`` thinned by a patience distribution."""

    rbar: np.ndarray
    patience: PatienceDistribution

    def __post_init__(self):
        r = np.asarray(self.rbar, dtype=float).ravel()
        if np.any(~np.isfinite(r)) or np.any(r < 0):
            raise ValueError("maximal rates must be finite and nonnegative")
        object.__setattr__(self, "rbar", r)

    @property
    def max_rates(self):
        return self.rbar

    def subset(self, keep):
        return ElasticDemand(self.rbar[keep], self.patience.subset(keep))

    def scaled(self, total):
        return ElasticDemand(self.rbar * (total / self.rbar.sum()), self.patience)

    def rate(self, tau):
        return self.rbar * self.patience.survivor(tau)

    def rate_slope(self, tau):
        return self.rbar * self.patience.survivor_slope(tau)

    def utility(self, r):
        return self.patience.utility(r, self.rbar)

    def conjugate(self, tau):
        return self.patience.conjugate(tau, self.rbar)


def _require_elastic(demand):
    if not isinstance(demand, ElasticDemand):
        raise TypeError("wrong demand variant: elastic demand required")
    return demand


def elastic_rate(demand, tau):
    """Thinned rate per site at delay ``tau`` (scalar or one value per site)."""
    return _require_elastic(demand).rate(tau)


def utility(demand, r):
    return _require_elastic(demand).utility(r)


def utility_conjugate(demand, tau):
    """``min_r [tau r - U(r)]`` per site; its derivative in ``tau`` is the thinned rate."""
    return _require_elastic(demand).conjugate(tau)
