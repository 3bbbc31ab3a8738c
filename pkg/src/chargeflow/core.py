"""Domain types and closed-form building blocks.

Units are fixed throughout the package: times in minutes, rates in EV/min,
occupancies in EV counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .demand import ElasticDemand, InelasticDemand

DemandModel = Union[InelasticDemand, ElasticDemand]


# ---------------------------------------------------------------------------
# problem data
# ---------------------------------------------------------------------------


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(eq=False)
class ProblemInstance:
    """Stations, demand sites and the travel times between them.

    Parameters
    ----------
    capacities : array-like, shape (n,)
        Charging slots per station, all positive.
    travel_times : array-like, shape (m, n)
        Site-to-station travel time in minutes.
    sojourn_T : float
        Mean sojourn time at a station (minutes).
    epsilon : float
        Softmin smoothing (minutes).
    demand : InelasticDemand or ElasticDemand
        Demand model with one entry per site.
    site_xy, station_xy : array-like, optional
        Coordinates, kept for spatial post-processing.
    grid_shape : tuple, optional
        ``(g, g)`` when the sites come from a uniform grid (row-major).

    Notes
    -----
    Sites whose (maximal) rate is zero are dropped at construction, together
    with their travel-time rows and coordinates. ``kept_sites`` records the
    original indices of the surviving sites.
    """

    capacities: np.ndarray
    travel_times: np.ndarray
    sojourn_T: float
    epsilon: float
    demand: DemandModel
    site_xy: Optional[np.ndarray] = None
    station_xy: Optional[np.ndarray] = None
    grid_shape: Optional[tuple] = None
    kept_sites: np.ndarray = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.capacities, dtype=float).ravel()
        kappa = np.atleast_2d(np.asarray(self.travel_times, dtype=float))
        if c.size == 0:
            raise ValueError("at least one station is required")
        if kappa.shape[1] != c.size:
            raise ValueError(
                f"travel_times has {kappa.shape[1]} columns but there are {c.size} stations"
            )
        if np.any(~np.isfinite(c)) or np.any(c <= 0):
            raise ValueError("capacities must be positive")
        if np.any(~np.isfinite(kappa)) or np.any(kappa < 0):
            raise ValueError("travel times must be finite and nonnegative")
        if not (np.isfinite(self.sojourn_T) and self.sojourn_T > 0):
            raise ValueError("sojourn_T must be positive")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError("epsilon must be positive")
        rmax = self.demand.max_rates
        if rmax.size != kappa.shape[0]:
            raise ValueError(
                f"demand has {rmax.size} sites but travel_times has {kappa.shape[0]} rows"
            )

        keep = np.flatnonzero(rmax > 0)
        if keep.size == 0:
            raise ValueError("every demand site has zero rate")
        self.kept_sites = keep
        self.capacities = _readonly(c)
        self.travel_times = _readonly(kappa[keep])
        self.sojourn_T = float(self.sojourn_T)
        self.epsilon = float(self.epsilon)
        if keep.size != rmax.size:
            self.demand = self.demand.subset(keep)
        if self.site_xy is not None:
            self.site_xy = _readonly(np.asarray(self.site_xy, dtype=float)[keep])
        if self.station_xy is not None:
            self.station_xy = _readonly(self.station_xy)

    @property
    def n_stations(self) -> int:
        return self.capacities.size

    @property
    def n_sites(self) -> int:
        return self.travel_times.shape[0]

    @cached_property
    def travel_times_by_station(self) -> np.ndarray:
        """Transposed travel times, shape ``(n, m)``, for column reductions."""
        return np.ascontiguousarray(self.travel_times.T)

    @property
    def is_elastic(self) -> bool:
        return isinstance(self.demand, ElasticDemand)

    @property
    def rates(self) -> np.ndarray:
        """Fixed rates (inelastic) or maximal rates (elastic)."""
        return self.demand.max_rates

    def with_demand(self, demand: DemandModel) -> "ProblemInstance":
        """Copy of the instance with a different demand model on the same sites."""
        return ProblemInstance(
            capacities=self.capacities,
            travel_times=self.travel_times,
            sojourn_T=self.sojourn_T,
            epsilon=self.epsilon,
            demand=demand,
            site_xy=self.site_xy,
            station_xy=self.station_xy,
            grid_shape=self.grid_shape if demand.max_rates.size == self.n_sites else None,
        )

    def with_epsilon(self, epsilon: float) -> "ProblemInstance":
        return ProblemInstance(
            capacities=self.capacities,
            travel_times=self.travel_times,
            sojourn_T=self.sojourn_T,
            epsilon=epsilon,
            demand=self.demand,
            site_xy=self.site_xy,
            station_xy=self.station_xy,
            grid_shape=self.grid_shape,
        )

    def scaled(self, total_rate: float) -> "ProblemInstance":
        """Rescale demand so the (maximal) rates sum to ``total_rate``."""
        return self.with_demand(self.demand.scaled(total_rate))


# ---------------------------------------------------------------------------
# softmin and entropy
# ---------------------------------------------------------------------------


def softmin(y, eps, axis=-1):
    r"""Smooth minimum :math:`-\epsilon \log \sum_j e^{-y_j/\epsilon}`.

    Computed after shifting by ``min(y)`` so the exponentials never overflow.
    With a 2-d input the reduction runs along ``axis`` (rows by default).
    """
    y = np.asarray(y, dtype=float)
    if y.size == 0 or y.shape[axis] == 0:
        raise ValueError("empty input")
    if eps <= 0:
        raise ValueError("eps must be positive")
    ymin = np.min(y, axis=axis, keepdims=True)
    s = np.sum(np.exp(-(y - ymin) / eps), axis=axis, keepdims=True)
    out = ymin - eps * np.log(s)
    return np.squeeze(out, axis=axis) if out.ndim else float(out)


def softmin_fractions(y, eps, axis=-1):
    """Gradient of :func:`softmin`: a softmax over ``-y/eps``.

    Every entry is in ``(0, 1]`` up to underflow, and entries along ``axis``
    sum to one.
    """
    y = np.asarray(y, dtype=float)
    if y.size == 0 or y.shape[axis] == 0:
        raise ValueError("empty input")
    if eps <= 0:
        raise ValueError("eps must be positive")
    w = np.exp(-(y - np.min(y, axis=axis, keepdims=True)) / eps)
    return w / np.sum(w, axis=axis, keepdims=True)


def site_softmin(inst: ProblemInstance, mu):
    """Smoothed delay per site and routing fractions, station-major.

    Returns ``(tau, delta_t)`` with ``tau`` of shape ``(m,)`` and ``delta_t`` of
    shape ``(n, m)``: ``delta_t[:, i]`` is the softmin distribution over
    ``kappa_i + mu``. Same numbers as :func:`softmin` / :func:`routing_fractions`,
    laid out so the hot loops reduce over contiguous memory.
    """
    y = inst.travel_times_by_station + np.asarray(mu, dtype=float)[:, None]
    ymin = np.minimum.reduce(y, axis=0)
    y -= ymin
    y *= -1.0 / inst.epsilon
    np.exp(y, out=y)
    s = np.add.reduce(y, axis=0)
    y /= s
    return ymin - inst.epsilon * np.log(s), y


def negative_entropy(delta, tol=1e-9):
    """``sum_j delta_j log delta_j`` with ``0 log 0 = 0``; reduces the last axis."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < -tol):
        raise ValueError("negative component in a simplex vector")
    s = np.sum(delta, axis=-1)
    if np.any(np.abs(s - 1.0) > tol):
        raise ValueError("vector does not lie on the unit simplex")
    d = np.clip(delta, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(d > 0, d * np.log(np.where(d > 0, d, 1.0)), 0.0)
    return np.sum(terms, axis=-1)


def routing_fractions(kappa, mu, eps):
    """Row ``i`` is the softmin distribution over ``kappa[i] + mu``."""
    kappa = np.atleast_2d(np.asarray(kappa, dtype=float))
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (kappa.shape[1],):
        raise ValueError(f"mu has shape {mu.shape}, expected ({kappa.shape[1]},)")
    return softmin_fractions(kappa + mu, eps, axis=1)


# ---------------------------------------------------------------------------
# queue model
# ---------------------------------------------------------------------------


def waiting_time(q, c, T):
    """Queueing delay ``T * max(0, 1 - c/q)``; zero occupancy gives zero delay."""
    q = np.asarray(q, dtype=float)
    c = np.asarray(c, dtype=float)
    busy = q > c
    ratio = np.divide(c, q, out=np.ones(np.broadcast(q, c).shape), where=busy)
    return T * (1.0 - ratio)


def occupancy_for_delay(mu, c, T):
    """Inverse of :func:`waiting_time` on ``(0, T)``: ``q = T c / (T - mu)``."""
    mu = np.asarray(mu, dtype=float)
    return T * np.asarray(c, dtype=float) / (T - mu)


def departure_rate(q, T):
    return np.asarray(q, dtype=float) / T


def barrier(q, c):
    """Soft capacity penalty, the integral of ``max(0, 1 - c/s)`` from 0 to q."""
    q = np.asarray(q, dtype=float)
    c = np.asarray(c, dtype=float)
    ratio = np.where(q > c, q / c, 1.0)
    return np.where(q > c, q - c - c * np.log(ratio), 0.0)


# ---------------------------------------------------------------------------
# primal costs
# ---------------------------------------------------------------------------


def _xlogx_over(x, r):
    # sum_ij x_ij log(x_ij / r_i) with 0 log 0 = 0
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)[:, None]
    pos = x > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(pos, x * np.log(np.where(pos, x, 1.0) / r), 0.0)
    return float(np.sum(t))


def transport_cost(X, inst: ProblemInstance) -> float:
    return float(np.sum(inst.travel_times * X))


def primal_cost(X, q, inst: ProblemInstance, rates=None) -> float:
    """Regularized equilibrium objective at ``(X, q)``.

    ``rates`` defaults to the row sums of ``X``; they only enter through the
    entropy term ``eps * sum x_ij log(x_ij / r_i)``.
    """
    X = np.asarray(X, dtype=float)
    r = X.sum(axis=1) if rates is None else np.asarray(rates, dtype=float)
    live = r > 0
    ent = _xlogx_over(X[live], r[live]) if np.any(live) else 0.0
    return (
        transport_cost(X, inst)
        + float(np.sum(barrier(q, inst.capacities)))
        + inst.epsilon * ent
    )


def cost_C0(X, q, inst: ProblemInstance) -> float:
    """Transport plus barrier, i.e. the equilibrium objective without entropy."""
    return transport_cost(X, inst) + float(np.sum(barrier(q, inst.capacities)))


def cost_Cs(X, q, inst: ProblemInstance) -> float:
    """Social cost: transport plus the number of EVs waiting without a slot."""
    q = np.asarray(q, dtype=float)
    return transport_cost(X, inst) + float(np.sum(np.maximum(0.0, q - inst.capacities)))
