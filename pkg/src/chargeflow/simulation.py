"""Discrete-event simulation of selfish station choice.

EVs arrive as a Poisson process, spawn at a demand site drawn in proportion
to the site rates, and join the station minimizing travel time plus the
current waiting time ``T [1 - c_j/q_j]^+`` evaluated on the integer queue
before they join (ties go to the lowest station index). Each EV leaves after
an exponential sojourn of mean ``T`` whether or not it was served.

Randomness comes from numpy's PCG64 generator. ``SeedSequence(seed)`` is
spawned into three independent streams, in this order: arrival gaps, site
draws, sojourn times. Variates are drawn in fixed-size blocks, so a seed
fully determines a run.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ProblemInstance, waiting_time

ARRIVAL, DEPARTURE = 0, 1
_BLOCK = 4096


@dataclass(frozen=True)
class SimConfig:
    seed: int
    horizon: float
    warmup: float = 0.0
    rate: Optional[float] = None
    sample_stride: float = 1.0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not self.horizon > self.warmup >= 0:
            raise ValueError("need horizon > warmup >= 0")
        if not self.sample_stride > 0:
            raise ValueError("sample_stride must be positive")
        if self.rate is not None and self.rate < 0:
            raise ValueError("rate must be nonnegative")


@dataclass
class EventLog:
    """Arrival/departure events and periodic occupancy snapshots.

    ``kinds`` uses 0 for arrivals and 1 for departures; ``ev_ids`` ties each
    departure to its arrival. ``snapshot_q[k]`` is the occupancy after all
    events up to and including ``snapshot_times[k]``.
    """

    times: np.ndarray
    kinds: np.ndarray
    sites: np.ndarray
    stations: np.ndarray
    ev_ids: np.ndarray
    snapshot_times: np.ndarray
    snapshot_q: np.ndarray
    config: SimConfig
    rate: float

    def __len__(self):
        return self.times.size


class _Stream:
    """Block-buffered draws from one generator."""

    def __init__(self, seed_seq, draw):
        self.gen = np.random.Generator(np.random.PCG64(seed_seq))
        self.draw = draw
        self.buf = np.empty(0)
        self.pos = 0

    def next(self):
        if self.pos == self.buf.size:
            self.buf = self.draw(self.gen, _BLOCK)
            self.pos = 0
        v = self.buf[self.pos]
        self.pos += 1
        return v


def simulate(inst: ProblemInstance, cfg: SimConfig) -> EventLog:
    if inst.is_elastic:
        raise TypeError("wrong demand variant: the stochastic simulator needs inelastic demand")
    T = inst.sojourn_T
    kappa = inst.travel_times
    cap = inst.capacities
    n = inst.n_stations
    rate = float(inst.demand.rates.sum() if cfg.rate is None else cfg.rate)

    gaps_ss, sites_ss, sojourn_ss = np.random.SeedSequence(int(cfg.seed)).spawn(3)
    gaps = _Stream(gaps_ss, lambda g, k: g.standard_exponential(k))
    uniforms = _Stream(sites_ss, lambda g, k: g.random(k))
    sojourns = _Stream(sojourn_ss, lambda g, k: g.standard_exponential(k))
    cdf = np.cumsum(inst.demand.rates)
    cdf /= cdf[-1]

    q = np.zeros(n, dtype=np.int64)
    events = []
    snap_t = []
    snap_q = []
    next_snap = 0.0
    calendar = []  # (time, DEPARTURE, seq, station, ev_id)
    seq = 0
    ev = 0

    t_arr = gaps.next() / rate if rate > 0 else np.inf
    while True:
        t_dep = calendar[0][0] if calendar else np.inf
        t_next = min(t_dep, t_arr)
        if t_next > cfg.horizon:
            break
        while next_snap < t_next:
            snap_t.append(next_snap)
            snap_q.append(q.copy())
            next_snap += cfg.sample_stride
        if t_dep <= t_arr:
            t, _, _, j, eid = heapq.heappop(calendar)
            q[j] -= 1
            events.append((t, DEPARTURE, -1, j, eid))
        else:
            t = t_arr
            i = min(int(np.searchsorted(cdf, uniforms.next(), side="right")), cdf.size - 1)
            mu = waiting_time(q, cap, T)
            j = int(np.argmin(kappa[i] + mu))
            q[j] += 1
            events.append((t, ARRIVAL, i, j, ev))
            heapq.heappush(calendar, (t + T * sojourns.next(), DEPARTURE, seq, j, ev))
            seq += 1
            ev += 1
            t_arr = t + gaps.next() / rate
    while next_snap <= cfg.horizon:
        snap_t.append(next_snap)
        snap_q.append(q.copy())
        next_snap += cfg.sample_stride

    if events:
        cols = list(zip(*events))
    else:
        cols = [[], [], [], [], []]
    return EventLog(
        times=np.array(cols[0], dtype=float),
        kinds=np.array(cols[1], dtype=np.int8),
        sites=np.array(cols[2], dtype=np.int64),
        stations=np.array(cols[3], dtype=np.int64),
        ev_ids=np.array(cols[4], dtype=np.int64),
        snapshot_times=np.array(snap_t, dtype=float),
        snapshot_q=np.array(snap_q, dtype=np.int64).reshape(len(snap_t), n),
        config=cfg,
        rate=rate,
    )


def occupancy_path(log: EventLog, n_stations: int):
    """Occupancy right after each event, shape ``(len(log), n_stations)``."""
    inc = np.zeros((len(log), n_stations), dtype=np.int64)
    sign = np.where(log.kinds == ARRIVAL, 1, -1)
    inc[np.arange(len(log)), log.stations] = sign
    return np.cumsum(inc, axis=0)


@dataclass
class SimSummary:
    mean_q: np.ndarray
    mean_mu: np.ndarray
    total_mean: float
    total_var: float
    effective_rate: float
    little_residual: float
    fluid_relative_error: Optional[np.ndarray] = None


def summarize(log: EventLog, inst: ProblemInstance, solution=None) -> SimSummary:
    """Time averages over ``[warmup, horizon]`` of the piecewise-constant queues.

    If an equilibrium ``solution`` is given, the relative deviation of the
    mean occupancies from its ``q`` is reported per station.
    """
    cfg = log.config
    t0, t1 = cfg.warmup, cfg.horizon
    window = t1 - t0
    n = inst.n_stations
    if len(log) == 0:
        raise ValueError("empty post-warmup window: no events recorded")
    q_after = occupancy_path(log, n)
    # state before the first event is empty
    edges = np.concatenate([[0.0], log.times, [t1]])
    states = np.vstack([np.zeros((1, n), dtype=np.int64), q_after])
    lo = np.clip(edges[:-1], t0, t1)
    hi = np.clip(edges[1:], t0, t1)
    w = hi - lo
    if w.sum() <= 0:
        raise ValueError("empty post-warmup window")
    mean_q = (w @ states) / window
    mu = waiting_time(states.astype(float), inst.capacities, inst.sojourn_T)
    mean_mu = (w @ mu) / window
    tot = states.sum(axis=1)
    total_mean = float(w @ tot) / window
    total_var = float(w @ (tot - total_mean) ** 2) / window
    in_window = (log.kinds == ARRIVAL) & (log.times >= t0) & (log.times <= t1)
    r_eff = float(np.count_nonzero(in_window)) / window
    scale = log.rate * inst.sojourn_T
    little = abs(total_mean - r_eff * inst.sojourn_T) / scale if scale > 0 else 0.0
    rel = None
    if solution is not None:
        rel = np.abs(mean_q - solution.q) / solution.q
    return SimSummary(mean_q, mean_mu, total_mean, total_var, r_eff, little, rel)
