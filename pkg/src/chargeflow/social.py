"""Social planner's optimum and price-of-anarchy sweeps.

The planner minimizes transport time plus the number of EVs waiting without
a slot. With queues ``q_j = T sum_i x_ij`` this is a min-cost flow: each
station drains to the sink through a free arc of capacity ``c_j / T`` and an
uncapacitated arc of unit cost ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import ProblemInstance, cost_C0, cost_Cs
from .equilibrium import ConvergenceError, SolverConfig, solve_equilibrium
from .flow import INF, FlowNetwork, min_cost_flow, residual_potentials

SELFISH_EPSILON = 1e-3


def build_flow_network(inst: ProblemInstance) -> FlowNetwork:
    """Source -> sites -> stations -> sink, nodes numbered in that order."""
    if inst.is_elastic:
        raise TypeError("wrong demand variant: the social optimum needs inelastic demand")
    m, n = inst.n_sites, inst.n_stations
    net = FlowNetwork(m + n + 2)
    source, sink = 0, m + n + 1
    for i, ri in enumerate(inst.demand.rates):
        net.add_arc(source, 1 + i, ri, 0.0)
    for i in range(m):
        for j in range(n):
            net.add_arc(1 + i, 1 + m + j, INF, inst.travel_times[i, j])
    for j in range(n):
        net.add_arc(1 + m + j, sink, inst.capacities[j] / inst.sojourn_T, 0.0)
        net.add_arc(1 + m + j, sink, INF, inst.sojourn_T)
    return net


def _arc_flows(inst, X, free_flow, paid_flow):
    """Arc flow vector of :func:`build_flow_network` for a routing ``X``."""
    return np.concatenate([X.sum(axis=1), X.ravel(), np.column_stack([free_flow, paid_flow]).ravel()])


@dataclass
class SocialOptimum:
    X: np.ndarray
    q: np.ndarray
    cost: float
    augmentations: int
    min_reduced_cost: float

    def __iter__(self):
        # unpacks as (X, q, cost)
        return iter((self.X, self.q, self.cost))


def solve_social_optimum(inst: ProblemInstance, method: str = "transport", tol: float = 1e-12):
    """Minimize ``C_s`` exactly.

    Parameters
    ----------
    inst : ProblemInstance
        Inelastic instance.
    method : {"transport", "generic"}
        ``"transport"`` runs successive shortest paths on the station-level
        condensation of the residual network (a site only matters through
        its cheapest unrouted supply or its existing flows), which scales to
        gridded instances. ``"generic"`` runs the textbook solver on the
        full network and is meant for small instances.

    Returns
    -------
    SocialOptimum
        Unpacks as ``(X, q, cost)``; ``min_reduced_cost`` is the smallest
        reduced cost on the final residual network (nonnegative at an
        optimum, up to roundoff).
    """
    if inst.is_elastic:
        raise TypeError("wrong demand variant: the social optimum needs inelastic demand")
    if method == "generic":
        net = build_flow_network(inst)
        m, n = inst.n_sites, inst.n_stations
        flow = min_cost_flow(net, 0, m + n + 1, float(inst.demand.rates.sum()), tol=tol)
        X = flow[m : m + m * n].reshape(m, n)
        augmentations = -1
    elif method == "transport":
        X, augmentations = _transport_ssp(inst, tol)
    else:
        raise ValueError(f"unknown method {method!r}")

    q = inst.sojourn_T * X.sum(axis=0)
    cost = cost_Cs(X, q, inst)
    mrc = optimality_certificate(inst, X)
    return SocialOptimum(X, q, cost, augmentations, mrc)


def optimality_certificate(inst: ProblemInstance, X) -> float:
    """Minimum reduced cost of the residual network for routing ``X``."""
    net = build_flow_network(inst)
    load = X.sum(axis=0)
    cap0 = inst.capacities / inst.sojourn_T
    free_flow = np.minimum(load, cap0)
    flows = _arc_flows(inst, X, free_flow, load - free_flow)
    # scale-aware tolerance for "arc carries flow"
    return residual_potentials(net, flows, tol=1e-12 * max(1.0, load.sum()))[1]


def _transport_ssp(inst, tol):
    kappa = inst.travel_times
    T = inst.sojourn_T
    m, n = kappa.shape
    rem = inst.demand.rates.astype(float).copy()
    X = np.zeros((m, n))
    cap0 = inst.capacities / T
    free_used = np.zeros(n)
    big = np.inf

    # node layout for the condensed graph: 0..n-1 stations, n = sink;
    # the source is implicit (distance 0, potential 0)
    pi = np.zeros(n + 1)
    augmentations = 0
    while rem.sum() > tol:
        live = np.flatnonzero(rem > 0)
        sub = kappa[live]
        first_site = live[np.argmin(sub, axis=0)]
        src_cost = sub.min(axis=0)

        # station j -> j' through a site already sending flow to j
        hop_cost = np.full((n, n), big)
        hop_site = np.full((n, n), -1)
        for j in range(n):
            users = np.flatnonzero(X[:, j] > 0)
            if users.size:
                diff = kappa[users] - kappa[users, j][:, None]
                k = np.argmin(diff, axis=0)
                hop_cost[j] = diff[k, np.arange(n)]
                hop_site[j] = users[k]
        np.fill_diagonal(hop_cost, big)
        free_left = cap0 - free_used
        sink_cost = np.where(free_left > 0, 0.0, T)

        # Dijkstra on reduced costs over stations + sink
        dist = np.full(n + 1, big)
        pred = np.full(n + 1, -1)
        red_src = src_cost - pi[:n]
        dist[:n] = np.maximum(red_src, 0.0)
        done = np.zeros(n + 1, dtype=bool)
        for _ in range(n + 1):
            cand = np.where(done, big, dist)
            u = int(np.argmin(cand))
            if cand[u] == big:
                break
            done[u] = True
            if u == n:
                break
            red_hop = np.maximum(hop_cost[u] + pi[u] - pi[:n], 0.0)
            better = (~done[:n]) & (dist[u] + red_hop < dist[:n])
            dist[:n] = np.where(better, dist[u] + red_hop, dist[:n])
            pred[:n] = np.where(better, u, pred[:n])
            rs = max(sink_cost[u] + pi[u] - pi[n], 0.0)
            if dist[u] + rs < dist[n]:
                dist[n] = dist[u] + rs
                pred[n] = u
        if dist[n] == big:
            raise ValueError("infeasible flow: sink unreachable with supply left")
        pi = pi + np.minimum(dist, dist[n])

        # walk back: sink <- end station <- ... <- first station <- source
        path = []
        j = int(pred[n])
        while j != -1:
            path.append(j)
            j = int(pred[j])
        path.reverse()

        i0 = first_site[path[0]]
        push = rem[i0]
        hops = []
        for a, b in zip(path[:-1], path[1:]):
            site = hop_site[a, b]
            hops.append((site, a, b))
            push = min(push, X[site, a])
        end = path[-1]
        use_free = free_left[end] > 0
        if use_free:
            push = min(push, free_left[end])

        rem[i0] = 0.0 if push == rem[i0] else rem[i0] - push
        X[i0, path[0]] += push
        for site, a, b in hops:
            X[site, a] = 0.0 if push == X[site, a] else X[site, a] - push
            X[site, b] += push
        if use_free:
            free_used[end] = cap0[end] if push == free_left[end] else free_used[end] + push
        augmentations += 1
    return X, augmentations


@dataclass
class PoaRow:
    r: float
    C0_selfish: float
    Cs_selfish: float
    Cs_opt: float
    gap: float
    inflow_selfish: np.ndarray = field(default=None, repr=False)
    inflow_opt: np.ndarray = field(default=None, repr=False)
    mu_selfish: np.ndarray = field(default=None, repr=False)


def poa_sweep(
    inst_template: ProblemInstance,
    r_values,
    epsilon: float = SELFISH_EPSILON,
    config: Optional[SolverConfig] = None,
):
    """Selfish equilibrium against the social optimum for each total rate.

    Demand keeps the template's spatial shape and is rescaled to each value
    of ``r_values``; the selfish side uses softmin smoothing ``epsilon``.
    """
    rows = []
    for r in r_values:
        if not r > 0:
            raise ValueError(f"sweep rates must be positive, got {r}")
        inst = inst_template.scaled(float(r)).with_epsilon(epsilon)
        try:
            eq = solve_equilibrium(inst, config)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"equilibrium failed at r={r}: {exc}", exc.mu, exc.residual, exc.iterations
            ) from exc
        opt = solve_social_optimum(inst)
        cs_self = cost_Cs(eq.X, eq.q, inst)
        rows.append(
            PoaRow(
                r=float(r),
                C0_selfish=cost_C0(eq.X, eq.q, inst),
                Cs_selfish=cs_self,
                Cs_opt=opt.cost,
                gap=cs_self - opt.cost,
                inflow_selfish=eq.X.sum(axis=0),
                inflow_opt=opt.X.sum(axis=0),
                mu_selfish=eq.mu,
            )
        )
    return rows
