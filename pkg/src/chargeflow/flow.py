"""Min-cost flow on small networks with continuous capacities.

Successive shortest paths: Dijkstra on reduced costs ``cost + pi[u] - pi[v]``,
potentials updated after each search, full bottleneck pushed along the path.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

INF = float("inf")


@dataclass
class FlowNetwork:
    n_nodes: int
    tail: list = field(default_factory=list)
    head: list = field(default_factory=list)
    capacity: list = field(default_factory=list)
    cost: list = field(default_factory=list)

    def add_arc(self, u, v, capacity, cost):
        if cost < 0:
            raise ValueError("arc costs must be nonnegative")
        self.tail.append(u)
        self.head.append(v)
        self.capacity.append(float(capacity))
        self.cost.append(float(cost))
        return len(self.tail) - 1

    @property
    def n_arcs(self):
        return len(self.tail)


def _residual_arcs(net, flow, tol):
    tail = np.asarray(net.tail)
    head = np.asarray(net.head)
    cap = np.asarray(net.capacity)
    cost = np.asarray(net.cost)
    fwd = cap - flow > tol
    bwd = flow > tol
    u = np.concatenate([tail[fwd], head[bwd]])
    v = np.concatenate([head[fwd], tail[bwd]])
    w = np.concatenate([cost[fwd], -cost[bwd]])
    return u, v, w


def residual_potentials(net: FlowNetwork, flow, tol=1e-12):
    """Potentials from a virtual root, by vectorized Bellman-Ford.

    Returns ``(potentials, min_reduced_cost)``. A negative-cost residual cycle
    (a non-optimal flow) shows up as a negative minimum reduced cost.
    """
    u, v, w = _residual_arcs(net, np.asarray(flow, dtype=float), tol)
    d = np.zeros(net.n_nodes)
    for _ in range(net.n_nodes + 1):
        cand = np.full(net.n_nodes, INF)
        np.minimum.at(cand, v, d[u] + w)
        new = np.minimum(d, cand)
        if np.all(new >= d - 1e-13 * (1.0 + np.abs(d))):
            break
        d = new
    reduced = w + d[u] - d[v]
    return d, float(reduced.min()) if reduced.size else 0.0


def min_cost_flow(net: FlowNetwork, source, sink, amount, tol=1e-12):
    """Send ``amount`` from ``source`` to ``sink`` at minimum cost.

    Returns the arc flow vector. Raises ``ValueError`` if the network cannot
    carry the requested amount.
    """
    n = net.n_nodes
    m = net.n_arcs
    # residual graph: arc 2k forward, 2k+1 backward
    to = [0] * (2 * m)
    cap = [0.0] * (2 * m)
    cost = [0.0] * (2 * m)
    adj = [[] for _ in range(n)]
    for k in range(m):
        u, v = net.tail[k], net.head[k]
        to[2 * k], cap[2 * k], cost[2 * k] = v, net.capacity[k], net.cost[k]
        to[2 * k + 1], cap[2 * k + 1], cost[2 * k + 1] = u, 0.0, -net.cost[k]
        adj[u].append(2 * k)
        adj[v].append(2 * k + 1)

    pi = [0.0] * n
    left = float(amount)
    while left > tol:
        dist = [INF] * n
        prev = [-1] * n
        dist[source] = 0.0
        heap = [(0.0, source)]
        done = [False] * n
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for a in adj[u]:
                if cap[a] <= tol:
                    continue
                v = to[a]
                rc = cost[a] + pi[u] - pi[v]
                if rc < 0:
                    rc = 0.0
                nd = d + rc
                if nd < dist[v]:
                    dist[v] = nd
                    prev[v] = a
                    heapq.heappush(heap, (nd, v))
        if dist[sink] == INF:
            raise ValueError("infeasible flow: sink unreachable with supply left")
        dt = dist[sink]
        for v in range(n):
            pi[v] += min(dist[v], dt)

        push = left
        v = sink
        while v != source:
            a = prev[v]
            push = min(push, cap[a])
            v = to[a ^ 1]
        v = sink
        while v != source:
            a = prev[v]
            cap[a] = 0.0 if cap[a] == push else cap[a] - push
            cap[a ^ 1] += push
            v = to[a ^ 1]
        left = 0.0 if push == left else left - push

    flow = np.array([cap[2 * k + 1] for k in range(m)])
    return flow
