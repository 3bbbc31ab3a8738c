import numpy as np
import pytest
from scipy.optimize import linprog

from chargeflow import (
    InelasticDemand,
    ProblemInstance,
    cost_Cs,
    poa_sweep,
    solve_equilibrium,
    solve_social_optimum,
)
from chargeflow.flow import FlowNetwork, min_cost_flow
from chargeflow.social import build_flow_network, optimality_certificate

from conftest import elastic_toy, example1

R0 = 20 / 51  # selfish indifference point of the two-station example


def lp_optimum(inst):
    """Planner's LP solved by HiGHS: min k.x + sum z, z >= T sum_i x_ij - c, z >= 0."""
    m, n = inst.n_sites, inst.n_stations
    T = inst.sojourn_T
    cost = np.concatenate([inst.travel_times.ravel(), np.ones(n)])
    A_eq = np.zeros((m, m * n + n))
    for i in range(m):
        A_eq[i, i * n:(i + 1) * n] = 1
    A_ub = np.zeros((n, m * n + n))
    for j in range(n):
        A_ub[j, j:m * n:n] = T
        A_ub[j, m * n + j] = -1
    res = linprog(cost, A_ub=A_ub, b_ub=inst.capacities, A_eq=A_eq, b_eq=inst.rates,
                  bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def test_ample_capacity_routes_to_nearest():
    rng = np.random.default_rng(1)
    kappa = rng.uniform(0, 20, (6, 3))
    r = rng.uniform(0.1, 1, 6)
    inst = ProblemInstance([1e4] * 3, kappa, 60.0, 1.0, InelasticDemand(r))
    X, q, cost = solve_social_optimum(inst)
    assert cost == pytest.approx(np.sum(r * kappa.min(axis=1)))
    np.testing.assert_array_equal(np.argmax(X, axis=1), np.argmin(kappa, axis=1))


@pytest.mark.parametrize("method", ["transport", "generic"])
def test_example1_social(method):
    X, q, cost = solve_social_optimum(example1(0.5), method=method)
    np.testing.assert_allclose(X[0], [1 / 3, 1 / 6], atol=1e-12)
    assert cost == pytest.approx(2.0, abs=1e-9)
    X, q, cost = solve_social_optimum(example1(1.2), method=method)
    np.testing.assert_allclose(X[0], [1 / 3 + 0.2, 2 / 3], atol=1e-12)
    assert np.all(q >= [20, 40])


def _grid_social(inst, step=1e-3):
    """Smallest C_s over split fractions on a grid of spacing ``step`` (n = 2, m <= 3).

    The first two sites are enumerated; for the last one C_s is convex and
    piecewise linear in its fraction, so the grid minimum sits at an
    endpoint or at a grid point adjacent to a kink.
    """
    m = inst.n_sites
    r = inst.rates
    k = inst.travel_times
    T, c = inst.sojourn_T, inst.capacities
    f = np.round(np.arange(0, 1 + step / 2, step), 12)
    heads = [f] * (m - 1)
    mesh = np.meshgrid(*heads, indexing="ij") if heads else []
    F = np.stack([a.ravel() for a in mesh], 1) if heads else np.zeros((1, 0))
    # station-1 load and transport cost of the enumerated sites
    load1 = F @ r[:-1]
    load2 = (1 - F) @ r[:-1]
    trans = F @ (r[:-1] * k[:-1, 0]) + (1 - F) @ (r[:-1] * k[:-1, 1])
    rl = r[-1]
    kinks = np.stack([(c[0] / T - load1) / rl, 1 - (c[1] / T - load2) / rl], 1)
    cand = [np.zeros_like(load1), np.ones_like(load1)]
    for kk in kinks.T:
        kk = np.clip(kk, 0, 1)
        cand += [np.floor(kk / step) * step, np.minimum(np.ceil(kk / step) * step, 1.0)]
    best = np.inf
    for g in cand:
        l1 = load1 + g * rl
        l2 = load2 + (1 - g) * rl
        val = (trans + g * rl * k[-1, 0] + (1 - g) * rl * k[-1, 1]
               + np.maximum(0, T * l1 - c[0]) + np.maximum(0, T * l2 - c[1]))
        best = min(best, val.min())
    return best


@pytest.mark.parametrize("seed", range(8))
def test_grid_search_oracle(seed):
    rng = np.random.default_rng(seed)
    m = [1, 2, 3][seed % 3]
    T = 60.0
    # equal site rates and capacities on the rate grid put the LP vertices on
    # the search grid, so the only slack left is roundoff
    r = rng.uniform(0.2, 1.0)
    unit = 1e-3 * r
    caps = T * unit * rng.integers(int(5 / (T * unit)), int(40 / (T * unit)), 2)
    inst = ProblemInstance(caps, rng.uniform(0, 20, (m, 2)), T, 1.0, InelasticDemand([r] * m))
    _, _, cost = solve_social_optimum(inst)
    grid = _grid_social(inst)
    assert grid >= cost - 1e-9
    assert grid - cost <= 1e-3


@pytest.mark.parametrize("seed", range(10))
def test_lp_oracle_and_certificate(seed):
    rng = np.random.default_rng(50 + seed)
    m, n = rng.integers(1, 12), rng.integers(1, 6)
    inst = ProblemInstance(rng.uniform(2, 40, n), rng.uniform(0, 30, (m, n)), 60.0, 1.0,
                           InelasticDemand(rng.uniform(0.05, 1.0, m)))
    fast = solve_social_optimum(inst)
    slow = solve_social_optimum(inst, method="generic")
    lp = lp_optimum(inst)
    assert fast.cost == pytest.approx(lp, abs=1e-9 * (1 + abs(lp)))
    assert slow.cost == pytest.approx(lp, abs=1e-9 * (1 + abs(lp)))
    assert fast.min_reduced_cost >= -1e-9
    assert slow.min_reduced_cost >= -1e-9
    np.testing.assert_allclose(fast.X.sum(axis=1), inst.rates, atol=1e-12)
    assert np.all(fast.X >= 0)
    assert cost_Cs(fast.X, fast.q, inst) == pytest.approx(fast.cost)


def test_certificate_detects_suboptimal_routing():
    inst = example1(0.5)
    # everything to the nearest station is feasible but not optimal
    assert optimality_certificate(inst, np.array([[0.5, 0.0]])) < -1e-6


def test_flow_network_gadget():
    inst = example1(0.5)
    net = build_flow_network(inst)
    assert net.n_nodes == 1 + 1 + 2 + 1
    assert min(net.cost) >= 0 and net.n_arcs == 1 + 2 + 2 * 2
    with pytest.raises(ValueError):
        FlowNetwork(2).add_arc(0, 1, 1.0, -1.0)


def test_min_cost_flow_small():
    net = FlowNetwork(4)
    net.add_arc(0, 1, 2.0, 1.0)
    net.add_arc(0, 2, 2.0, 2.0)
    net.add_arc(1, 3, 1.0, 1.0)
    net.add_arc(2, 3, 3.0, 0.0)
    net.add_arc(1, 2, 1.0, 0.0)
    flow = min_cost_flow(net, 0, 3, 3.0)
    cost = float(np.dot(flow, net.cost))
    assert cost == pytest.approx(5.0)
    with pytest.raises(ValueError):
        min_cost_flow(net, 0, 3, 10.0)


def test_elastic_rejected():
    with pytest.raises(TypeError, match="wrong demand variant"):
        solve_social_optimum(elastic_toy())


# --- price of anarchy --------------------------------------------------------


@pytest.fixture(scope="module")
def sweep():
    r = np.round(np.arange(0.01, 1.5001, 0.005), 6)
    return r, poa_sweep(example1(0.5), r)


def test_sweep_rows_consistent(sweep):
    _, rows = sweep
    for p in rows:
        assert p.gap >= -1e-6
        assert p.Cs_selfish >= p.C0_selfish - 1e-12
        assert p.Cs_opt <= p.Cs_selfish + 1e-6
        assert p.gap == pytest.approx(p.Cs_selfish - p.Cs_opt)


def test_no_anarchy_at_low_load(sweep):
    r, rows = sweep
    for p in rows:
        if p.r <= 1 / 3:
            assert p.gap <= 2e-3


def test_gap_plateau():
    rows = poa_sweep(example1(0.5), [0.5, 0.9])
    for p in rows:
        assert p.gap == pytest.approx(3.0, abs=0.05)


def test_social_breakpoints(sweep):
    r, rows = sweep
    to2 = np.array([p.inflow_opt[1] for p in rows])
    assert np.all(to2[r <= 1 / 3] <= 1e-12)
    assert np.all(to2[r > 1 / 3 + 1e-9] > 0)
    # station 1 takes all growth again once both are full
    to1 = np.array([p.inflow_opt[0] for p in rows])
    mid = (r > 1 / 3) & (r <= 1)
    np.testing.assert_allclose(to1[mid], 1 / 3, atol=1e-12)
    assert np.all(np.diff(to1[r > 1]) > 0)


def test_selfish_onsets(sweep):
    r, rows = sweep
    to2 = np.array([p.inflow_selfish[1] for p in rows])
    onset = r[np.argmax(to2 > 1e-3)]
    assert abs(onset - R0) <= 0.01
    mu2 = np.array([p.mu_selfish[1] for p in rows])
    onset2 = r[np.argmax(mu2 > 1e-3)]
    assert abs(onset2 - (R0 + 2 / 3)) <= 0.01


def test_gap_closed_form():
    # beyond r0 and before station 2 congests the selfish excess is constant
    gap = (1 - 10) * (R0 - 1 / 3) + (60 * R0 - 20)
    assert gap == pytest.approx(3.0, abs=1e-12)


def test_sweep_deterministic():
    a = poa_sweep(example1(0.5), [0.4, 0.8])
    b = poa_sweep(example1(0.5), [0.4, 0.8])
    assert [p.gap for p in a] == [p.gap for p in b]


def test_sweep_rejects_nonpositive_rate():
    with pytest.raises(ValueError):
        poa_sweep(example1(0.5), [0.0])


def test_selfish_equilibrium_close_to_hard_min():
    sol = solve_equilibrium(example1(0.5))
    x1 = 20 / 51
    np.testing.assert_allclose(sol.X[0], [x1, 0.5 - x1], atol=1e-4)
