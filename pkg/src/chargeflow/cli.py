"""Command-line entry point.

Every subcommand reads a JSON config and writes CSV files into ``--out-dir``.
Failures print one JSON line ``{"error": <kind>, "message": <text>}`` to
stderr and exit nonzero (2 for bad input, 3 for solver failures).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .dynamics import IntegrationError, integrate, lyapunov_series
from .equilibrium import ConvergenceError, SolverConfig, solve_equilibrium
from .simulation import ARRIVAL, SimConfig, simulate, summarize
from .social import SELFISH_EPSILON, poa_sweep, solve_social_optimum
from .spatial import attraction_raster, voronoi_raster


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _solver_config(run):
    return SolverConfig(**run.block("solver"))


def _equilibrium_rows(sol):
    return [
        (j + 1, sol.mu[j], sol.q[j], sol.inflow[j]) for j in range(sol.mu.size)
    ]


def _write_certificate(out, sol):
    write_csv(
        out / "certificate.csv",
        ["dual_value_ev", "duality_gap_ev", "kkt_residual", "iterations_count"],
        [(sol.dual_value, sol.duality_gap, sol.kkt_residual, sol.iterations)],
    )


def cmd_solve_eq(args, run, out):
    inst = run.instance
    if inst.is_elastic:
        raise ConfigError("solve-eq needs inelastic demand; use solve-elastic")
    sol = solve_equilibrium(inst, _solver_config(run))
    write_csv(
        out / "equilibrium.csv",
        ["station", "mu_star_min", "q_star_ev", "inflow_rate_ev_per_min"],
        _equilibrium_rows(sol),
    )
    _write_certificate(out, sol)


def cmd_solve_elastic(args, run, out):
    inst = run.instance
    if not inst.is_elastic:
        raise ConfigError("solve-elastic needs demand.type = elastic_uniform")
    sol = solve_equilibrium(inst, _solver_config(run))
    write_csv(
        out / "equilibrium.csv",
        ["station", "mu_star_min", "q_star_ev", "inflow_rate_ev_per_min"],
        _equilibrium_rows(sol),
    )
    sites = inst.kept_sites
    write_csv(
        out / "elastic_sites.csv",
        ["site", "rbar_ev_per_min", "r_star_ev_per_min", "tau_star_min"],
        [
            (sites[i] + 1, inst.demand.rbar[i], sol.rates[i], sol.tau[i])
            for i in range(inst.n_sites)
        ],
    )
    _write_certificate(out, sol)


def _initial_state(choice, run):
    inst = run.instance
    if choice == "zeros":
        return np.zeros(inst.n_stations)
    if choice == "equilibrium":
        return solve_equilibrium(inst, _solver_config(run)).q
    try:
        q0 = np.loadtxt(choice, delimiter=",", ndmin=1, dtype=float)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read --q0 file {choice}: {exc}") from exc
    if q0.shape != (inst.n_stations,):
        raise ConfigError(f"--q0 file must hold {inst.n_stations} values")
    return q0


def cmd_simulate_fluid(args, run, out):
    inst = run.instance
    ode = run.block("ode")
    T = inst.sojourn_T
    step = args.step or ode.get("step_min", T / 600)
    horizon = args.horizon or ode.get("horizon_min", 40 * T)
    stride = args.stride or ode.get("stride", 1)
    q0 = _initial_state(args.q0, run)
    traj = integrate(q0, horizon, step, inst, stride=stride)
    n = inst.n_stations
    header = (
        ["t_min"]
        + [f"q_{j + 1}_ev" for j in range(n)]
        + [f"mu_{j + 1}_min" for j in range(n)]
        + ["dual_value_ev"]
    )
    rows = [
        [traj.times[k], *traj.states[k], *traj.multipliers[k], traj.dual_values[k]]
        for k in range(len(traj))
    ]
    write_csv(out / "trajectory.csv", header, rows)
    rep = lyapunov_series(traj, inst)
    write_csv(
        out / "monotonicity.csv",
        ["samples_count", "worst_increment_ev", "tolerance_ev", "passed"],
        [(len(traj), rep.worst_increment, rep.tolerance, rep.passed)],
    )


def cmd_social_opt(args, run, out):
    inst = run.instance
    if inst.is_elastic:
        raise ConfigError("social-opt needs inelastic demand")
    opt = solve_social_optimum(inst)
    rows = []
    sites = inst.kept_sites
    for i, j in zip(*np.nonzero(opt.X)):
        rows.append(("x_ev_per_min", sites[i] + 1, j + 1, opt.X[i, j]))
    for j in range(inst.n_stations):
        rows.append(("q_ev", "", j + 1, opt.q[j]))
    rows.append(("Cs_opt_ev", "", "", opt.cost))
    write_csv(out / "social.csv", ["kind", "site", "station", "value"], rows)


def cmd_poa_sweep(args, run, out):
    inst = run.instance
    if inst.is_elastic:
        raise ConfigError("poa-sweep needs inelastic demand")
    if not 0 < args.r_from <= args.r_to or args.r_steps < 1:
        raise ConfigError("need 0 < --r-from <= --r-to and --r-steps >= 1")
    r_values = np.linspace(args.r_from, args.r_to, args.r_steps)
    rows = poa_sweep(inst, r_values, epsilon=args.epsilon, config=_solver_config(run))
    write_csv(
        out / "poa.csv",
        ["r_ev_per_min", "C0_selfish_ev", "Cs_selfish_ev", "Cs_opt_ev", "gap_ev"],
        [(p.r, p.C0_selfish, p.Cs_selfish, p.Cs_opt, p.gap) for p in rows],
    )


def cmd_simulate_stochastic(args, run, out):
    inst = run.instance
    sim = run.block("sim")
    T = inst.sojourn_T
    seed = args.seed if args.seed is not None else sim.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (--seed or sim.seed)")
    cfg = SimConfig(
        seed=int(seed),
        horizon=args.horizon or sim.get("horizon_min", 110 * T),
        warmup=args.warmup if args.warmup is not None else sim.get("warmup_min", 10 * T),
        sample_stride=args.stride or sim.get("stride_min", T / 9),
    )
    log = simulate(inst, cfg)
    n = inst.n_stations
    sites = inst.kept_sites
    write_csv(
        out / "events.csv",
        ["t_min", "kind", "site", "station", "ev_id"],
        [
            (
                log.times[k],
                "arrival" if log.kinds[k] == ARRIVAL else "departure",
                sites[log.sites[k]] + 1 if log.kinds[k] == ARRIVAL else "",
                log.stations[k] + 1,
                log.ev_ids[k],
            )
            for k in range(len(log))
        ],
    )
    write_csv(
        out / "occupancy.csv",
        ["t_min"] + [f"q_{j + 1}_ev" for j in range(n)],
        [[t, *q] for t, q in zip(log.snapshot_times, log.snapshot_q)],
    )
    sol = solve_equilibrium(inst, _solver_config(run)) if args.compare_fluid else None
    sm = summarize(log, inst, sol)
    rel = sm.fluid_relative_error
    write_csv(
        out / "summary.csv",
        ["station", "mean_q_ev", "mu_bar_min", "little_residual", "fluid_relative_error"],
        [
            (j + 1, sm.mean_q[j], sm.mean_mu[j], sm.little_residual, "" if rel is None else rel[j])
            for j in range(n)
        ],
    )


def _raster_rows(run, raster):
    region = run.region
    g = region.grid
    c = (np.arange(g) + 0.5) * region.cell
    for iy in range(g):
        for ix in range(g):
            yield (ix, iy, c[ix], c[iy], raster.labels[iy, ix] + 1)


def cmd_regions(args, run, out):
    inst = run.instance
    if run.region is None:
        raise ConfigError("regions needs a config with a region grid")
    if args.mu == "zero":
        mu = np.zeros(inst.n_stations)
    else:
        mu = solve_equilibrium(inst, _solver_config(run)).mu
    header = ["x_index", "y_index", "x_coord", "y_coord", "station_index"]
    write_csv(out / "voronoi.csv", header, _raster_rows(run, voronoi_raster(inst)))
    write_csv(out / "attraction.csv", header, _raster_rows(run, attraction_raster(inst, mu)))


def build_parser():
    p = argparse.ArgumentParser(prog="chargeflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("config", help="JSON run configuration")
        sp.add_argument("--out-dir", default="./out", type=Path)
        sp.set_defaults(func=func)
        return sp

    add("solve-eq", cmd_solve_eq, "selfish equilibrium under fixed demand")
    add("solve-elastic", cmd_solve_elastic, "selfish equilibrium under elastic demand")
    sp = add("simulate-fluid", cmd_simulate_fluid, "integrate the fluid ODE")
    sp.add_argument("--q0", default="zeros", help="zeros, equilibrium, or a CSV file")
    sp.add_argument("--horizon", type=float, help="minutes")
    sp.add_argument("--step", type=float, help="minutes")
    sp.add_argument("--stride", type=int, help="record every k-th step")
    add("social-opt", cmd_social_opt, "social planner's optimum")
    sp = add("poa-sweep", cmd_poa_sweep, "price of anarchy over a range of total rates")
    sp.add_argument("--r-from", type=float, required=True)
    sp.add_argument("--r-to", type=float, required=True)
    sp.add_argument("--r-steps", type=int, required=True)
    sp.add_argument("--epsilon", type=float, default=SELFISH_EPSILON)
    sp = add("simulate-stochastic", cmd_simulate_stochastic, "discrete-event simulation")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--horizon", type=float, help="minutes")
    sp.add_argument("--warmup", type=float, help="minutes")
    sp.add_argument("--stride", type=float, help="snapshot spacing in minutes")
    sp.add_argument("--compare-fluid", action="store_true",
                    help="also solve the fluid equilibrium and report deviations")
    sp = add("regions", cmd_regions, "Voronoi and attraction rasters")
    sp.add_argument("--mu", choices=["from-equilibrium", "zero"], default="from-equilibrium")
    return p


def _fail(kind, message, code):
    print(json.dumps({"error": kind, "message": str(message).replace("\n", " ")}), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        run = load_config(args.config)
        args.func(args, run, Path(args.out_dir))
    except ConfigError as exc:
        return _fail("config", exc, 2)
    except (ConvergenceError, IntegrationError) as exc:
        return _fail("solver", exc, 3)
    except (ValueError, TypeError) as exc:
        return _fail("input", exc, 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
