"""Closed-loop fluid dynamics of station occupancy.

    dq_j/dt = sum_i x_ij(mu(q)) - q_j / T,   mu_j(q) = T [1 - c_j/q_j]^+

with softmin routing ``x_ij = r_i delta_ij(mu)``; for elastic demand the site
rates are thinned by the patience survivor function at the smoothed delay.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ProblemInstance, site_softmin, waiting_time
from .equilibrium import dual_value, elastic_dual_value


class IntegrationError(RuntimeError):
    pass


CLAMP_BUDGET = 1e-12


def inflow(q, inst: ProblemInstance):
    """Aggregate arrival rate per station at occupancy ``q``."""
    mu = waiting_time(q, inst.capacities, inst.sojourn_T)
    tau, delta = site_softmin(inst, mu)
    r = inst.demand.rate(tau) if inst.is_elastic else inst.demand.rates
    return delta @ r


def field(q, inst: ProblemInstance):
    """Right-hand side of the occupancy ODE."""
    q = np.asarray(q, dtype=float)
    return inflow(q, inst) - q / inst.sojourn_T


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    multipliers: np.ndarray
    dual_values: np.ndarray
    rates: np.ndarray
    step: float

    def __len__(self):
        return self.times.size

    @property
    def final(self):
        return self.states[-1]


def _applicable_dual(mu, inst):
    if inst.is_elastic:
        return elastic_dual_value(mu, inst)
    return dual_value(mu, inst)


def _clamp(q, t):
    if not np.all(np.isfinite(q)):
        raise IntegrationError(f"non-finite state at t={t:.6g} min: {q}")
    low = q.min()
    if low < 0:
        if low < -CLAMP_BUDGET:
            raise IntegrationError(
                f"state went negative ({low:.3e}) at t={t:.6g} min beyond the clamp budget"
            )
        q = np.maximum(q, 0.0)
    return q


def integrate(q0, horizon, step, inst: ProblemInstance, stride: int = 1) -> Trajectory:
    """Classical fixed-step RK4 from ``q0`` over ``[0, horizon]`` minutes.

    Parameters
    ----------
    q0 : array-like, shape (n,)
        Initial occupancies, nonnegative.
    horizon, step : float
        Integration horizon and step in minutes; the last step is shortened
        if ``step`` does not divide ``horizon``.
    inst : ProblemInstance
    stride : int
        Record every ``stride``-th step (the final state is always recorded).

    Returns
    -------
    Trajectory
        Sampled states, their delays ``mu(q)``, dual values and station
        inflow rates.
    """
    q = np.array(q0, dtype=float)
    if q.shape != (inst.n_stations,):
        raise ValueError(f"q0 has shape {q.shape}, expected ({inst.n_stations},)")
    if np.any(q < 0):
        raise ValueError("initial occupancies must be nonnegative")
    if not step > 0:
        raise ValueError("step must be positive")
    if horizon < step:
        raise ValueError("horizon must be at least one step")
    if stride < 1:
        raise ValueError("stride must be a positive integer")

    n_steps = int(np.ceil(horizon / step - 1e-9))
    times = [0.0]
    states = [q.copy()]
    t = 0.0
    for k in range(1, n_steps + 1):
        h = min(step, horizon - t) if k == n_steps else step
        k1 = field(q, inst)
        k2 = field(q + 0.5 * h * k1, inst)
        k3 = field(q + 0.5 * h * k2, inst)
        k4 = field(q + h * k3, inst)
        q = _clamp(q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t + h)
        t = k * step if k < n_steps else float(horizon)
        if k % stride == 0 or k == n_steps:
            times.append(t)
            states.append(q.copy())

    states = np.array(states)
    mus = waiting_time(states, inst.capacities, inst.sojourn_T)
    duals = np.array([_applicable_dual(m, inst) for m in mus])
    rates = np.array([inflow(s, inst) for s in states])
    return Trajectory(np.array(times), states, mus, duals, rates, float(step))


@dataclass
class MonotonicityReport:
    values: np.ndarray
    worst_increment: float
    tolerance: float
    passed: bool


def lyapunov_series(traj: Trajectory, inst: ProblemInstance) -> MonotonicityReport:
    """Check that the dual value is nondecreasing along ``traj``.

    The allowed dip per sample is ``1e-7 (1 + |D|) step / T``.
    """
    values = np.array([_applicable_dual(m, inst) for m in traj.multipliers])
    inc = np.diff(values)
    worst = float(inc.min()) if inc.size else 0.0
    tol = 1e-7 * (1.0 + float(np.max(np.abs(values)))) * traj.step / inst.sojourn_T
    return MonotonicityReport(values, worst, tol, bool(worst >= -tol))
