"""Equilibrium of the selfish routing dynamics through its concave dual.

The equilibrium delays ``mu*`` maximize

    D(mu) = sum_i r_i softmin(kappa_i + mu, eps) + sum_j c_j log(1 - mu_j / T)

over the box ``[0, T)^n`` (fixed demand), or the elastic analogue in which
``r_i softmin(.)`` is replaced by the utility conjugate ``U_i*(softmin(.))``.
Both are strictly concave, so projected ascent converges to the unique
maximizer; the primal routing and queues are recovered in closed form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    ProblemInstance,
    primal_cost,
    site_softmin,
    softmin,
    softmin_fractions,
    waiting_time,
)

logger = logging.getLogger(__name__)

GUARD = 1e-12


class ConvergenceError(RuntimeError):
    """Raised when the solver exhausts its budget; carries the last iterate."""

    def __init__(self, message, mu, residual, iterations):
        super().__init__(message)
        self.mu = mu
        self.residual = residual
        self.iterations = iterations


@dataclass
class SolverConfig:
    grad_tol: float = 1e-9
    max_iters: int = 100_000
    initial_mu: Optional[np.ndarray] = None
    backtrack: float = 0.5
    sufficient_increase: float = 1e-4
    # "newton": projected Newton on the free coordinates; "gradient": plain
    # projected gradient ascent. Both stop on the same projected-gradient test.
    method: str = "newton"

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.method not in ("newton", "gradient"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class EquilibriumSolution:
    mu: np.ndarray
    X: np.ndarray
    q: np.ndarray
    rates: np.ndarray
    dual_value: float
    duality_gap: float
    kkt_residual: float
    iterations: int
    projected_gradient: float
    dual_history: list = field(default_factory=list, repr=False)
    tau: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def inflow(self):
        return self.X.sum(axis=0)


# ---------------------------------------------------------------------------
# dual functions
# ---------------------------------------------------------------------------


def _check_domain(mu, inst):
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (inst.n_stations,):
        raise ValueError(f"mu has shape {mu.shape}, expected ({inst.n_stations},)")
    if np.any(mu < 0) or np.any(mu >= inst.sojourn_T) or np.any(~np.isfinite(mu)):
        raise ValueError("mu outside the dual domain [0, T)")
    return mu


def _capacity_term(mu, inst):
    return float(np.sum(inst.capacities * np.log1p(-mu / inst.sojourn_T)))


def _capacity_grad(mu, inst):
    return -inst.capacities / (inst.sojourn_T - mu)


def _capacity_hess_diag(mu, inst):
    return -inst.capacities / (inst.sojourn_T - mu) ** 2


def _site_rates(inst, rates):
    if rates is not None:
        return np.asarray(rates, dtype=float)
    if inst.is_elastic:
        raise TypeError("wrong demand variant: use the elastic dual for elastic demand")
    return inst.demand.rates


def dual_value(mu, inst: ProblemInstance, rates=None) -> float:
    """Dual function for fixed rates (``rates`` overrides the instance's)."""
    mu = _check_domain(mu, inst)
    r = _site_rates(inst, rates)
    phi = softmin(inst.travel_times + mu, inst.epsilon, axis=1)
    return float(np.dot(r, phi)) + _capacity_term(mu, inst)


def dual_gradient(mu, inst: ProblemInstance, rates=None) -> np.ndarray:
    """Station inflow at ``mu`` minus the capacity term ``c / (T - mu)``."""
    mu = _check_domain(mu, inst)
    r = _site_rates(inst, rates)
    delta = softmin_fractions(inst.travel_times + mu, inst.epsilon, axis=1)
    return r @ delta + _capacity_grad(mu, inst)


def _require_elastic(inst):
    if not inst.is_elastic:
        raise TypeError("wrong demand variant: elastic demand required")


def elastic_dual_value(mu, inst: ProblemInstance) -> float:
    _require_elastic(inst)
    mu = _check_domain(mu, inst)
    tau = softmin(inst.travel_times + mu, inst.epsilon, axis=1)
    return float(np.sum(inst.demand.conjugate(tau))) + _capacity_term(mu, inst)


def elastic_dual_gradient(mu, inst: ProblemInstance) -> np.ndarray:
    _require_elastic(inst)
    mu = _check_domain(mu, inst)
    y = inst.travel_times + mu
    tau = softmin(y, inst.epsilon, axis=1)
    delta = softmin_fractions(y, inst.epsilon, axis=1)
    return inst.demand.rate(tau) @ delta + _capacity_grad(mu, inst)


class _Dual:
    """Value, gradient and Hessian of whichever dual applies to ``inst``."""

    def __init__(self, inst):
        self.inst = inst
        self.elastic = inst.is_elastic

    def parts(self, mu):
        # delta is station-major, shape (n, m)
        inst = self.inst
        tau, delta = site_softmin(inst, mu)
        if self.elastic:
            r = inst.demand.rate(tau)
            head = float(np.sum(inst.demand.conjugate(tau)))
        else:
            r = inst.demand.rates
            head = float(np.dot(r, tau))
        return tau, delta, r, head

    def value(self, mu):
        return self.parts(mu)[3] + _capacity_term(mu, self.inst)

    def value_grad(self, mu):
        tau, delta, r, head = self.parts(mu)
        val = head + _capacity_term(mu, self.inst)
        grad = delta @ r + _capacity_grad(mu, self.inst)
        return val, grad

    def hessian(self, mu):
        inst = self.inst
        tau, delta, r, _ = self.parts(mu)
        # softmin curvature: -(1/eps) sum_i r_i (diag(delta_i) - delta_i delta_i^T)
        inflow = delta @ r
        outer = (delta * r) @ delta.T
        H = -(np.diag(inflow) - outer) / inst.epsilon
        if self.elastic:
            slope = inst.demand.rate_slope(tau)
            H += (delta * slope) @ delta.T
        H[np.diag_indices_from(H)] += _capacity_hess_diag(mu, inst)
        return H


def _projected_gradient(mu, g, upper):
    pg = g.copy()
    low = mu <= 0
    pg[low] = np.maximum(g[low], 0.0)
    high = mu >= upper
    pg[high] = np.minimum(g[high], 0.0)
    return pg


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


def solve_equilibrium(inst: ProblemInstance, config: Optional[SolverConfig] = None):
    """Maximize the applicable dual over ``[0, T(1 - 1e-12)]^n``.

    Parameters
    ----------
    inst : ProblemInstance
    config : SolverConfig, optional

    Returns
    -------
    EquilibriumSolution
        Multipliers, recovered primal point and optimality certificates.

    Raises
    ------
    ConvergenceError
        If the projected-gradient test is not met within ``max_iters``.

    Notes
    -----
    Every accepted step satisfies an Armijo sufficient-increase test along
    the projection arc, so the recorded dual values are nondecreasing (up to
    a few ulps once the increase drops below floating-point resolution).
    Iterates depend only on the instance and the configuration.
    """
    cfg = config or SolverConfig()
    T = inst.sojourn_T
    upper = T * (1.0 - GUARD)
    dual = _Dual(inst)

    mu = np.zeros(inst.n_stations) if cfg.initial_mu is None else np.array(cfg.initial_mu, float)
    mu = np.clip(mu, 0.0, upper)
    f, g = dual.value_grad(mu)
    history = [f]
    alpha_grad = 1.0
    it = 0

    while True:
        pg = _projected_gradient(mu, g, upper)
        res = float(np.max(np.abs(pg)))
        if res <= cfg.grad_tol:
            break
        if it >= cfg.max_iters:
            raise ConvergenceError(
                f"equilibrium solver did not converge in {cfg.max_iters} iterations "
                f"(projected gradient {res:.3e})",
                mu.copy(), res, it,
            )
        it += 1

        step = None
        if cfg.method == "newton":
            step = _newton_step(dual, mu, f, g, pg, res, upper, cfg)
        if step is None:
            step = _gradient_step(dual, mu, f, g, pg, res, upper, cfg, alpha_grad)
            if step is not None:
                alpha_grad = step[3]
        if step is None:
            raise ConvergenceError(
                f"line search stalled at projected gradient {res:.3e}", mu.copy(), res, it
            )
        mu, f, g = step[:3]
        history.append(f)

    logger.debug("equilibrium solved in %d iterations, residual %.2e", it, res)
    X, q, r = recover_primal(mu, inst)
    sol = EquilibriumSolution(
        mu=mu, X=X, q=q, rates=r, dual_value=f, duality_gap=np.nan,
        kkt_residual=np.nan, iterations=it, projected_gradient=res,
        dual_history=history,
    )
    sol.tau = softmin(inst.travel_times + mu, inst.epsilon, axis=1)
    sol.duality_gap = duality_gap(sol, inst)
    sol.kkt_residual = kkt_residual(sol, inst)
    return sol


def _accept(dual, mu, f, g, pg_norm, trial, upper, sigma):
    """Armijo test along the projection arc, with a roundoff fallback."""
    f_new, g_new = dual.value_grad(trial)
    if not np.isfinite(f_new):
        return None
    gain = f_new - f
    if gain >= sigma * float(np.dot(g, trial - mu)) and gain >= 0:
        return trial, f_new, g_new
    # increases below floating-point resolution: accept when D does not drop
    # beyond roundoff and the optimality residual shrinks
    slack = 8 * np.finfo(float).eps * (1.0 + abs(f))
    if gain >= -slack:
        pg_new = float(np.max(np.abs(_projected_gradient(trial, g_new, upper))))
        if pg_new < pg_norm:
            return trial, max(f_new, f), g_new
    return None


def _newton_step(dual, mu, f, g, pg, res, upper, cfg):
    n = mu.size
    # coordinates held at the lower bound: near it and pushed outward
    w = float(np.max(np.abs(mu - np.clip(mu + g, 0.0, upper))))
    act_tol = min(1e-8 * dual.inst.sojourn_T, w)
    active = (mu <= act_tol) & (g < 0)
    free = ~active
    d = np.where(active, g, 0.0)
    if np.any(free):
        H = dual.hessian(mu)
        idx = np.flatnonzero(free)
        A = -H[np.ix_(idx, idx)]
        try:
            d[idx] = np.linalg.solve(A, g[idx])
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(d)) or np.dot(d[idx], g[idx]) <= 0:
            return None
    alpha = 1.0
    for _ in range(80):
        trial = np.clip(mu + alpha * d, 0.0, upper)
        if n and np.array_equal(trial, mu):
            return None
        out = _accept(dual, mu, f, g, res, trial, upper, cfg.sufficient_increase)
        if out is not None:
            return out
        alpha *= cfg.backtrack
    return None


def _gradient_step(dual, mu, f, g, pg, res, upper, cfg, alpha0):
    alpha = min(2.0 * alpha0, 1e6)
    for _ in range(200):
        trial = np.clip(mu + alpha * g, 0.0, upper)
        if np.array_equal(trial, mu):
            return None
        out = _accept(dual, mu, f, g, res, trial, upper, cfg.sufficient_increase)
        if out is not None:
            return out + (alpha,)
        alpha *= cfg.backtrack
    return None


# ---------------------------------------------------------------------------
# primal recovery and certificates
# ---------------------------------------------------------------------------


def recover_primal(mu, inst: ProblemInstance):
    """Routing ``X``, queues ``q`` and effective rates ``r`` implied by ``mu``."""
    mu = _check_domain(mu, inst)
    y = inst.travel_times + mu
    delta = softmin_fractions(y, inst.epsilon, axis=1)
    if inst.is_elastic:
        r = inst.demand.rate(softmin(y, inst.epsilon, axis=1))
    else:
        r = inst.demand.rates.copy()
    X = r[:, None] * delta
    q = inst.sojourn_T * X.sum(axis=0)
    return X, q, r


def _applicable_gradient(mu, inst):
    if inst.is_elastic:
        return elastic_dual_gradient(mu, inst)
    return dual_gradient(mu, inst)


def kkt_residual(sol: EquilibriumSolution, inst: ProblemInstance) -> float:
    """Largest violation of flow balance, delay consistency and complementarity."""
    T = inst.sojourn_T
    balance = np.abs(T * sol.X.sum(axis=0) - sol.q)
    consistency = np.abs(sol.mu - waiting_time(sol.q, inst.capacities, T))
    slack = np.maximum(0.0, -_applicable_gradient(sol.mu, inst)) * sol.mu
    return float(np.max(np.concatenate([balance, consistency, slack])))


def duality_gap(sol: EquilibriumSolution, inst: ProblemInstance) -> float:
    """Primal objective minus dual value at the recovered point."""
    if inst.is_elastic:
        primal = primal_cost(sol.X, sol.q, inst, rates=sol.rates)
        primal -= float(np.sum(inst.demand.utility(sol.rates)))
        return primal - elastic_dual_value(sol.mu, inst)
    return primal_cost(sol.X, sol.q, inst) - dual_value(sol.mu, inst)
