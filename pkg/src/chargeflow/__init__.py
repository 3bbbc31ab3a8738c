"""Selfish EV charging-station selection as a fluid queueing system.

The package covers the closed-form model pieces, the dual equilibrium
solver, the fluid ODE, the social planner's min-cost-flow optimum, a
discrete-event stochastic simulator and spatial instance builders.
"""

from .core import (
    ProblemInstance,
    barrier,
    cost_C0,
    cost_Cs,
    departure_rate,
    negative_entropy,
    occupancy_for_delay,
    primal_cost,
    routing_fractions,
    softmin,
    softmin_fractions,
    waiting_time,
)
from .demand import (
    ElasticDemand,
    InelasticDemand,
    PatienceDistribution,
    UniformPatience,
    elastic_rate,
    utility,
    utility_conjugate,
)
from .equilibrium import (
    ConvergenceError,
    EquilibriumSolution,
    SolverConfig,
    dual_gradient,
    dual_value,
    duality_gap,
    elastic_dual_gradient,
    elastic_dual_value,
    kkt_residual,
    recover_primal,
    solve_equilibrium,
)
from .dynamics import Trajectory, field, integrate, lyapunov_series
from .social import PoaRow, poa_sweep, solve_social_optimum
from .simulation import EventLog, SimConfig, simulate, summarize
from .spatial import (
    Raster,
    Region,
    attraction_raster,
    build_grid_instance,
    five_station_layout,
    voronoi_raster,
)

__version__ = "0.1.0"
