# %% [markdown]
# # Fluid dynamics and the Lyapunov dual
#
# Occupancies evolve as ``dq/dt = inflow(mu(q)) - q/T``. Along every
# trajectory the dual function evaluated at ``mu(q(t))`` never decreases, and
# the state settles at the equilibrium. We use the shipped five-station
# layout on a coarse 20 x 20 grid to keep the run short.

# %%
import numpy as np

from chargeflow import five_station_layout, integrate, lyapunov_series, solve_equilibrium

inst = five_station_layout(grid=20)
T = inst.sojourn_T
eq = solve_equilibrium(inst)
print("q* =", eq.q.round(3))

# %%
traj = integrate(np.zeros(inst.n_stations), 40 * T, T / 300, inst, stride=300)
for t, q, d in zip(traj.times[::4], traj.states[::4], traj.dual_values[::4]):
    print(f"t={t:7.1f}  q={np.array2string(q, precision=2)}  D={d:.6f}")

# %%
rep = lyapunov_series(traj, inst)
print("distance to q* at 40T :", np.max(np.abs(traj.final - eq.q)))
print("worst dual increment  :", rep.worst_increment, "tolerance", rep.tolerance)
print("monotone              :", rep.passed)
