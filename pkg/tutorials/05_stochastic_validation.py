# %% [markdown]
# # Does the fluid model describe the real queues?
#
# The discrete-event simulator spawns EVs as a Poisson stream on the 100 x 100
# grid. Each EV picks the station with the least travel-plus-waiting time (a
# hard minimum, computed on the current integer queues) and leaves after an
# exponential sojourn. We compare the long-run mean occupancies with the
# fluid equilibrium.

# %%
import numpy as np

from chargeflow import SimConfig, five_station_layout, simulate, solve_equilibrium, summarize

inst = five_station_layout()
T = inst.sojourn_T
eq = solve_equilibrium(inst)

runs = []
for seed in range(1, 6):
    log = simulate(inst, SimConfig(seed=seed, horizon=110 * T, warmup=10 * T))
    runs.append(summarize(log, inst, eq))
    print(f"seed {seed}: {len(log)} events, mean total {runs[-1].total_mean:.1f}")

# %%
mean_q = np.mean([s.mean_q for s in runs], axis=0)
print("simulated mean q :", mean_q.round(2))
print("fluid q*         :", eq.q.round(2))
print("relative error   :", (np.abs(mean_q - eq.q) / eq.q).round(4))
print("total vs rT=270  :", mean_q.sum().round(2))
print("mean waiting time:", np.mean([s.mean_mu for s in runs], axis=0).round(2),
      "fluid:", eq.mu.round(2))
