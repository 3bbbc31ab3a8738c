# %% [markdown]
# # Price of anarchy
#
# A planner who controls every EV minimizes travel time plus the number of EVs
# waiting for a slot. That is a linear program, solved here as a min-cost flow.
# Selfish drivers instead minimize their own delay, and they overuse the close
# station. We sweep the total demand on the two-station example.

# %%
import numpy as np

from chargeflow import InelasticDemand, ProblemInstance, poa_sweep, solve_social_optimum

template = ProblemInstance([20.0, 40.0], [[1.0, 10.0]], 60.0, 1e-3, InelasticDemand([1.0]))

X, q, cost = solve_social_optimum(template.scaled(0.5))
print("planner at r=0.5: x =", X[0].round(4), " C_s =", round(cost, 6))

# %%
rates = np.round(np.arange(0.1, 1.51, 0.1), 2)
print(f"{'r':>5} {'Cs selfish':>11} {'Cs optimal':>11} {'gap':>8}")
for row in poa_sweep(template, rates):
    print(f"{row.r:5.2f} {row.Cs_selfish:11.4f} {row.Cs_opt:11.4f} {row.gap:8.4f}")

# %% [markdown]
# * Below ``r = 1/3`` both policies use station 1 only, and there is no gap.
# * Between ``r0 = 20/51`` and ``r0 + 2/3`` the gap is flat at 3 EVs.
# * Once both stations are full, the gap grows with load.
