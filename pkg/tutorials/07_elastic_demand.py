# %% [markdown]
# # Elastic demand
#
# If drivers give up when the expected delay exceeds their patience, demand
# thins. With patience uniform on ``[0, T]``, a site that would send up to
# ``rbar`` EV/min sends ``rbar (1 - tau/T)``, where ``tau`` is its smoothed delay.
# The equilibrium is again the maximizer of a concave dual, now built from the
# conjugate of the implied utility.

# %%
import numpy as np

from chargeflow import (
    ElasticDemand,
    ProblemInstance,
    UniformPatience,
    solve_equilibrium,
    utility_conjugate,
)

T, c, rbar = 60.0, 50.0, 2.0
inst = ProblemInstance([c], [[0.0]], T, 1e-3, ElasticDemand([rbar], UniformPatience(T)))
sol = solve_equilibrium(inst)
print("mu*  =", sol.mu[0], " closed form:", T - np.sqrt(T * c / rbar))
print("r*   =", sol.rates[0], " = rbar (1 - mu*/T):", rbar * (1 - sol.mu[0] / T))
print("q*   =", sol.q[0])

# %% [markdown]
# The conjugate's slope is the served rate.

# %%
d = inst.demand
for tau in (0.0, 15.0, 30.0, 60.0):
    h = 1e-5
    slope = (utility_conjugate(d, tau + h) - utility_conjugate(d, max(tau - h, 0))) / (
        tau + h - max(tau - h, 0)
    )
    print(f"tau={tau:5.1f}  U*={utility_conjugate(d, tau)[0]:8.3f}  slope={slope[0]:.4f}  rate={d.rate(tau)[0]:.4f}")
