# %% [markdown]
# # Building blocks: softmin routing and the queue model
#
# Drivers pick a station by comparing travel time plus waiting time. A hard
# minimum makes the routing discontinuous, so the model smooths it with a
# softmin of width ``eps`` minutes. The fractions of drivers heading to each
# station are the gradient of the softmin, a softmax over ``-y/eps``.

# %%
import numpy as np

from chargeflow import (
    barrier,
    negative_entropy,
    softmin,
    softmin_fractions,
    waiting_time,
)

y = np.array([1.0, 2.0, 10.0])  # total delay to three stations, minutes
for eps in (5.0, 1.0, 0.1, 1e-3):
    print(f"eps={eps:<6} softmin={softmin(y, eps):9.5f} fractions={softmin_fractions(y, eps).round(4)}")

# %% [markdown]
# The softmin never exceeds the true minimum and undershoots it by at most
# ``eps log n``. It is also the value of an entropy-regularized choice:
# minimizing ``<y, d> + eps * sum d log d`` over the simplex gives exactly the
# softmin fractions.

# %%
eps = 1.0
d = softmin_fractions(y, eps)
print("min(y) - eps log n :", y.min() - eps * np.log(y.size))
print("softmin             :", softmin(y, eps))
print("<y,d> + eps H(d)    :", y @ d + eps * negative_entropy(d))

# %% [markdown]
# ## Waiting time and the barrier
#
# A station with ``c`` slots and occupancy ``q`` makes a newcomer wait
# ``T (1 - c/q)`` minutes once it is over capacity. The barrier is the
# integral of that delay divided by ``T``: zero up to capacity, then convex.

# %%
T, c = 60.0, 50.0
q = np.array([0.0, 25.0, 50.0, 75.0, 100.0, 200.0])
print(np.column_stack([q, waiting_time(q, c, T), barrier(q, c)]).round(4))
