# %% [markdown]
# # Voronoi cells and attraction regions
#
# Without waiting times, each point of the map goes to its nearest station
# (its Voronoi cell). At equilibrium, congested stations add their waiting
# time, so their regions shrink. The boundaries become arcs of hyperbolas:
# curves where the difference of distances to two stations is constant.

# %%
import numpy as np

from chargeflow import attraction_raster, five_station_layout, solve_equilibrium, voronoi_raster

inst = five_station_layout(grid=40)
eq = solve_equilibrium(inst)
vor = voronoi_raster(inst)
att = attraction_raster(inst, eq.mu)

print("waiting times:", eq.mu.round(2))
print("cells per station, Voronoi   :", np.bincount(vor.labels.ravel(), minlength=5))
print("cells per station, attraction:", np.bincount(att.labels.ravel(), minlength=5))

# %% [markdown]
# A character map of both rasters (north at the top).

# %%
for name, lab in (("Voronoi", vor.labels), ("attraction", att.labels)):
    print(name)
    for row in lab[::-2, ::1]:
        print("".join("12345"[k] for k in row))
