"""Square-region instances on a uniform grid, and station-assignment rasters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ProblemInstance
from .demand import InelasticDemand


@dataclass(frozen=True)
class Region:
    side: float
    grid: int
    crossing_time: float

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("side must be positive")
        if int(self.grid) < 1:
            raise ValueError("grid must be at least 1")
        if not self.crossing_time > 0:
            raise ValueError("crossing_time must be positive")

    @property
    def speed(self):
        return self.side / self.crossing_time

    @property
    def cell(self):
        return self.side / self.grid

    def cell_centers(self):
        """Cell centers in row-major order (y index outer, x index inner)."""
        c = (np.arange(self.grid) + 0.5) * self.cell
        yy, xx = np.meshgrid(c, c, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])


def travel_times(site_xy, station_xy, speed):
    d = np.linalg.norm(site_xy[:, None, :] - station_xy[None, :, :], axis=2)
    return d / speed


def build_grid_instance(region: Region, station_positions, capacities, total_rate, T, eps,
                        demand=None) -> ProblemInstance:
    """Uniform demand on a ``g x g`` grid with Euclidean travel times.

    ``demand`` may replace the default inelastic model (it must have one
    entry per grid cell); ``total_rate`` is then ignored.
    """
    st = np.atleast_2d(np.asarray(station_positions, dtype=float))
    if np.any(st < 0) or np.any(st > region.side):
        raise ValueError("station outside the region")
    if demand is None:
        if not total_rate > 0:
            raise ValueError("total_rate must be positive")
        demand = InelasticDemand(np.full(region.grid**2, total_rate / region.grid**2))
    sites = region.cell_centers()
    return ProblemInstance(
        capacities=capacities,
        travel_times=travel_times(sites, st, region.speed),
        sojourn_T=T,
        epsilon=eps,
        demand=demand,
        site_xy=sites,
        station_xy=st,
        grid_shape=(region.grid, region.grid),
    )


# A fixed layout in the unit square for reproducible runs: station 1 is the
# easternmost and most congested, station 5 (southwest) stays below capacity,
# and the northeast corner is about 30 min from its closest station.
FIVE_STATIONS = np.array(
    [
        [0.62, 0.52],
        [0.24, 0.54],
        [0.46, 0.29],
        [0.42, 0.46],
        [0.13, 0.13],
    ]
)


def five_station_layout(grid=100, total_rate=3.0, T=90.0, eps=0.5, capacity=50.0):
    """Five stations of 50 slots, 3 EV/min, 90 min sojourn, 50 min crossing time."""
    region = Region(side=1.0, grid=grid, crossing_time=50.0)
    caps = np.full(len(FIVE_STATIONS), capacity)
    return build_grid_instance(region, FIVE_STATIONS, caps, total_rate, T, eps)


@dataclass
class Raster:
    """Station index per grid cell, ``labels[y_index, x_index]``."""

    labels: np.ndarray
    mu: np.ndarray

    def __eq__(self, other):
        return np.array_equal(self.labels, other.labels)


def _require_grid(inst):
    if inst.grid_shape is None or inst.n_sites != inst.grid_shape[0] * inst.grid_shape[1]:
        raise ValueError("instance is not a full grid instance")


def attraction_raster(inst: ProblemInstance, mu) -> Raster:
    """Each cell goes to ``argmin_j kappa_ij + mu_j`` (lowest index on ties)."""
    _require_grid(inst)
    mu = np.asarray(mu, dtype=float)
    labels = np.argmin(inst.travel_times + mu, axis=1).reshape(inst.grid_shape)
    return Raster(labels, mu.copy())


def voronoi_raster(inst: ProblemInstance) -> Raster:
    return attraction_raster(inst, np.zeros(inst.n_stations))
