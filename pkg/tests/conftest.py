import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chargeflow import (
    ElasticDemand,
    InelasticDemand,
    ProblemInstance,
    UniformPatience,
    five_station_layout,
    solve_equilibrium,
)

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def example1(r=0.5, eps=1e-3):
    """Two stations (20, 40 slots) at 1 and 10 min from one site, T = 60."""
    return ProblemInstance(
        capacities=[20.0, 40.0],
        travel_times=[[1.0, 10.0]],
        sojourn_T=60.0,
        epsilon=eps,
        demand=InelasticDemand([r]),
    )


def single_station(r=1.0, c=50.0, T=60.0, kappa=0.0, eps=1e-3):
    return ProblemInstance([c], [[kappa]], T, eps, InelasticDemand([r]))


def elastic_toy(rbar=2.0, c=50.0, T=60.0, eps=1e-3):
    return ProblemInstance([c], [[0.0]], T, eps, ElasticDemand([rbar], UniformPatience(T)))


def random_instance(rng, m, n, elastic=False, T=60.0, eps=None):
    caps = rng.uniform(5.0, 40.0, n)
    kappa = rng.uniform(0.0, 20.0, (m, n))
    eps = rng.uniform(0.2, 2.0) if eps is None else eps
    r = rng.uniform(0.1, 1.0, m)
    if elastic:
        return ProblemInstance(caps, kappa, T, eps, ElasticDemand(r * 2, UniformPatience(T)))
    return ProblemInstance(caps, kappa, T, eps, InelasticDemand(r))


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture(scope="session")
def five():
    return five_station_layout()


@pytest.fixture(scope="session")
def five_eq(five):
    return solve_equilibrium(five)
