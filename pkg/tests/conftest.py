from __future__ import annotations

import os

import pytest

from lacebounds.model import BondConfig, ModelSpec, Vertex
from lacebounds.oracle import two_point_transfer

# keep the suite honest about runtime: no disk cache unless asked for explicitly
os.environ.pop("LACEBOUNDS_CACHE", None)


@pytest.fixture(scope="session")
def m0() -> ModelSpec:
    return ModelSpec.nearest_neighbor(1, 4, 3, 0.5)


@pytest.fixture(scope="session")
def m0_phi(m0):
    return two_point_transfer(m0)


def V(sigma: int, tau: int) -> Vertex:
    return Vertex((sigma,), tau)


def config_from(spec: ModelSpec, pairs) -> BondConfig:
    """Configuration with exactly the bonds ``(tail, head)`` occupied (d = 1, ints as (sigma, tau))."""
    mask = 0
    for (s0, t0), (s1, t1) in pairs:
        mask |= 1 << spec.bond_between(V(s0, t0), V(s1, t1)).index
    return BondConfig(mask, 1.0, spec.n_bonds)
