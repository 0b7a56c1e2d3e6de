from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lacebounds.errors import BondBudgetExceeded, ConfigError
from lacebounds.model import (ModelSpec, StepKernel, Vertex, dual_grid, enumerate_bonds,
                              enumerate_configs, format_model_text, parse_model_text, q_value)

from conftest import V


def test_q_value_examples(m0):
    assert q_value(m0, V(0, 0), V(1, 1)) == 0.25
    assert q_value(m0, V(0, 0), V(2, 1)) == 0.0   # offset 2 outside the support
    assert q_value(m0, V(0, 0), V(1, 2)) == 0.0   # not adjacent in time
    assert q_value(m0, V(0, 0), V(3, 1)) == 0.25  # -1 wraps to 3


@pytest.mark.parametrize("W,T,n", [(4, 2, 16), (4, 3, 24), (3, 2, 12)])
def test_bond_counts(W, T, n):
    spec = ModelSpec.nearest_neighbor(1, W, T, 0.5)
    assert spec.n_bonds == n == len(enumerate_bonds(spec))


def test_bond_order_and_roundtrip(m0):
    bonds = enumerate_bonds(m0)
    keys = [(b.under.tau, m0.site_index(b.under.sigma)) for b in bonds]
    assert keys == sorted(keys)
    for b in bonds:
        assert b.index == bonds.index(b)
        assert m0.bond_between(b.under, b.over) == b
        off = tuple((h - t) % m0.W for h, t in zip(b.over.sigma, b.under.sigma))
        assert m0.bond_index(b.under, off) == b.index


def test_configs_sum_to_one():
    spec = ModelSpec.nearest_neighbor(1, 4, 2, 0.5)
    total = math.fsum(c.weight for c in enumerate_configs(spec))
    assert abs(total - 1.0) <= 1e-12
    assert sum(1 for _ in enumerate_configs(spec)) == 65536


def test_configs_p_zero():
    spec = ModelSpec.nearest_neighbor(1, 3, 2, 0.0)
    nonzero = [c for c in enumerate_configs(spec) if c.weight > 0]
    assert len(nonzero) == 1 and nonzero[0].mask == 0 and nonzero[0].weight == 1.0


def test_configs_partition():
    spec = ModelSpec.nearest_neighbor(1, 3, 2, 0.3)
    whole = [c.mask for c in enumerate_configs(spec)]
    parts = [c.mask for a in range(0, 4096, 1000) for c in enumerate_configs(spec, start=a, stop=a + 1000)]
    assert whole == parts


def test_bond_budget():
    with pytest.raises(BondBudgetExceeded):
        next(enumerate_configs(ModelSpec.nearest_neighbor(1, 5, 6, 0.5)))


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 6), st.integers(1, 4), st.floats(0, 1), st.integers(0, 5), st.integers(0, 5),
       st.integers(0, 5))
def test_q_translation_invariant(W, T, p, a, b, s):
    spec = ModelSpec.nearest_neighbor(1, W, T, p)
    v, x = V(a % W, 0), V(b % W, 1)
    vs, xs = V((a + s) % W, 0), V((b + s) % W, 1)
    assert q_value(spec, v, x) == q_value(spec, vs, xs)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2), st.integers(3, 5), st.integers(1, 3))
def test_bond_bijection(d, W, T):
    spec = ModelSpec.nearest_neighbor(d, W, T, 0.5)
    seen = set()
    for b in spec.bonds:
        off = tuple((h - t) % W for h, t in zip(b.over.sigma, b.under.sigma))
        seen.add((b.under, off))
        assert spec.bond_index(b.under, off) == b.index
    assert len(seen) == spec.n_bonds


def test_spread_out_kernel():
    k = StepKernel.spread_out(2, 5, 1)
    assert len(k.offsets) == 8
    assert abs(sum(k.weights) - 1.0) < 1e-15
    assert k.D((0, 0)) == 0.0


@pytest.mark.parametrize("bad", [
    "W = 4\nT = 3\n",                 # missing p
    "W = 2\nT = 3\np = 0.5\n",        # torus too small
    "W = 4\nT = 3\np = 2.5\n",        # p * max D > 1
    "W = 4\nT = 3\np = 0.5\nfoo = 1\n",
    "W = 4\nT = 3\np = 0.5\nkernel = hex\n",
    "W = four\nT = 3\np = 0.5\n",
])
def test_parse_errors(bad):
    with pytest.raises(ConfigError):
        parse_model_text(bad)


def test_parse_roundtrip(m0):
    assert parse_model_text(format_model_text(m0)) == m0
    assert parse_model_text("# M0\nd=1\nW=4\nT=3\nkernel=nn\np=0.5\n") == m0


def test_dual_grid():
    ks = dual_grid(2, 3)
    assert len(ks) == 9
    assert ks[0].one_minus_cos((1, 2)) == 0.0


def test_vertex_index_roundtrip(m0):
    for i in range(m0.n_vertices):
        assert m0.vertex_index(m0.vertex_at(i)) == i
    assert m0.vertex_index(Vertex((0,), 0)) == 0
