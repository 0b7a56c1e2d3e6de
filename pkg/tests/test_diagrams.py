from __future__ import annotations

import numpy as np
import pytest

from lacebounds import diagrams as dg
from lacebounds.model import ModelSpec, WaveVector, dual_grid
from lacebounds.oracle import two_point_transfer


def _diag(T=0.1, Tt=0.2, S=0.4, H=0.05, W=None, m=1.0):
    return dg.DiagramSet(m, T, Tt, S, H, W or {(0,): 0.0, (1,): 0.05})


def test_bound_arithmetic():
    d = _diag()
    assert abs(dg.lemma2_pi_bound(0, 0, d) - 0.12) < 1e-15
    assert abs(dg.lemma2_pi_bound(2, 2, d) - 0.864) < 1e-15
    assert dg.lemma2_pi_bound(0, 1, d, sharp=True) == 0.1
    assert dg.lemma2_pi_bound(0, 2, d, sharp=True) == 0.4
    k1, k0 = WaveVector((1,), 4), WaveVector((0,), 4)
    assert abs(dg.lemma2_cos_bound(1, d, k1) - 0.72) < 1e-15
    assert dg.lemma2_cos_bound(0, d, k1, sharp=True) == 0.05
    assert dg.lemma2_cos_bound(2, d, k0) == 0.0
    assert abs(dg.lemma2_Pi_bound(1, d) - 0.42) < 1e-15
    assert abs(dg.lemma2_Pi_bound(2, d) - 0.264) < 1e-15


def test_bound_argument_errors():
    d = _diag()
    with pytest.raises(ValueError):
        dg.lemma2_pi_bound(0, 3, d)
    with pytest.raises(ValueError):
        dg.lemma2_pi_bound(1, 0, d, sharp=True)
    with pytest.raises(ValueError):
        dg.lemma2_Pi_bound(0, d)
    with pytest.raises(ValueError):
        dg.lemma2_Pi_bound(1, _diag(m=0.8))


def test_p_zero_all_zero():
    spec = ModelSpec.nearest_neighbor(1, 4, 3, 0.0)
    phi = two_point_transfer(spec)
    for m in (0.8, 1.0, 1.25):
        d = dg.compute_diagrams(spec, phi, m)
        assert (d.T, d.T_tilde, d.S, d.H) == (0.0, 0.0, 0.0, 0.0)
        assert not any(d.W.values())


def test_m0_values(m0, m0_phi):
    d = dg.compute_diagrams(m0, m0_phi, 1.0)
    assert d.T > 0 and d.S >= d.T * 0 and d.H >= 0
    assert d.W[(0,)] == 0.0
    assert d.T_tilde == 0.09375
    assert d.H == 0.013671875


def test_triangle_by_direct_sum(m0, m0_phi):
    # sup over x of sum_v (q*phi*phi)(v) (q*phi)(v - x) by explicit loops
    L = dg.Lines(m0, m0_phi)
    a, b = L.qphiphi, L.qphi
    best = 0.0
    for tx in range(-m0.T, m0.T + 1):
        for sx in range(m0.W):
            s = sum(a((sv,), tv) * b((sv - sx,), tv - tx) for tv in range(m0.T + 1) for sv in range(m0.W))
            best = max(best, s)
    assert abs(best - dg.triangle(m0, m0_phi)) <= 1e-15


def test_h_by_direct_sum():
    # small instance so the seven-fold vertex sum is affordable
    spec = ModelSpec.nearest_neighbor(1, 3, 3, 0.6)
    phi = two_point_transfer(spec)
    L = dg.Lines(spec, phi)
    a, b = L.qphi, L.phiqphi
    table, taus = dg.h_table(spec, phi, L)
    verts = [((s,), t) for t in range(spec.T + 1) for s in range(spec.W)]
    rng = np.random.default_rng(0)
    for _ in range(6):
        it, iy = rng.integers(len(taus), size=2)
        sx, sy = rng.integers(spec.W, size=2)
        x, y = ((sx,), taus[it]), ((sy,), taus[iy])

        def diff(p, q):
            return ((p[0][0] - q[0][0],), p[1] - q[1])

        tot = 0.0
        for u in verts:
            au = a(*u)
            if not au:
                continue
            for v in verts:
                buv = b(*diff(v, u))
                if not buv:
                    continue
                axv = a(*diff(v, x))
                for w in verts:
                    yw = ((y[0][0] + w[0][0],), y[1] + w[1])
                    tot += au * buv * axv * a(*diff(w, u)) * a(*diff(yw, v))
        assert abs(tot - table[it, sx, iy, sy]) <= 1e-14


def test_lattice_only_h_vanishes_for_short_times():
    for T in (1, 2):
        spec = ModelSpec.nearest_neighbor(1, 4, T, 0.7)
        assert dg.h_diagram(spec, two_point_transfer(spec), lattice_only=True) == 0.0
    spec = ModelSpec.nearest_neighbor(1, 4, 3, 0.7)
    phi = two_point_transfer(spec)
    assert 0 < dg.h_diagram(spec, phi, lattice_only=True) <= dg.h_diagram(spec, phi)


def test_branch_consistency_at_m1(m0, m0_phi):
    L = dg.Lines(m0, m0_phi)
    for k in dual_grid(1, 4):
        a = dg.bubble_w(m0, m0_phi, 1.0, k, L, branch="lt1")
        b = dg.bubble_w(m0, m0_phi, 1.0, k, L, branch="ge1")
        assert abs(a - b) <= 1e-12
    with pytest.raises(ValueError):
        dg.bubble_w(m0, m0_phi, 1.0, k, L, branch="x")


def test_bubble_sanity_cap(m0, m0_phi):
    L = dg.Lines(m0, m0_phi)
    cap = 2 * dg.sup_correlation(L.qphi.scaled(2.0), L.qphi)
    for k in dual_grid(1, 4):
        assert dg.bubble_w(m0, m0_phi, 1.0, k, L) <= cap


def test_monotone_in_p():
    prev = None
    for p in (0.1, 0.3, 0.5, 0.7, 0.9):
        spec = ModelSpec.nearest_neighbor(1, 4, 3, p)
        d = dg.compute_diagrams(spec, two_point_transfer(spec), 1.0)
        cur = np.array([d.T, d.T_tilde, d.S, d.H, *d.W.values()])
        if prev is not None:
            assert np.all(cur >= prev)
        prev = cur


def test_weighting_monotone_in_m(m0, m0_phi):
    L = dg.Lines(m0, m0_phi)
    vals = [dg.triangle(m0, m0_phi, m, L) for m in (0.8, 1.0, 1.25)]
    assert vals == sorted(vals)


def test_to_dict(m0, m0_phi):
    doc = dg.compute_diagrams(m0, m0_phi, 1.0).to_dict()
    assert [w["j"] for w in doc["W"]] == [[0], [1], [2], [3]]
    assert doc["model_hash"] == m0.model_hash()
