"""Certification harness: oracle values against bound evaluators.

Every check yields :class:`CheckResult` records with ``margin = rhs - lhs``.
An inequality passes when ``margin >= -1e-9 * max(1, |rhs|)``; an identity
passes when ``|lhs - rhs| <= 1e-12 * max(1, |rhs|)``.  Families with many
elementary cases (pointwise inequalities over the lattice, enumerated chains)
record the worst case together with the number of cases it summarizes.

Report JSON is canonical and holds no timing data, so identical inputs give
byte-identical files; wall-clock per family is kept in ``timings``.
"""
from __future__ import annotations

import itertools
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import diagrams as dg
from . import kernels
from .cache import canonical_json
from .connectivity import DEFAULT_PATH_LIMIT, ConnectionEvent, EventContext, disjointly_connected
from .convolution import cos_factor
from .errors import BudgetExceeded, StateBudgetExceeded
from .model import DEFAULT_BOND_LIMIT, BondConfig, ModelSpec, check_bond_budget, dual_grid
from .oracle import Pi_oracle, TwoPointTable, pi_oracle, two_point

log = logging.getLogger(__name__)

INEQ_TOL = 1e-9
IDENT_TOL = 1e-12
DEFAULT_M_LIST = (0.8, 1.0, 1.25)
DEFAULT_ELL_LIST = (0, 1, 2)

M0 = ModelSpec.nearest_neighbor(1, 4, 3, 0.5)

# d = 1 nearest-neighbour specs covering small/large p and both torus widths
REFERENCE_SPECS = (
    ModelSpec.nearest_neighbor(1, 3, 2, 0.2),
    ModelSpec.nearest_neighbor(1, 3, 3, 0.5),
    ModelSpec.nearest_neighbor(1, 4, 2, 0.8),
    ModelSpec.nearest_neighbor(1, 4, 3, 0.2),
    ModelSpec.nearest_neighbor(1, 4, 3, 0.5),
    ModelSpec.nearest_neighbor(1, 4, 3, 0.8),
)


def _clean(value):
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (tuple, list)):
        return [_clean(v) for v in value]
    return value


@dataclass(frozen=True)
class CheckResult:
    check: str
    params: dict
    lhs: float
    rhs: float
    kind: str = "inequality"      # or "identity"
    cases: int = 1

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        scale = max(1.0, abs(self.rhs))
        if self.kind == "identity":
            return abs(self.lhs - self.rhs) <= IDENT_TOL * scale
        return self.margin >= -INEQ_TOL * scale

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "params": {k: _clean(v) for k, v in sorted(self.params.items())},
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "margin": float(self.margin),
            "kind": self.kind,
            "cases": int(self.cases),
            "pass": bool(self.passed),
        }


@dataclass
class VerificationReport:
    model: dict
    results: list[CheckResult] = field(default_factory=list)
    seed: int = 0
    skipped: list[dict] = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def families(self) -> list[str]:
        return sorted({r.check.split(":")[0] for r in self.results})

    def summary(self) -> dict:
        out = {}
        for fam in self.families:
            rs = [r for r in self.results if r.check.split(":")[0] == fam]
            out[fam] = {"checks": len(rs), "failures": sum(not r.passed for r in rs)}
        return out

    @property
    def n_failures(self) -> int:
        return sum(not r.passed for r in self.results)

    @property
    def all_passed(self) -> bool:
        return self.n_failures == 0 and not self.skipped

    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.results.extend(other.results)
        self.skipped.extend(other.skipped)
        self.timings.update(other.timings)
        return self

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "seed": self.seed,
            "summary": self.summary(),
            "skipped": self.skipped,
            "results": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict()) + "\n"

    def to_table(self) -> str:
        lines = [f"{'check':<34} {'params':<40} {'lhs':>14} {'rhs':>14} {'margin':>12}  ok"]
        for r in self.results:
            par = ",".join(f"{k}={_clean(v)}" for k, v in sorted(r.params.items()))
            lines.append(f"{r.check:<34} {par[:40]:<40} {r.lhs:>14.6g} {r.rhs:>14.6g} "
                         f"{r.margin:>12.3g}  {'ok' if r.passed else 'FAIL'}")
        for fam, s in self.summary().items():
            lines.append(f"# {fam}: {s['checks']} checks, {s['failures']} failures")
        for sk in self.skipped:
            lines.append(f"# skipped {sk['family']}: {sk['reason']}")
        return "\n".join(lines) + "\n"


def _report(spec: ModelSpec) -> VerificationReport:
    return VerificationReport(model=spec.to_dict())


def _x_label(spec: ModelSpec, flat: int) -> list[int]:
    v = spec.vertex_at(flat)
    return [*v.sigma, v.tau]


def _worst(check: str, params: dict, lhs: np.ndarray, rhs: np.ndarray, kind="inequality") -> CheckResult:
    """Summarize an array of cases by the case with the smallest scaled margin."""
    lhs, rhs = np.broadcast_arrays(np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float))
    lhs, rhs = lhs.ravel(), rhs.ravel()
    if kind == "identity":
        score = -np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))
    else:
        score = (rhs - lhs) / np.maximum(1.0, np.abs(rhs))
    i = int(np.argmin(score))
    return CheckResult(check, params, float(lhs[i]), float(rhs[i]), kind, cases=lhs.size)


def _phi(spec: ModelSpec, phi) -> TwoPointTable:
    if phi is not None:
        return phi
    try:
        return two_point(spec, "transfer")
    except StateBudgetExceeded:
        return two_point(spec, "enumeration")


# -- coefficient bounds ----------------------------------------------------

def check_lemma1(spec: ModelSpec, N_max: int = 2, phi=None, rewr_N_max: int = 3,
                 bond_limit: int = DEFAULT_BOND_LIMIT,
                 memory_budget: int = kernels.DEFAULT_MEMORY_BUDGET, **oracle_kw) -> VerificationReport:
    """Coefficient oracles against the two-point-function bounds, per vertex.

    Families: ``pi-bound`` (N = 0..N_max), ``Pi-bound`` and ``Pi-split``
    (N = 1..N_max), ``rewr1`` / ``rewr2`` (exact reorderings, N = 1..rewr_N_max)
    and ``rewr2-bare`` (middle factor without the coincidence halving, an
    upper bound).
    """
    t0 = time.perf_counter()
    rep = _report(spec)
    phi = _phi(spec, phi)
    f = kernels.PairFactors(spec, phi, memory_budget)
    nv = spec.n_vertices
    for N in range(N_max + 1):
        lhs = pi_oracle(spec, N, bond_limit, n_max=N_max, **oracle_kw).values.ravel()
        rhs = (kernels.pi0_bounds(spec, phi, f) if N == 0
               else kernels.pi_chain_bounds(spec, phi, N, f)).ravel()
        for i in range(nv):
            rep.results.append(CheckResult("pi-bound", {"N": N, "x": _x_label(spec, i)}, lhs[i], rhs[i]))
    for N in range(1, N_max + 1):
        pi_n = pi_oracle(spec, N, bond_limit, n_max=N_max, **oracle_kw).values.ravel()
        Pt = Pi_oracle(spec, N, bond_limit, n_max=N_max, **oracle_kw)
        rhs = kernels.Pi_chain_bounds(spec, phi, N, f).ravel()
        lhs = Pt.values.ravel()
        for i in range(nv):
            rep.results.append(CheckResult("Pi-bound", {"N": N, "x": _x_label(spec, i)}, lhs[i], rhs[i]))
        # Pi^(N) = sum_j (pi^(N) + pivotal extra_j), i.e. N pi^(N) + sum_j extra_j
        split = N * pi_n + Pt.pivotal_extra.reshape(N, -1).sum(axis=0)
        for i in range(nv):
            rep.results.append(CheckResult("Pi-split", {"N": N, "x": _x_label(spec, i)},
                                           lhs[i], split[i], "identity"))
    for N in range(1, rewr_N_max + 1):
        base = kernels.pi_chain_bounds(spec, phi, N, f).ravel()
        r1 = kernels.pi_chain_bounds_rewr(spec, phi, N, None, factors=f).ravel()
        rep.results.append(_worst("rewr1", {"N": N}, r1, base, "identity"))
        for j in range(1, N + 1):
            r2 = kernels.pi_chain_bounds_rewr(spec, phi, N, j, factors=f).ravel()
            rep.results.append(_worst("rewr2", {"N": N, "j": j}, r2, base, "identity"))
            bare = kernels.pi_chain_bounds_rewr(spec, phi, N, j, halve_middle=False, factors=f).ravel()
            rep.results.append(_worst("rewr2-bare", {"N": N, "j": j}, base, bare))
    rep.timings["lemma1"] = time.perf_counter() - t0
    return rep


def _tau_grid(spec: ModelSpec) -> np.ndarray:
    return np.arange(spec.T + 1, dtype=float).reshape((-1,) + (1,) * spec.d)


def check_lemma2(spec: ModelSpec, N_max: int = 2, m_list=DEFAULT_M_LIST, ell_list=DEFAULT_ELL_LIST,
                 phi=None, bond_limit: int = DEFAULT_BOND_LIMIT, **oracle_kw) -> VerificationReport:
    """Weighted coefficient sums against the closed-form diagram bounds.

    ``tau``-moment sums run over ``tau_x >= 1``; cosine and ``Pi`` sums over
    ``tau_x >= 0``.
    """
    t0 = time.perf_counter()
    rep = _report(spec)
    phi = _phi(spec, phi)
    lines = dg.Lines(spec, phi)
    tau = _tau_grid(spec)
    pis = [pi_oracle(spec, N, bond_limit, n_max=N_max, **oracle_kw).values for N in range(N_max + 1)]
    for m in m_list:
        diag = dg.compute_diagrams(spec, phi, m, lines)
        mt = float(m) ** tau
        for N in range(N_max + 1):
            for ell in ell_list:
                lhs = float(np.sum((tau ** ell * pis[N] * mt)[1:]))
                rep.results.append(CheckResult("lemma2-moment", {"N": N, "ell": ell, "m": m},
                                               lhs, dg.lemma2_pi_bound(N, ell, diag)))
                if N == 0:
                    rep.results.append(CheckResult("lemma2-moment-sharp", {"ell": ell, "m": m},
                                                   lhs, dg.lemma2_pi_bound(0, ell, diag, sharp=True)))
            for k in dual_grid(spec.d, spec.W):
                lhs = float(np.sum(cos_factor(k, spec.d)[None, ...] * pis[N] * mt))
                par = {"N": N, "k": list(k.j), "m": m}
                rep.results.append(CheckResult("lemma2-cos", par, lhs, dg.lemma2_cos_bound(N, diag, k)))
                if N == 0:
                    rep.results.append(CheckResult("lemma2-cos-sharp", {"k": list(k.j), "m": m},
                                                   lhs, dg.lemma2_cos_bound(0, diag, k, sharp=True)))
    diag1 = dg.compute_diagrams(spec, phi, 1.0, lines)
    for N in range(1, N_max + 1):
        lhs = float(Pi_oracle(spec, N, bond_limit, n_max=N_max, **oracle_kw).values.sum())
        rep.results.append(CheckResult("lemma2-Pi", {"N": N}, lhs, dg.lemma2_Pi_bound(N, diag1)))
    rep.timings["lemma2"] = time.perf_counter() - t0
    return rep


# -- intermediate inequalities ---------------------------------------------

def _free_offsets(spec: ModelSpec):
    """All ``y`` with time offset in ``[-T, T]``, as ``(sigma, tau)`` tuples."""
    sites = [spec.site_sigma(s) for s in range(spec.n_sites)]
    return [(s, t) for t in range(-spec.T, spec.T + 1) for s in sites]


def _shifted_rows(spec: ModelSpec, f, offsets) -> np.ndarray:
    """``R[i, u] = f(u - y_i)`` over lattice vertices ``u``."""
    verts = spec.vertices()
    out = np.zeros((len(offsets), len(verts)))
    for i, (sy, ty) in enumerate(offsets):
        for j, u in enumerate(verts):
            out[i, j] = f(tuple(a - b for a, b in zip(u.sigma, sy)), u.tau - ty)
    return out


def xibd_forms(spec: ModelSpec, phi, m: float, lines: dg.Lines | None = None):
    """The three pair-sum forms bounded by ``2 T^(m)``, for every free ``y``.

    Returns ``(offsets, form1, form2, form3)``:

    * form 1: ``2 sum_x Xi(o, y; x, x) m^{tau_x}``
    * form 2: ``sum_{u,v} (xi_par(o,y;u,v) m^{tau_u} + xi_cross(o,y;u,v) m^{tau_v}) phi(u; v)``
    * form 3: ``sum_{u,v} (xi_par(y,o;u,v) m^{tau_v} + xi_cross(y,o;u,v) m^{tau_u}) phi(u; v)``
    """
    L = lines or dg.Lines(spec, phi)
    offsets = _free_offsets(spec)
    A = L.qphi
    Ay = _shifted_rows(spec, A, offsets)                  # a(y; u)
    a0 = A.vertex_matrix()[spec.vertex_index(spec.origin())]
    Phi = L.phi.vertex_matrix()
    mw = float(m) ** np.repeat(np.arange(spec.T + 1), spec.n_sites).astype(float)
    # Xi(o,y;x,x) = (a(x) a(y;x) + a(x) a(y;x)) / 2
    form1 = 2.0 * (Ay @ (a0 * mw))
    am = a0 * mw
    form2 = Ay @ (Phi.T @ am) + Ay @ (Phi @ am)
    form3 = Ay @ (Phi @ am) + Ay @ (Phi.T @ am)
    return offsets, form1, form2, form3


def check_intermediates(spec: ModelSpec, phi=None, m_list=DEFAULT_M_LIST, chain_W: int | None = None,
                        max_chain: int = 4) -> VerificationReport:
    """Pointwise, pair-sum and chain-level inequalities that feed the coefficient bounds."""
    t0 = time.perf_counter()
    rep = _report(spec)
    phi = _phi(spec, phi)
    L = dg.Lines(spec, phi)
    tau = _tau_grid(spec)
    a, a2, a3 = L.qphi.values, L.qphiphi.values, L.qphiphiphi.values

    off_origin = np.ones(spec.shape, dtype=bool)
    off_origin[(0,) * (spec.d + 1)] = False
    rep.results.append(_worst("trivineq", {}, L.phi.values[off_origin], a[off_origin]))
    rep.results.append(_worst("markov", {}, tau * a, a2))
    rep.results.append(_worst("markov2", {"step": 1}, tau ** 2 * a, tau * a2))
    rep.results.append(_worst("markov2", {"step": 2}, tau * a2, a3))
    rep.results.append(_worst("markov2", {"step": "composite"}, tau ** 2 * a, a3))

    for m in m_list:
        Tm = dg.triangle(spec, phi, m, L)
        _, f1, f2, f3 = xibd_forms(spec, phi, m, L)
        for name, vals in (("xibd", f1), ("xibd-par-cross-o-first", f2), ("xibd-par-cross-y-first", f3)):
            rep.results.append(_worst(name, {"m": m}, vals, 2.0 * Tm))
        # T0bd, both steps
        Phi = L.phi.vertex_matrix()
        r0 = Phi[spec.vertex_index(spec.origin())]
        mw = float(m) ** np.repeat(np.arange(spec.T + 1), spec.n_sites).astype(float)
        lhs = float(np.sum(r0[:, None] * Phi * (r0 * mw)[None, :]))
        prod = (L.phiphi.values * L.mqphi(m).values).ravel()
        mid = 1.0 + float(np.sum(prod[1:]))
        rep.results.append(CheckResult("T0bd", {"m": m, "step": 1}, lhs, mid))
        rep.results.append(CheckResult("T0bd", {"m": m, "step": 2}, mid, 1.0 + 2.0 * Tm))

    rep.extend(_telescopes(spec, chain_W or spec.W, max_chain))
    rep.timings["intermediates"] = time.perf_counter() - t0
    return rep


def _telescopes(spec: ModelSpec, W: int, max_chain: int) -> VerificationReport:
    """Telescoping of ``tau`` (exact) and of ``1 - cos`` (inequality) over every
    chain ``u_1, ..., u_{N+1} = x`` of at most ``max_chain`` vertices."""
    rep = _report(spec)
    d, T = spec.d, spec.T
    for length in range(1, max_chain + 1):
        N = length - 1
        taus = np.array(list(itertools.product(range(T + 1), repeat=length)), dtype=np.int64)
        tel = taus[:, 0] + np.sum(np.diff(taus, axis=1), axis=1)
        rep.results.append(_worst("telescope-n", {"N": N}, tel, taus[:, -1], "identity"))
        sites = np.array(list(itertools.product(range(W), repeat=d)), dtype=np.int64)
        idx = np.array(list(itertools.product(range(len(sites)), repeat=length)), dtype=np.int64)
        chains = sites[idx]                                   # (n, length, d)
        for j in itertools.product(range(W), repeat=d):
            kv = np.asarray(j, dtype=np.int64)

            def omc(sig):
                n = (sig @ kv) % W
                return 1.0 - np.cos(2.0 * np.pi * n / W)

            lhs = omc(chains[:, -1])
            steps = omc(chains[:, 0]) + np.sum(omc(np.diff(chains, axis=1)), axis=1) if N else omc(chains[:, 0])
            rep.results.append(_worst("telescope-cos", {"N": N, "k": list(j), "W": W},
                                      lhs, (2 * N + 3) * steps))
    return rep


# -- event inclusions -----------------------------------------------------

class _ConfigEvents:
    """Connectivity facts for one configuration, computed once."""

    def __init__(self, spec: ModelSpec, mask: int, path_limit: int):
        self.spec = spec
        self.ctx = EventContext(spec, BondConfig(mask, 1.0, spec.n_bonds))
        self.path_limit = path_limit
        nv = spec.n_vertices
        self.verts = spec.vertices()
        self.bonds = spec.bonds
        self.occ = [b for b in self.bonds if (mask >> b.index) & 1]
        self.R = [self.ctx.reach_mask(i) for i in range(nv)]
        self._Rb: dict[tuple[int, int], int] = {}
        self._piv: dict[tuple[int, int], list] = {}
        self._memo: dict = {}

    def reach_without(self, s: int, b: int) -> int:
        key = (s, b)
        if key not in self._Rb:
            self._Rb[key] = self.ctx.reach_mask(s, b)
        return self._Rb[key]

    def piv(self, s: int, x: int) -> list:
        """Pivotal bonds for ``s -> x`` (empty when not connected)."""
        key = (s, x)
        if key not in self._piv:
            out = []
            if (self.R[s] >> x) & 1 and s != x:
                for b in self.occ:
                    if not (self.reach_without(s, b.index) >> x) & 1:
                        out.append(b)
            self._piv[key] = out
        return self._piv[key]

    def C_tilde(self, b: int, y: int) -> int:
        return self.reach_without(y, b)

    def E(self, b, v: int, C: int) -> bool:
        """``b`` occupied, ``b_bar -> v``, ``v`` in ``C``, no pivotal of ``b_bar -> v`` with tail in ``C``."""
        if not (self.ctx.config.mask >> b.index) & 1:
            return False
        h = self.spec.vertex_index(b.over)
        if not (self.R[h] >> v) & 1 or not (C >> v) & 1:
            return False
        return not any((C >> self.spec.vertex_index(p.under)) & 1 for p in self.piv(h, v))

    def double(self, s: int, x: int) -> bool:
        return s == x or ((self.R[s] >> x) & 1 and not self.piv(s, x))

    def disjoint(self, events) -> bool:
        key = tuple(events)
        if key not in self._memo:
            self._memo[key] = disjointly_connected(self.ctx, events, self.path_limit)
        return self._memo[key]


def _ev(source, target, *via) -> ConnectionEvent:
    return ConnectionEvent(source, target, tuple(via))


def _inclusion_counts(spec: ModelSpec, masks, path_limit: int, families) -> dict:
    """Count LHS occurrences and RHS misses per inclusion family."""
    stats = {f: [0, 0] for f in families}
    nv = spec.n_vertices
    V = spec.vertices()
    vi = spec.vertex_index
    o = vi(spec.origin())
    for mask in masks:
        ce = _ConfigEvents(spec, mask, path_limit)
        occ = ce.occ
        if "dbellsup" in stats:
            for v in range(nv):
                if not ce.double(o, v):
                    continue
                for x in range(nv):
                    if not (ce.R[o] >> x) & 1:
                        continue
                    stats["dbellsup"][0] += 1
                    ok = any(ce.disjoint((_ev(V[o], V[v], V[u]), _ev(V[o], V[v]), _ev(V[u], V[x])))
                             for u in range(nv))
                    stats["dbellsup"][1] += not ok
        for b in occ:
            h = vi(b.over)
            tb = b.under.tau
            for y in range(nv):
                C = ce.C_tilde(b.index, y)
                for v in range(nv):
                    if not ce.E(b, v, C):
                        continue
                    if "Esup" in stats:
                        stats["Esup"][0] += 1
                        ok = ce.disjoint((_ev(V[y], V[v]), _ev(b, V[v])))
                        stats["Esup"][1] += not ok
                    pivs = ce.piv(h, v)
                    if "Epivsup" in stats:
                        for bp in pivs:
                            stats["Epivsup"][0] += 1
                            ok = ce.disjoint((_ev(V[y], V[v]), _ev(b, V[v], bp)))
                            stats["Epivsup"][1] += not ok
                    for x in range(nv):
                        if not (ce.R[h] >> x) & 1:
                            continue
                        us = [u for u in range(nv) if V[u].tau > tb]
                        if "Eellsup" in stats:
                            stats["Eellsup"][0] += 1
                            ok = any(
                                ce.disjoint((_ev(V[y], V[v], V[u]), _ev(b, V[v]), _ev(V[u], V[x])))
                                or ce.disjoint((_ev(V[y], V[v]), _ev(b, V[v], V[u]), _ev(V[u], V[x])))
                                for u in us)
                            stats["Eellsup"][1] += not ok
                        if "Eellpivsup" in stats:
                            for bp in pivs:
                                stats["Eellpivsup"][0] += 1
                                ok = any(
                                    ce.disjoint((_ev(V[y], V[v], V[u]), _ev(b, V[v], bp), _ev(V[u], V[x])))
                                    or ce.disjoint((_ev(V[y], V[v]), _ev(b, V[v], bp, V[u]), _ev(V[u], V[x])))
                                    or ce.disjoint((_ev(V[y], V[v]), _ev(b, V[v], V[u], bp), _ev(V[u], V[x])))
                                    for u in us)
                                stats["Eellpivsup"][1] += not ok
    return stats


INCLUSION_FAMILIES = ("Esup", "dbellsup", "Eellsup", "Epivsup", "Eellpivsup")


def check_inclusions(spec: ModelSpec | None = None, path_limit: int = DEFAULT_PATH_LIMIT,
                     masks=None, families=INCLUSION_FAMILIES,
                     bond_limit: int = DEFAULT_BOND_LIMIT) -> VerificationReport:
    """Per-configuration event inclusions, exhaustively over ``masks``
    (default: every configuration of ``spec``, which defaults to W=3, T=2).

    For each family the record has ``lhs`` = number of (configuration, tuple)
    pairs where the left event holds but no right-hand disjoint witness exists
    and ``rhs = 0``; ``cases`` is the number of left-event occurrences.  A
    failure would point first at the reading of ``E(b, x; C)``.
    """
    spec = spec or ModelSpec.nearest_neighbor(1, 3, 2, 0.5)
    t0 = time.perf_counter()
    if masks is None:
        check_bond_budget(spec, bond_limit)
        masks = range(1 << spec.n_bonds)
    masks = list(masks)
    stats = _inclusion_counts(spec, masks, path_limit, families)
    rep = _report(spec)
    for fam in families:
        occurrences, misses = stats[fam]
        rep.results.append(CheckResult(f"inclusion:{fam}", {"configs": len(masks)},
                                       float(misses), 0.0, cases=occurrences))
    rep.timings["inclusions"] = time.perf_counter() - t0
    return rep


def run_all(spec: ModelSpec, N_max: int = 2, m_list=DEFAULT_M_LIST, ell_list=DEFAULT_ELL_LIST,
            inclusion_spec: ModelSpec | None = None, path_limit: int = DEFAULT_PATH_LIMIT,
            bond_limit: int = DEFAULT_BOND_LIMIT, seed: int = 0, phi=None,
            inclusions: bool = True,
            memory_budget: int = kernels.DEFAULT_MEMORY_BUDGET) -> VerificationReport:
    """Every family; a family that exceeds its budget is listed under ``skipped``."""
    rep = _report(spec)
    rep.seed = seed
    if phi is None:
        try:
            phi = _phi(spec, None)
        except BudgetExceeded as exc:
            rep.skipped.append({"family": "two-point", "reason": f"{type(exc).__name__}: {exc}"})
    steps = [
        ("lemma1", lambda: check_lemma1(spec, N_max, phi, bond_limit=bond_limit,
                                        memory_budget=memory_budget)),
        ("lemma2", lambda: check_lemma2(spec, N_max, m_list, ell_list, phi, bond_limit=bond_limit)),
        ("intermediates", lambda: check_intermediates(spec, phi, m_list)),
    ]
    if inclusions:
        steps.append(("inclusions", lambda: check_inclusions(inclusion_spec, path_limit,
                                                             bond_limit=bond_limit)))
    for name, fn in steps:
        if phi is None and name != "inclusions":
            rep.skipped.append({"family": name, "reason": "two-point function unavailable"})
            continue
        try:
            rep.extend(fn())
        except BudgetExceeded as exc:
            rep.skipped.append({"family": name, "reason": f"{type(exc).__name__}: {exc}"})
            log.warning("skipped %s: %s", name, exc)
    return rep


def load_report(text: str) -> dict:
    return json.loads(text)
