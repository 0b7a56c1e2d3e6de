"""Ground-truth values on the finite model.

* ``two_point_transfer``   exact phi by evolving the wet-set distribution
* ``two_point_enumeration`` exact phi by summing over all bond configurations
* ``two_point_mc``         plain Monte Carlo with per-entry standard errors
* ``pi_oracle`` / ``Pi_oracle``  lace-expansion coefficients by exhaustive
  enumeration

The enumeration oracles share one pass over all ``2**n_bonds`` masks
(:func:`enumeration_counts`), which yields integer histograms keyed by the
number of occupied bonds per weight class.  Evaluating them at a given ``p``
is then a dot product with the per-key configuration probabilities.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _engine
from .cache import Cache, default_cache
from .convolution import SpaceTimeFunction
from .errors import StateBudgetExceeded
from .model import DEFAULT_BOND_LIMIT, ModelSpec, Vertex, check_bond_budget

log = logging.getLogger(__name__)

DEFAULT_STATE_LIMIT = 1 << 12
CHUNK = 1 << 16
MC_CHUNK = 10_000
SCAN_DEPTH = 2  # coefficient scans cover N <= 2 so pi and Pi requests share one pass


@dataclass(frozen=True)
class TwoPointTable:
    values: np.ndarray          # shape (T+1, W, ..., W), indexed by (dtau, dsigma)
    model_hash: str
    method: str                 # transfer | enumeration | monte-carlo
    stderr: np.ndarray | None = None

    def __call__(self, dsigma, dtau: int) -> float:
        if not 0 <= dtau < self.values.shape[0]:
            return 0.0
        W = self.values.shape[1]
        return float(self.values[(dtau,) + tuple(int(c) % W for c in dsigma)])

    def at(self, x: Vertex) -> float:
        return self(x.sigma, x.tau)

    def as_function(self) -> SpaceTimeFunction:
        return SpaceTimeFunction(np.array(self.values, dtype=float), "phi")


@dataclass(frozen=True)
class CoefficientTable:
    kind: str                   # "pi" or "Pi"
    N: int
    values: np.ndarray          # shape (T+1, W, ..., W), indexed by x = (tau, sigma)
    model_hash: str
    per_j: np.ndarray | None = None           # Pi only: shape (N, ...) fixed-j terms
    pivotal_extra: np.ndarray | None = None   # Pi only: shape (N, ...)

    def at(self, x: Vertex) -> float:
        return float(self.values[(x.tau,) + tuple(x.sigma)])


# -- enumeration ----------------------------------------------------------

@dataclass(frozen=True)
class EnumerationCounts:
    """p-independent integer histograms from one exhaustive pass."""

    geometry_hash: str
    n_max: int
    class_sizes: tuple[int, ...]
    reach: np.ndarray
    pi: np.ndarray
    pij: np.ndarray
    extra: np.ndarray

    @property
    def strides(self) -> np.ndarray:
        out, acc = [], 1
        for n in self.class_sizes:
            out.append(acc)
            acc *= n + 1
        return np.array(out, dtype=np.int64)

    def key_weights(self, spec: ModelSpec) -> np.ndarray:
        """Probability of a single configuration for every weight key."""
        n_keys = self.reach.shape[0]
        w = np.ones(n_keys)
        keys = np.arange(n_keys)
        for c, (n, D) in enumerate(zip(self.class_sizes, spec.weight_classes)):
            k = (keys // self.strides[c]) % (n + 1)
            q = spec.p * D
            w *= np.array([q ** int(a) * (1.0 - q) ** int(n - a) for a in k])
        return w

    def truncated(self, n_max: int) -> "EnumerationCounts":
        j = max(n_max, 1)
        return EnumerationCounts(
            self.geometry_hash, n_max, self.class_sizes, self.reach,
            self.pi[: n_max + 1], self.pij[: n_max + 1, :j], self.extra[: n_max + 1, :j],
        )

    def to_payload(self) -> dict:
        return {
            "geometry_hash": self.geometry_hash,
            "n_max": self.n_max,
            "class_sizes": list(self.class_sizes),
            **{name: {"shape": list(a.shape), "data": a.ravel().tolist()}
               for name, a in (("reach", self.reach), ("pi", self.pi),
                               ("pij", self.pij), ("extra", self.extra))},
        }

    @classmethod
    def from_payload(cls, doc: dict) -> "EnumerationCounts":
        arrs = {name: np.array(doc[name]["data"], dtype=np.int64).reshape(doc[name]["shape"])
                for name in ("reach", "pi", "pij", "extra")}
        return cls(doc["geometry_hash"], doc["n_max"], tuple(doc["class_sizes"]), **arrs)


_MEMO: dict[str, EnumerationCounts] = {}


def _scan_chunk(args):
    start, stop, spec, strides, n_keys, n_max = args
    tails, heads = spec.bond_arrays
    arrs = _engine.allocate(n_keys, spec.n_vertices, n_max)
    _engine.scan_range(start, stop, spec.n_vertices, spec.n_sites, 0, tails, heads,
                       spec.bond_class, strides, n_max, *arrs)
    return arrs


def enumeration_counts(
    spec: ModelSpec,
    n_max: int = 2,
    bond_limit: int = DEFAULT_BOND_LIMIT,
    allow_large: bool = False,
    workers: int = 1,
    cache: Cache | None = None,
) -> EnumerationCounts:
    """Run (or fetch) the exhaustive pass for the geometry of ``spec``.

    ``allow_large=True`` lifts the bond budget (the caller accepts the cost).
    Chunks are combined in index order; the histograms are integers, so the
    result does not depend on ``workers``.
    """
    if not allow_large:
        check_bond_budget(spec, bond_limit)
    if spec.n_vertices > 62:
        raise ValueError("vertex bit masks are limited to 62 vertices")
    # a phi-only request (n_max = 0) skips the bond-sequence search entirely
    requested, n_max = n_max, (max(n_max, SCAN_DEPTH) if n_max > 0 else 0)
    ghash = spec.geometry_hash()
    for counts in _MEMO.values():
        if counts.geometry_hash == ghash and counts.n_max >= requested:
            return counts.truncated(requested)
    cache = cache if cache is not None else default_cache()
    key = f"{ghash}-N{n_max}"
    if cache is not None:
        payload = cache.load("counts", key)
        if payload is not None:
            counts = EnumerationCounts.from_payload(payload)
            _MEMO[key] = counts
            return counts.truncated(requested)

    sizes = tuple(int(np.sum(spec.bond_class == c)) for c in range(len(spec.weight_classes)))
    strides, acc = [], 1
    for n in sizes:
        strides.append(acc)
        acc *= n + 1
    n_keys = acc
    strides = np.array(strides, dtype=np.int64)
    total = 1 << spec.n_bonds
    jobs = [(a, min(a + CHUNK, total), spec, strides, n_keys, n_max) for a in range(0, total, CHUNK)]
    log.info("enumerating %d configurations (%d bonds)", total, spec.n_bonds)
    acc_arrs = _engine.allocate(n_keys, spec.n_vertices, n_max)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_scan_chunk, jobs)
            for part in results:
                for a, b in zip(acc_arrs, part):
                    a += b
    else:
        tails, heads = spec.bond_arrays
        for start, stop, *_ in jobs:
            _engine.scan_range(start, stop, spec.n_vertices, spec.n_sites, 0, tails, heads,
                               spec.bond_class, strides, n_max, *acc_arrs)
    counts = EnumerationCounts(ghash, n_max, sizes, *acc_arrs)
    _MEMO[key] = counts
    if cache is not None:
        cache.store("counts", key, counts.to_payload())
    return counts.truncated(requested)


def _weighted(hist: np.ndarray, w: np.ndarray, spec: ModelSpec) -> np.ndarray:
    # hist (..., n_keys, nv); fixed-order dot product over keys
    out = np.tensordot(hist.astype(float), w, axes=([hist.ndim - 2], [0]))
    return out.reshape(hist.shape[:-2] + spec.shape)


def two_point_enumeration(spec: ModelSpec, bond_limit: int = DEFAULT_BOND_LIMIT, **kw) -> TwoPointTable:
    counts = enumeration_counts(spec, n_max=0, bond_limit=bond_limit, **kw)
    phi = _weighted(counts.reach, counts.key_weights(spec), spec)
    return TwoPointTable(phi, spec.model_hash(), "enumeration")


def pi_oracle(spec: ModelSpec, N: int, bond_limit: int = DEFAULT_BOND_LIMIT,
              n_max: int = 0, **kw) -> CoefficientTable:
    """``pi^(0)(x) = P(o => x)``; for ``N >= 1`` the sum over ordered bond
    sequences of ``P(E~^(N)(x))``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    counts = enumeration_counts(spec, n_max=max(N, n_max), bond_limit=bond_limit, **kw)
    vals = _weighted(counts.pi[N], counts.key_weights(spec), spec)
    return CoefficientTable("pi", N, vals, spec.model_hash())


def Pi_oracle(spec: ModelSpec, N: int, bond_limit: int = DEFAULT_BOND_LIMIT,
              n_max: int = 0, **kw) -> CoefficientTable:
    """``Pi^(N)(x) = sum_{b_vec, b} sum_j P(E~ and {b = b_j or b in piv(b_bar_j, b_under_{j+1})})``.

    ``per_j[j-1]`` is the fixed-``j`` term and ``pivotal_extra[j-1]`` its
    ``{b in piv}`` part, so ``per_j[j-1] = pi^(N) + pivotal_extra[j-1]``.
    """
    if N < 1:
        raise ValueError("Pi^(N) is defined for N >= 1")
    counts = enumeration_counts(spec, n_max=max(N, n_max), bond_limit=bond_limit, **kw)
    w = counts.key_weights(spec)
    per_j = _weighted(counts.pij[N, :N], w, spec)
    extra = _weighted(counts.extra[N, :N], w, spec)
    return CoefficientTable("Pi", N, per_j.sum(axis=0), spec.model_hash(), per_j, extra)


# -- wet-set transfer -------------------------------------------------------

def _target_probs(spec: ModelSpec) -> np.ndarray:
    """``Q[s, t]``: probability that the bond from site ``s`` to site ``t`` is occupied."""
    ns = spec.n_sites
    Q = np.zeros((ns, ns))
    for s in range(ns):
        sig = spec.site_sigma(s)
        for e, w in zip(spec.kernel.offsets, spec.kernel.weights):
            t = spec.site_index(tuple(a + b for a, b in zip(sig, e)))
            Q[s, t] = spec.p * w
    return Q


def two_point_transfer(spec: ModelSpec, state_limit: int = DEFAULT_STATE_LIMIT) -> TwoPointTable:
    """Exact phi from the distribution of the wet set, evolved ``T`` steps from ``{o}``.

    Given the wet set ``S`` at time ``t``, the sites wet at ``t+1`` are
    independent with probabilities ``1 - prod_{s in S} (1 - Q[s, t])``.
    """
    ns = spec.n_sites
    n_states = 1 << ns
    if n_states > state_limit:
        raise StateBudgetExceeded(f"{n_states} wet-set states exceed the budget of {state_limit}")
    Q = _target_probs(spec)
    # survival[S, t] = prod_{s in S} (1 - Q[s, t])
    surv = np.ones((n_states, ns))
    for S in range(1, n_states):
        low = (S & -S).bit_length() - 1
        surv[S] = surv[S & (S - 1)] * (1.0 - Q[low])
    wet = 1.0 - surv
    membership = ((np.arange(n_states)[:, None] >> np.arange(ns)[None, :]) & 1).astype(float)

    dist = np.zeros(n_states)
    dist[1 << spec.site_index((0,) * spec.d)] = 1.0
    phi = np.zeros((spec.T + 1, ns))
    phi[0] = dist @ membership
    block = 256
    for t in range(1, spec.T + 1):
        new = np.zeros(n_states)
        live = np.nonzero(dist)[0]
        for i in range(0, len(live), block):
            rows = live[i:i + block]
            r = wet[rows]
            P = np.ones((len(rows), 1))
            for site in range(ns):
                P = np.hstack([P * (1.0 - r[:, site:site + 1]), P * r[:, site:site + 1]])
            new += dist[rows] @ P
        dist = new
        phi[t] = dist @ membership
    return TwoPointTable(phi.reshape(spec.shape), spec.model_hash(), "transfer")


# -- Monte Carlo ----------------------------------------------------------

def two_point_mc(spec: ModelSpec, samples: int, seed: int = 0) -> TwoPointTable:
    """Plain Monte Carlo estimate of phi with binomial standard errors.

    Samples are drawn in chunks of ``MC_CHUNK``; chunk ``i`` uses the ``i``-th
    child of ``numpy.random.SeedSequence(seed)``, so results depend only on
    ``(samples, seed)``, not on how chunks are scheduled.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    ns = spec.n_sites
    n_chunks = -(-samples // MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    hits = np.zeros((spec.T + 1, ns), dtype=np.int64)
    heads = np.array([[spec.site_index(tuple(a + b for a, b in zip(spec.site_sigma(s), e)))
                       for s in range(ns)] for e in spec.kernel.offsets])
    qs = spec.p * np.asarray(spec.kernel.weights)
    o = spec.site_index((0,) * spec.d)
    for i, child in enumerate(children):
        n = min(MC_CHUNK, samples - i * MC_CHUNK)
        rng = np.random.default_rng(child)
        wet = np.zeros((n, ns), dtype=bool)
        wet[:, o] = True
        hits[0] += wet.sum(axis=0)
        for t in range(1, spec.T + 1):
            nxt = np.zeros_like(wet)
            for k in range(len(qs)):
                occ = rng.random((n, ns)) < qs[k]
                nxt[:, heads[k]] |= wet & occ  # heads[k] is a permutation of sites
            wet = nxt
            hits[t] += wet.sum(axis=0)
    est = hits / samples
    stderr = np.sqrt(est * (1.0 - est) / samples)
    return TwoPointTable(est.reshape(spec.shape), spec.model_hash(), "monte-carlo",
                         stderr.reshape(spec.shape))


def two_point(spec: ModelSpec, method: str = "transfer", **kw) -> TwoPointTable:
    if method == "transfer":
        return two_point_transfer(spec, **kw)
    if method == "enumeration":
        return two_point_enumeration(spec, **kw)
    raise ValueError(f"unknown exact method {method!r}")


def cached_two_point(spec: ModelSpec, cache: Cache | None, method: str = "transfer",
                     force: bool = False, compute: bool = True, **kw) -> tuple[TwoPointTable, bool]:
    """Return ``(table, hit)``; the table is stored under the model hash.

    ``force`` ignores any stored table; ``compute=False`` raises ``LookupError``
    on a miss instead of computing.
    """
    key = f"{spec.model_hash()}-{method}"
    if cache is not None and not force:
        payload = cache.load("twopoint", key)
        if payload is not None:
            vals = np.array(payload["values"], dtype=float).reshape(payload["shape"])
            return TwoPointTable(vals, spec.model_hash(), payload["method"]), True
    if not compute:
        raise LookupError(f"no cached two-point table for model {spec.model_hash()}")
    table = two_point(spec, method, **kw)
    if cache is not None:
        cache.store("twopoint", key, {"method": table.method, "shape": list(table.values.shape),
                                      "values": table.values.ravel().tolist()})
    return table, False
