"""Finite oriented-percolation model on a spatial torus times a time window.

Vertices are ``(sigma, tau)`` with ``sigma`` in ``Z_W^d`` and ``tau`` in
``{0, ..., T}``.  Every bond points one step forward in time, from
``(sigma, tau)`` to ``(sigma + e, tau + 1)`` for an offset ``e`` in the support
of the step distribution ``D``, and is occupied independently with
probability ``q = p * D(e)``.

Vertices and bonds carry dense integer indices so the enumeration kernels can
work with bit masks:

* vertex index  = ``tau * W**d + site``, ``site`` the row-major index of sigma
* bond index    = ``(tau * W**d + site) * len(support) + k``, i.e. bonds are
  ordered lexicographically by ``(tau, sigma, offset)``.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from .errors import BondBudgetExceeded, ConfigError

DEFAULT_BOND_LIMIT = 26


class Vertex(NamedTuple):
    sigma: tuple[int, ...]
    tau: int


class Bond(NamedTuple):
    under: Vertex
    over: Vertex
    index: int


@dataclass(frozen=True)
class StepKernel:
    """Step distribution ``D`` on ``Z_W^d``.

    ``offsets`` are signed representatives; they are reduced modulo ``W`` when
    bonds are built, and two offsets that coincide modulo ``W`` are rejected
    because they would create parallel bonds.
    """

    d: int
    W: int
    offsets: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]
    name: str = "custom"
    require_symmetric: bool = True

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("dimension d must be >= 1")
        if self.W < 3:
            raise ConfigError("torus width W must be >= 3")
        if len(self.offsets) != len(self.weights) or not self.offsets:
            raise ConfigError("kernel needs a non-empty support with one weight per offset")
        if any(len(e) != self.d for e in self.offsets):
            raise ConfigError("every offset must have d components")
        if any(w <= 0 for w in self.weights):
            raise ConfigError("kernel weights must be positive on the support")
        if not math.isclose(math.fsum(self.weights), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ConfigError("kernel weights must sum to 1")
        reduced = [tuple(c % self.W for c in e) for e in self.offsets]
        if any(all(c == 0 for c in r) for r in reduced):
            raise ConfigError("D(0) must vanish (offset congruent to 0 mod W)")
        if len(set(reduced)) != len(reduced):
            raise ConfigError("offsets collide modulo W; increase W")
        if self.require_symmetric:
            table = dict(zip(reduced, self.weights))
            for r, w in table.items():
                neg = tuple((-c) % self.W for c in r)
                if neg not in table or not math.isclose(table[neg], w, rel_tol=1e-12):
                    raise ConfigError("kernel support must be symmetric under negation")

    @classmethod
    def nearest_neighbor(cls, d: int, W: int) -> "StepKernel":
        offs = []
        for i in range(d):
            for s in (-1, 1):
                e = [0] * d
                e[i] = s
                offs.append(tuple(e))
        offs.sort()
        return cls(d, W, tuple(offs), tuple([1.0 / len(offs)] * len(offs)), name="nn")

    @classmethod
    def spread_out(cls, d: int, W: int, L: int) -> "StepKernel":
        """Uniform on ``[-L, L]^d`` minus the origin."""
        if L < 1:
            raise ConfigError("spread-out range L must be >= 1")
        offs = [e for e in itertools.product(range(-L, L + 1), repeat=d) if any(e)]
        return cls(d, W, tuple(offs), tuple([1.0 / len(offs)] * len(offs)), name=f"spread-out-L{L}")

    @property
    def n_sites(self) -> int:
        return self.W ** self.d

    def D(self, dsigma) -> float:
        """Kernel value at a spatial offset (any representative mod W)."""
        r = tuple(int(c) % self.W for c in dsigma)
        for e, w in zip(self.offsets, self.weights):
            if tuple(c % self.W for c in e) == r:
                return w
        return 0.0

    def as_array(self) -> np.ndarray:
        """``D`` as an array of shape ``(W,)*d`` indexed by the offset mod W."""
        out = np.zeros((self.W,) * self.d)
        for e, w in zip(self.offsets, self.weights):
            out[tuple(c % self.W for c in e)] = w
        return out

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "W": self.W,
            "name": self.name,
            "offsets": [list(e) for e in self.offsets],
            "weights": list(self.weights),
        }


@dataclass(frozen=True)
class WaveVector:
    """Dual-grid wave vector ``k = 2*pi*j/W``, stored by its integer index ``j``."""

    j: tuple[int, ...]
    W: int

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.asarray(self.j, dtype=float) / self.W

    def phase(self, sigma) -> float:
        # exact modular reduction keeps cos(k.sigma) independent of the representative
        n = sum(int(a) * int(b) for a, b in zip(self.j, sigma)) % self.W
        return 2.0 * np.pi * n / self.W

    def one_minus_cos(self, sigma) -> float:
        return 1.0 - math.cos(self.phase(sigma))


def dual_grid(d: int, W: int) -> list[WaveVector]:
    return [WaveVector(j, W) for j in itertools.product(range(W), repeat=d)]


@dataclass(frozen=True)
class ModelSpec:
    kernel: StepKernel
    T: int
    p: float
    m: float = 1.0

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError("time horizon T must be >= 1")
        if self.p < 0:
            raise ConfigError("p must be nonnegative")
        if self.p * max(self.kernel.weights) > 1 + 1e-12:
            raise ConfigError("p * max(D) must not exceed 1")
        if not self.m > 0:
            raise ConfigError("m must be positive")

    @classmethod
    def nearest_neighbor(cls, d: int, W: int, T: int, p: float, m: float = 1.0) -> "ModelSpec":
        return cls(StepKernel.nearest_neighbor(d, W), T, p, m)

    @property
    def d(self) -> int:
        return self.kernel.d

    @property
    def W(self) -> int:
        return self.kernel.W

    @property
    def n_sites(self) -> int:
        return self.kernel.n_sites

    @property
    def n_vertices(self) -> int:
        return self.n_sites * (self.T + 1)

    @property
    def n_bonds(self) -> int:
        return self.n_sites * len(self.kernel.offsets) * self.T

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape ``(T+1, W, ..., W)`` of space-time tables."""
        return (self.T + 1,) + (self.W,) * self.d

    def with_p(self, p: float) -> "ModelSpec":
        return replace(self, p=p)

    # -- indexing ---------------------------------------------------------
    def site_index(self, sigma) -> int:
        idx = 0
        for c in sigma:
            idx = idx * self.W + int(c) % self.W
        return idx

    def site_sigma(self, site: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.d):
            out.append(site % self.W)
            site //= self.W
        return tuple(reversed(out))

    def vertex_index(self, v: Vertex) -> int:
        return v.tau * self.n_sites + self.site_index(v.sigma)

    def vertex_at(self, i: int) -> Vertex:
        tau, site = divmod(i, self.n_sites)
        return Vertex(self.site_sigma(site), tau)

    def vertices(self) -> list[Vertex]:
        return [self.vertex_at(i) for i in range(self.n_vertices)]

    def origin(self) -> Vertex:
        return Vertex((0,) * self.d, 0)

    def contains(self, v: Vertex) -> bool:
        return (
            len(v.sigma) == self.d
            and all(0 <= c < self.W for c in v.sigma)
            and 0 <= v.tau <= self.T
        )

    # -- bonds ------------------------------------------------------------
    @cached_property
    def bonds(self) -> tuple[Bond, ...]:
        return tuple(enumerate_bonds(self))

    @cached_property
    def bond_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Tail and head vertex indices of every bond, in bond order."""
        tails = np.array([self.vertex_index(b.under) for b in self.bonds], dtype=np.int64)
        heads = np.array([self.vertex_index(b.over) for b in self.bonds], dtype=np.int64)
        return tails, heads

    @cached_property
    def weight_classes(self) -> tuple[float, ...]:
        """Distinct kernel weights; bonds with equal ``D`` share a class."""
        return tuple(sorted(set(self.kernel.weights)))

    @cached_property
    def bond_class(self) -> np.ndarray:
        cls_of = {w: i for i, w in enumerate(self.weight_classes)}
        per_offset = [cls_of[w] for w in self.kernel.weights]
        return np.array([per_offset[b.index % len(per_offset)] for b in self.bonds], dtype=np.int64)

    def bond_index(self, tail: Vertex, offset) -> int:
        r = tuple(int(c) % self.W for c in offset)
        for k, e in enumerate(self.kernel.offsets):
            if tuple(c % self.W for c in e) == r:
                if not 0 <= tail.tau < self.T:
                    raise ValueError("bond tail outside the time window")
                return self.vertex_index(tail) * len(self.kernel.offsets) + k
        raise ValueError(f"offset {offset} not in the kernel support")

    def bond_between(self, tail: Vertex, head: Vertex) -> Bond:
        if head.tau != tail.tau + 1:
            raise ValueError("bonds join consecutive times")
        off = tuple(h - t for h, t in zip(head.sigma, tail.sigma))
        return self.bonds[self.bond_index(tail, off)]

    def bond_probabilities(self) -> np.ndarray:
        return np.array([q_value(self, b.under, b.over) for b in self.bonds])

    # -- identity ---------------------------------------------------------
    def to_dict(self) -> dict:
        return {"kernel": self.kernel.to_dict(), "T": self.T, "p": self.p, "m": self.m}

    def geometry_dict(self) -> dict:
        """Fields that determine the bond graph and the bond weight classes (not p or m)."""
        return {"kernel": self.kernel.to_dict(), "T": self.T}

    def model_hash(self) -> str:
        return _digest(self.to_dict())

    def geometry_hash(self) -> str:
        return _digest(self.geometry_dict())


def _digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class BondConfig:
    mask: int
    weight: float
    n_bonds: int = field(default=0, compare=False)

    def occupied(self, b: Bond | int) -> bool:
        i = b if isinstance(b, int) else b.index
        return bool((self.mask >> i) & 1)

    def occupied_indices(self) -> list[int]:
        return [i for i in range(self.n_bonds) if (self.mask >> i) & 1]


def q_value(spec: ModelSpec, frm: Vertex, to: Vertex) -> float:
    """Bond occupation probability ``q_p(v; x) = p D(sigma_x - sigma_v)`` for adjacent times."""
    if to.tau != frm.tau + 1:
        return 0.0
    dsig = tuple(a - b for a, b in zip(to.sigma, frm.sigma))
    return spec.p * spec.kernel.D(dsig)


def enumerate_bonds(spec: ModelSpec) -> list[Bond]:
    out = []
    n = len(spec.kernel.offsets)
    for tau in range(spec.T):
        for site in range(spec.n_sites):
            sigma = spec.site_sigma(site)
            tail = Vertex(sigma, tau)
            for k, e in enumerate(spec.kernel.offsets):
                head = Vertex(tuple((a + b) % spec.W for a, b in zip(sigma, e)), tau + 1)
                out.append(Bond(tail, head, (tau * spec.n_sites + site) * n + k))
    return out


def config_weight(mask: int, probs) -> float:
    w = 1.0
    for i, q in enumerate(probs):
        w *= q if (mask >> i) & 1 else 1.0 - q
    return w


def check_bond_budget(spec: ModelSpec, bond_limit: int = DEFAULT_BOND_LIMIT) -> None:
    if spec.n_bonds > bond_limit:
        raise BondBudgetExceeded(
            f"{spec.n_bonds} bonds exceed the enumeration budget of {bond_limit}"
        )


def enumerate_configs(
    spec: ModelSpec,
    bond_limit: int = DEFAULT_BOND_LIMIT,
    start: int = 0,
    stop: int | None = None,
) -> Iterator[BondConfig]:
    """Yield every bond configuration in ``[start, stop)`` with its product-measure weight.

    The full stream (``start=0, stop=None``) visits all ``2**n_bonds`` masks
    exactly once; disjoint index ranges can be consumed by separate workers.
    """
    check_bond_budget(spec, bond_limit)
    n = spec.n_bonds
    probs = spec.bond_probabilities()
    stop = 1 << n if stop is None else min(stop, 1 << n)
    for mask in range(start, stop):
        yield BondConfig(mask, config_weight(mask, probs), n)


# -- plain-text model files ----------------------------------------------

_MODEL_KEYS = {"d", "W", "T", "kernel", "L", "p", "m"}


def parse_model_text(text: str) -> ModelSpec:
    """Parse ``key = value`` lines (``#`` comments) into a :class:`ModelSpec`.

    Keys: ``d``, ``W``, ``T``, ``kernel`` (``nn`` or ``spread-out``), ``L``
    (spread-out range), ``p``, ``m`` (default 1).
    """
    vals: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _MODEL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        vals[key] = val
    try:
        d = int(vals.get("d", "1"))
        W = int(vals["W"])
        T = int(vals["T"])
        p = float(vals["p"])
        m = float(vals.get("m", "1"))
        kind = vals.get("kernel", "nn").lower()
        if kind in ("nn", "nearest-neighbor", "nearest_neighbor"):
            kernel = StepKernel.nearest_neighbor(d, W)
        elif kind in ("spread-out", "spread_out", "spread"):
            kernel = StepKernel.spread_out(d, W, int(vals.get("L", "1")))
        else:
            raise ConfigError(f"unknown kernel {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return ModelSpec(kernel, T, p, m)


def load_model(path: str | Path) -> ModelSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read model file: {exc}") from None
    return parse_model_text(text)


def format_model_text(spec: ModelSpec) -> str:
    k = spec.kernel
    lines = [f"d = {spec.d}", f"W = {spec.W}", f"T = {spec.T}"]
    if k.name == "nn":
        lines.append("kernel = nn")
    elif k.name.startswith("spread-out-L"):
        lines += ["kernel = spread-out", f"L = {k.name.rsplit('L', 1)[1]}"]
    else:
        raise ValueError("custom kernels have no model-file form")
    lines += [f"p = {spec.p!r}", f"m = {spec.m!r}"]
    return "\n".join(lines) + "\n"
