"""Pair kernels and chain contraction for the two-point-function bounds on
``pi^(N)`` and ``Pi^(N)``.

A pair state is an ordered pair ``(u, v)`` of lattice vertices, flattened to
``u * nv + v``.  A :class:`PairKernel` is a matrix over pair states; the
N-fold bounding sums are evaluated as row vector times kernel products,

    sum phi(u1) phi(u1; v1) phi(v1) prod_i K_i(u_i, v_i; u_{i+1}, v_{i+1})

read off at the terminal state ``(x, x)``.  Summation order is fixed: states
in index order, kernels applied left to right.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .convolution import SpaceTimeFunction, convolve, q_function
from .model import ModelSpec, Vertex
from .oracle import TwoPointTable

DEFAULT_MEMORY_BUDGET = 256 * 2 ** 20  # bytes for one dense kernel


@dataclass(frozen=True)
class PairKernel:
    values: np.ndarray   # (nv*nv, nv*nv)
    nv: int
    label: str = ""

    def __call__(self, u: int, v: int, up: int, vp: int) -> float:
        return float(self.values[u * self.nv + v, up * self.nv + vp])

    def at(self, spec: ModelSpec, u: Vertex, v: Vertex, up: Vertex, vp: Vertex) -> float:
        ix = spec.vertex_index
        return self(ix(u), ix(v), ix(up), ix(vp))

    def __add__(self, other: "PairKernel") -> "PairKernel":
        return PairKernel(self.values + other.values, self.nv, f"{self.label}+{other.label}")


def _as_function(phi) -> SpaceTimeFunction:
    if isinstance(phi, TwoPointTable):
        return phi.as_function()
    if isinstance(phi, SpaceTimeFunction):
        return phi
    return SpaceTimeFunction(np.asarray(phi, dtype=float), "phi")


class PairFactors:
    """The line functions entering the kernels, as vertex-pair matrices.

    ``Phi[u, x] = phi(u; x)``, ``A = q*phi``, ``B = q*phi*q*phi``,
    ``C = phi*q*phi``.
    """

    def __init__(self, spec: ModelSpec, phi, memory_budget: int = DEFAULT_MEMORY_BUDGET):
        self.spec = spec
        self.nv = spec.n_vertices
        self.memory_budget = memory_budget
        self.phi = _as_function(phi)
        if self.phi.values.shape != spec.shape:
            raise ValueError("phi table does not match the model")
        q = q_function(spec)
        self.qphi = convolve(q, self.phi)
        self.qphiqphi = convolve(self.qphi, self.qphi)
        self.phiqphi = convolve(self.phi, self.qphi)
        self.Phi = self.phi.vertex_matrix()
        self.A = self.qphi.vertex_matrix()
        self.B = self.qphiqphi.vertex_matrix()
        self.C = self.phiqphi.vertex_matrix()
        nv = self.nv
        self.halving = np.where(np.eye(nv, dtype=bool), 0.5, 1.0).ravel()
        self.origin = spec.vertex_index(spec.origin())

    @property
    def dense(self) -> bool:
        return (self.nv ** 4) * 8 <= self.memory_budget

    # -- kernel columns ----------------------------------------------------
    def columns(self, name: str, cols: np.ndarray) -> np.ndarray:
        """Kernel ``name`` restricted to the pair-state columns ``cols``."""
        nv = self.nv
        up, vp = np.divmod(cols, nv)
        A, B, C, Phi = self.A, self.B, self.C, self.Phi

        def outer(L, R, a, b):
            # rows (u, v): L[u, a] * R[v, b]
            return (L[:, a][:, None, :] * R[:, b][None, :, :]).reshape(nv * nv, len(cols))

        if name == "xi_par":
            return outer(A, A, up, vp)
        if name == "xi_cross":
            return outer(A, A, vp, up)
        if name == "xi":
            return outer(A, A, up, vp) + outer(A, A, vp, up)
        if name == "Xi":
            return self.columns("xi", cols) * (Phi[up, vp] * self.halving[cols])[None, :]
        if name == "xi_half":
            return self.columns("xi", cols) * self.halving[cols][None, :]
        if name == "Xi_tilde":
            return self.columns("xi_half", cols) * Phi.ravel()[:, None]
        if name == "theta_par":
            return outer(A, B, up, vp)
        if name == "theta_cross":
            return outer(A, B, vp, up)
        if name == "Theta":
            th = outer(A, B, up, vp) + outer(A, B, vp, up)
            return th * (Phi[up, vp] * self.halving[cols])[None, :]
        if name == "Theta_prime":
            return outer(A, A, vp, up) * C[up, vp][None, :]
        if name == "Xi_Theta_Theta_prime":
            return (self.columns("Xi", cols) + self.columns("Theta", cols)
                    + self.columns("Theta_prime", cols))
        raise KeyError(name)

    def kernel(self, name: str) -> PairKernel:
        return PairKernel(self.columns(name, np.arange(self.nv ** 2)), self.nv, name)

    @cached_property
    def _dense_cache(self) -> dict:
        return {}

    def apply(self, vec: np.ndarray, name: str, block: int | None = None) -> np.ndarray:
        """``vec @ K_name``; dense when the kernel fits the memory budget, else column blocks."""
        n = self.nv ** 2
        if block is None and self.dense:
            K = self._dense_cache.get(name)
            if K is None:
                K = self._dense_cache[name] = self.columns(name, np.arange(n))
            return vec @ K
        block = block or max(1, self.memory_budget // (8 * n))
        out = np.empty(n)
        for a in range(0, n, block):
            cols = np.arange(a, min(a + block, n))
            out[cols] = vec @ self.columns(name, cols)
        return out

    # -- initial weights ----------------------------------------------------
    def start_phiphiphi(self) -> np.ndarray:
        """``phi(u) phi(u; v) phi(v)`` over pair states."""
        r = self.Phi[self.origin]
        return (r[:, None] * self.Phi * r[None, :]).ravel()

    def start_phiphi(self) -> np.ndarray:
        """``phi(u) phi(v)`` over pair states."""
        r = self.Phi[self.origin]
        return np.outer(r, r).ravel()

    def chain(self, start: np.ndarray, names: list[str], block: int | None = None) -> np.ndarray:
        vec = start
        for name in names:
            vec = self.apply(vec, name, block)
        return vec

    def terminal(self, vec: np.ndarray) -> np.ndarray:
        """Entries at ``(x, x)`` reshaped to the lattice shape."""
        nv = self.nv
        return vec[np.arange(nv) * (nv + 1)].reshape(self.spec.shape)


def _factors(spec, phi, factors: PairFactors | None) -> PairFactors:
    return factors if factors is not None else PairFactors(spec, phi)


def xi_parallel(spec: ModelSpec, phi) -> PairKernel:
    """``(q*phi)(u; u') (q*phi)(v; v')``."""
    return PairFactors(spec, phi).kernel("xi_par")


def xi_cross(spec: ModelSpec, phi) -> PairKernel:
    """``(q*phi)(u; v') (q*phi)(v; u')``."""
    return PairFactors(spec, phi).kernel("xi_cross")


def Xi(spec: ModelSpec, phi) -> PairKernel:
    return PairFactors(spec, phi).kernel("Xi")


def Xi_tilde(spec: ModelSpec, phi) -> PairKernel:
    return PairFactors(spec, phi).kernel("Xi_tilde")


def Theta(spec: ModelSpec, phi) -> PairKernel:
    return PairFactors(spec, phi).kernel("Theta")


def Theta_prime(spec: ModelSpec, phi) -> PairKernel:
    return PairFactors(spec, phi).kernel("Theta_prime")


def pi0_bounds(spec: ModelSpec, phi, factors: PairFactors | None = None) -> np.ndarray:
    """``delta_{x,o} + (q*phi)(x)^2`` for every lattice ``x``."""
    f = _factors(spec, phi, factors)
    out = f.qphi.values ** 2
    out[(0,) * (spec.d + 1)] += 1.0
    return out


def pi0_bound(spec: ModelSpec, phi, x: Vertex) -> float:
    return float(pi0_bounds(spec, phi)[(x.tau,) + tuple(x.sigma)])


def pi_chain_bounds(spec: ModelSpec, phi, N: int, factors: PairFactors | None = None,
                    block: int | None = None) -> np.ndarray:
    """Chain bound on ``pi^(N)(x)`` for every ``x`` (``N >= 1``)."""
    if N < 1:
        raise ValueError("the chain bound needs N >= 1")
    f = _factors(spec, phi, factors)
    return f.terminal(f.chain(f.start_phiphiphi(), ["Xi"] * N, block))


def pi_chain_bound(spec: ModelSpec, phi, N: int, x: Vertex) -> float:
    return float(pi_chain_bounds(spec, phi, N)[(x.tau,) + tuple(x.sigma)])


def pi_chain_bounds_rewr(spec: ModelSpec, phi, N: int, j: int | None = None,
                         halve_middle: bool = True,
                         factors: PairFactors | None = None) -> np.ndarray:
    """Reorganized evaluations of the chain bound.

    ``j=None``: ``phi(u1) phi(v1) prod Xi_tilde``.  ``1 <= j <= N``: ``Xi`` up
    to step ``j-1``, the bare pair ``xi_par + xi_cross`` at step ``j``, then
    ``Xi_tilde``.  With ``halve_middle`` the middle factor keeps its
    ``1/2^{delta}`` at coincident endpoints, which makes every ordering equal
    to the ``Xi`` chain; without it the result is an upper bound of it.
    """
    if N < 1:
        raise ValueError("the chain bound needs N >= 1")
    f = _factors(spec, phi, factors)
    if j is None:
        return f.terminal(f.chain(f.start_phiphi(), ["Xi_tilde"] * N))
    if not 1 <= j <= N:
        raise ValueError("split position must satisfy 1 <= j <= N")
    mid = "xi_half" if halve_middle else "xi"
    names = ["Xi"] * (j - 1) + [mid] + ["Xi_tilde"] * (N - j)
    return f.terminal(f.chain(f.start_phiphiphi(), names))


def pi_chain_bound_rewr(spec: ModelSpec, phi, N: int, x: Vertex, j: int | None = None,
                        halve_middle: bool = True) -> float:
    vals = pi_chain_bounds_rewr(spec, phi, N, j, halve_middle)
    return float(vals[(x.tau,) + tuple(x.sigma)])


def Pi_chain_bounds(spec: ModelSpec, phi, N: int, factors: PairFactors | None = None,
                    per_j: bool = False):
    """Bound on ``Pi^(N)(x)``: sum over ``j`` of the ``Xi`` chain with the
    ``j``-th kernel replaced by ``Xi + Theta + Theta'``."""
    if N < 1:
        raise ValueError("the chain bound needs N >= 1")
    f = _factors(spec, phi, factors)
    terms = []
    for j in range(1, N + 1):
        names = ["Xi"] * (j - 1) + ["Xi_Theta_Theta_prime"] + ["Xi"] * (N - j)
        terms.append(f.terminal(f.chain(f.start_phiphiphi(), names)))
    total = np.sum(terms, axis=0)
    return (total, np.array(terms)) if per_j else total


def Pi_chain_bound(spec: ModelSpec, phi, N: int, x: Vertex) -> float:
    return float(Pi_chain_bounds(spec, phi, N)[(x.tau,) + tuple(x.sigma)])
