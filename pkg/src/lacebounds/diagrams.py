"""Scalar diagram functionals built from the two-point function, and the
closed-form bounds on weighted sums of the expansion coefficients.

Notation: ``a = q*phi``, ``f^(m)(x) = f(x) m^{tau_x}``, and ``mq*phi^(m)``
equals ``(q*phi)^(m)``.  Every diagram has the shape

    sup_x sum_v A(v) B(v - x)

with ``v`` over the lattice vertices.  The supremum over ``x`` runs over all
spatial offsets and over time offsets ``-T <= tau_x <= T`` (``-2T..2T`` for
both free vertices of H): the functions are translation invariant and vanish
for time differences outside ``[0, T]``, so this window contains every ``x``
that contributes.  ``lattice_only=True`` restricts the free vertices to the
lattice itself.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .convolution import SpaceTimeFunction, convolve, cos_weight, q_function, weight_m
from .model import ModelSpec, WaveVector, dual_grid


def _phi_function(phi) -> SpaceTimeFunction:
    if isinstance(phi, SpaceTimeFunction):
        return phi
    if hasattr(phi, "as_function"):
        return phi.as_function()
    return SpaceTimeFunction(np.asarray(phi, dtype=float), "phi")


class Lines:
    """The convolution products that appear as diagram lines."""

    def __init__(self, spec: ModelSpec, phi):
        self.spec = spec
        self.phi = _phi_function(phi)
        q = q_function(spec)
        self.qphi = convolve(q, self.phi)
        self.qphiphi = convolve(self.qphi, self.phi)
        self.qphiphiphi = convolve(self.qphiphi, self.phi)
        self.qphiqphi = convolve(self.qphi, self.qphi)
        self.phiqphi = convolve(self.phi, self.qphi)
        self.phiphi = convolve(self.phi, self.phi)

    def mqphi(self, m: float) -> SpaceTimeFunction:
        """``mq * phi^(m)``."""
        return weight_m(self.qphi, m)


def correlation_table(A: SpaceTimeFunction, B: SpaceTimeFunction) -> np.ndarray:
    """``C[t + T, sigma] = sum_v A(v) B(v - x)`` for ``x = (sigma, t)``, ``-T <= t <= T``."""
    T, d = A.T, A.d
    W = A.W
    axes = tuple(range(1, d + 1))
    out = np.zeros((2 * T + 1,) + (W,) * d)
    for i, t in enumerate(range(-T, T + 1)):
        Bt = B.extended(-t, T - t)  # Bt[tau_v] = B(tau_v - t)
        if not np.any(Bt):
            continue
        for shift in itertools.product(range(W), repeat=d):
            # B(sigma_v - sigma) as a function of sigma_v
            rolled = np.roll(Bt, shift, axis=axes)
            out[(i,) + shift] = float(np.sum(A.values * rolled))
    return out


def sup_correlation(A: SpaceTimeFunction, B: SpaceTimeFunction, lattice_only: bool = False) -> float:
    C = correlation_table(A, B)
    if lattice_only:
        C = C[A.T:]
    return float(C.max())


def triangle(spec: ModelSpec, phi, m: float = 1.0, lines: Lines | None = None,
             lattice_only: bool = False) -> float:
    """``sup_x sum_v (q*phi*phi)(v) (mq*phi^(m))(x; v)``."""
    L = lines or Lines(spec, phi)
    return sup_correlation(L.qphiphi, L.mqphi(m), lattice_only)


def bubble_w(spec: ModelSpec, phi, m: float, k: WaveVector, lines: Lines | None = None,
             branch: str | None = None, lattice_only: bool = False) -> float:
    """Cosine-weighted bubble.

    For ``m < 1`` the cosine factor and the unweighted line sit on ``v`` and
    the m-weighted line runs from ``x``; for ``m >= 1`` the two lines swap.
    ``branch`` ("lt1" or "ge1") forces one form regardless of ``m``.
    """
    L = lines or Lines(spec, phi)
    branch = branch or ("lt1" if m < 1 else "ge1")
    if branch == "lt1":
        A, B = cos_weight(L.qphi, k), L.mqphi(m)
    elif branch == "ge1":
        A, B = cos_weight(L.mqphi(m), k), L.qphi
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return sup_correlation(A, B, lattice_only)


def triangle_tilde(spec: ModelSpec, phi, lines: Lines | None = None,
                   lattice_only: bool = False) -> float:
    """``sup_x sum_v (q*phi*q*phi)(v) (q*phi)(x; v)``."""
    L = lines or Lines(spec, phi)
    return sup_correlation(L.qphiqphi, L.qphi, lattice_only)


def square(spec: ModelSpec, phi, m: float = 1.0, lines: Lines | None = None,
           lattice_only: bool = False) -> float:
    """``sup_x sum_v (q*phi*phi*phi)(v) (mq*phi^(m))(x; v)``."""
    L = lines or Lines(spec, phi)
    return sup_correlation(L.qphiphiphi, L.mqphi(m), lattice_only)


def h_table(spec: ModelSpec, phi, lines: Lines | None = None,
            lattice_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """The H-shaped sum for every pair of free vertices.

    ``H(x, y) = sum_{u,v,w} a(u) (phi*q*phi)(u; v) a(x; v) a(u; w) a(v; y + w)``
    with ``a = q*phi``.  Returns ``(table, taus)`` where ``table`` has axes
    ``(tau_x, sigma_x..., tau_y, sigma_y...)`` and ``taus`` lists the time
    offsets of both axes: ``-2T..2T``, or ``0..T`` with ``lattice_only``, which
    also keeps ``y + w`` inside the lattice.
    """
    L = lines or Lines(spec, phi)
    ns, T, d, W = spec.n_sites, spec.T, spec.d, spec.W
    A = L.qphi.vertex_matrix()
    Bm = L.phiqphi.vertex_matrix()
    o = spec.vertex_index(spec.origin())
    # M[v, w] = sum_u a(u) b(u; v) a(u; w)
    M = np.einsum("u,uv,uw->vw", A[o], Bm, A)

    taus = np.arange(0, T + 1) if lattice_only else np.arange(-2 * T, 2 * T + 1)
    sig = np.array([spec.site_sigma(s) for s in range(ns)], dtype=np.int64).reshape(ns, d)
    vt = np.repeat(np.arange(T + 1), ns)          # time of vertex index
    vs = np.tile(np.arange(ns), T + 1)            # site of vertex index
    ft = np.repeat(taus, ns)                      # free-vertex grid: it * ns + site
    fs = np.tile(np.arange(ns), len(taus))

    def a_of(dt, dsig):
        ok = (dt >= 0) & (dt <= T)
        dsig = dsig % W
        idx = (np.clip(dt, 0, T),) + tuple(dsig[..., i] for i in range(d))
        return np.where(ok, L.qphi.values[idx], 0.0)

    # X[v, x] = a(v - x)
    X = a_of(vt[:, None] - ft[None, :], sig[vs][:, None, :] - sig[fs][None, :, :])
    # G[v, w, y] = a(y + w - v)
    G = a_of(ft[None, None, :] + vt[None, :, None] - vt[:, None, None],
             sig[fs][None, None, :, :] + sig[vs][None, :, None, :] - sig[vs][:, None, None, :])
    if lattice_only:
        G = G * ((vt[:, None] + ft[None, :]) <= T)[None, :, :]
    H = np.einsum("vw,vx,vwy->xy", M, X, G)
    shape = (len(taus),) + (W,) * d
    return H.reshape(shape + shape), taus


def h_diagram(spec: ModelSpec, phi, lines: Lines | None = None, lattice_only: bool = False) -> float:
    """``sup_{x,y}`` of :func:`h_table`."""
    H, _ = h_table(spec, phi, lines, lattice_only)
    return float(H.max())


@dataclass(frozen=True)
class DiagramSet:
    m: float
    T: float
    T_tilde: float
    S: float
    H: float
    W: dict = field(default_factory=dict)   # dual index tuple -> W(k, m)
    model_hash: str = ""

    def W_at(self, k: WaveVector) -> float:
        return self.W[tuple(k.j)]

    def to_dict(self) -> dict:
        return {
            "m": self.m, "T": self.T, "T_tilde": self.T_tilde, "S": self.S, "H": self.H,
            "W": [{"j": list(j), "value": v} for j, v in sorted(self.W.items())],
            "model_hash": self.model_hash,
        }


def compute_diagrams(spec: ModelSpec, phi, m: float = 1.0, lines: Lines | None = None) -> DiagramSet:
    L = lines or Lines(spec, phi)
    W = {tuple(k.j): bubble_w(spec, phi, m, k, L) for k in dual_grid(spec.d, spec.W)}
    return DiagramSet(
        m=float(m),
        T=triangle(spec, phi, m, L),
        T_tilde=triangle_tilde(spec, phi, L),
        S=square(spec, phi, m, L),
        H=h_diagram(spec, phi, L),
        W=W,
        model_hash=spec.model_hash(),
    )


# -- closed-form bounds ------------------------------------------------------

def lemma2_pi_bound(N: int, ell: int, diag: DiagramSet, sharp: bool = False) -> float:
    """Bound on ``sum_{tau_x >= 1} tau_x^ell pi^(N)(x) m^{tau_x}``.

    ``(N+1)^ell (1+2T)(2T)^{max(N-1,0)}`` times ``T`` (``ell <= 1``) or ``S``
    (``ell = 2``).  ``sharp`` (``N = 0`` only) drops the prefactors.
    """
    if ell not in (0, 1, 2):
        raise ValueError("ell must be 0, 1 or 2")
    if N < 0:
        raise ValueError("N must be >= 0")
    tail = diag.T if ell <= 1 else diag.S
    if sharp:
        if N != 0:
            raise ValueError("the sharp form applies to N = 0 only")
        return tail
    return (N + 1) ** ell * (1 + 2 * diag.T) * (2 * diag.T) ** max(N - 1, 0) * tail


def lemma2_cos_bound(N: int, diag: DiagramSet, k: WaveVector, sharp: bool = False) -> float:
    """Bound on ``sum_x (1 - cos(k.sigma_x)) pi^(N)(x) m^{tau_x}``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    w = diag.W_at(k)
    if sharp:
        if N != 0:
            raise ValueError("the sharp form applies to N = 0 only")
        return w
    return 3 * (N + 1) ** 2 * (1 + 2 * diag.T) * (2 * diag.T) ** max(N - 1, 0) * w


def lemma2_Pi_bound(N: int, diag: DiagramSet) -> float:
    """Bound on ``sum_x Pi^(N)(x)``; ``diag`` must be evaluated at ``m = 1``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if diag.m != 1.0:
        raise ValueError("the Pi bound uses the m = 1 diagrams")
    T = diag.T
    return N * (1 + 2 * T) * ((T + diag.T_tilde) * (2 * T) ** (N - 1)
                              + diag.H * (2 * T) ** max(N - 2, 0))
