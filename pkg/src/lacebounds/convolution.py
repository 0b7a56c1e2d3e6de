"""Translation-invariant space-time functions and their convolution algebra.

A :class:`SpaceTimeFunction` stores ``f(dsigma, dtau)`` for ``dsigma`` in
``Z_W^d`` and ``0 <= dtau <= T`` as an array of shape ``(T+1, W, ..., W)``;
it is zero for any other time difference.  The two-argument form
``f(v; x)`` is ``f(x - v)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelSpec, WaveVector


@dataclass(frozen=True)
class SpaceTimeFunction:
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.values.ndim < 2:
            raise ValueError("values need a time axis and at least one spatial axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("space-time function values must be finite")

    @property
    def T(self) -> int:
        return self.values.shape[0] - 1

    @property
    def W(self) -> int:
        return self.values.shape[1]

    @property
    def d(self) -> int:
        return self.values.ndim - 1

    def __call__(self, dsigma, dtau: int) -> float:
        if not 0 <= dtau <= self.T:
            return 0.0
        return float(self.values[(dtau,) + tuple(int(c) % self.W for c in dsigma)])

    def between(self, spec: ModelSpec, v, x) -> float:
        """Two-point form ``f(v; x) = f(x - v)`` for lattice vertices."""
        dsig = tuple(a - b for a, b in zip(x.sigma, v.sigma))
        return self(dsig, x.tau - v.tau)

    def __add__(self, other: "SpaceTimeFunction") -> "SpaceTimeFunction":
        _check_compatible(self, other)
        return SpaceTimeFunction(self.values + other.values, f"({self.label}+{other.label})")

    def scaled(self, c: float) -> "SpaceTimeFunction":
        return SpaceTimeFunction(c * self.values, f"{c!r}*{self.label}")

    def vertex_matrix(self) -> np.ndarray:
        """Matrix ``M[u, x] = f(x - u)`` over lattice vertex indices.

        Vertex index is ``tau * W**d + site`` with row-major sites, matching
        :class:`ModelSpec`.
        """
        T, W, d = self.T, self.W, self.d
        ns = W ** d
        nv = ns * (T + 1)
        sig = np.array(np.unravel_index(np.arange(ns), (W,) * d)).T  # (ns, d)
        # diff[u, x] site index of sigma_x - sigma_u
        diff = (sig[None, :, :] - sig[:, None, :]) % W
        dsite = np.ravel_multi_index(tuple(diff[..., i] for i in range(d)), (W,) * d)
        flat = self.values.reshape(T + 1, ns)
        out = np.zeros((nv, nv))
        for tu in range(T + 1):
            for tx in range(tu, T + 1):
                out[tu * ns:(tu + 1) * ns, tx * ns:(tx + 1) * ns] = flat[tx - tu][dsite]
        return out

    def extended(self, tau_lo: int, tau_hi: int) -> np.ndarray:
        """Values on the time-difference window ``[tau_lo, tau_hi]`` (zero outside ``[0, T]``)."""
        out = np.zeros((tau_hi - tau_lo + 1,) + self.values.shape[1:])
        for i, t in enumerate(range(tau_lo, tau_hi + 1)):
            if 0 <= t <= self.T:
                out[i] = self.values[t]
        return out


def _check_compatible(f: SpaceTimeFunction, g: SpaceTimeFunction) -> None:
    if f.values.shape != g.values.shape:
        raise ValueError(f"incompatible shapes {f.values.shape} and {g.values.shape}")


def delta(spec: ModelSpec) -> SpaceTimeFunction:
    v = np.zeros(spec.shape)
    v[(0,) * (spec.d + 1)] = 1.0
    return SpaceTimeFunction(v, "delta")


def q_function(spec: ModelSpec) -> SpaceTimeFunction:
    """``q_p`` as a space-time function: ``p D(dsigma)`` at ``dtau = 1``."""
    v = np.zeros(spec.shape)
    v[1] = spec.p * spec.kernel.as_array()
    return SpaceTimeFunction(v, "q")


def _circular(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros_like(b)
    axes = tuple(range(b.ndim))
    for idx in zip(*np.nonzero(a)):
        out += a[idx] * np.roll(b, idx, axis=axes)
    return out


def convolve(f: SpaceTimeFunction, g: SpaceTimeFunction) -> SpaceTimeFunction:
    """``(f*g)(x) = sum_v f(v) g(x - v)`` with time differences truncated at ``T``."""
    _check_compatible(f, g)
    out = np.zeros_like(g.values)
    for t in range(f.T + 1):
        for s in range(t + 1):
            if np.any(f.values[s]):
                out[t] += _circular(f.values[s], g.values[t - s])
    return SpaceTimeFunction(out, f"{f.label}*{g.label}")


def convolve_all(*fs: SpaceTimeFunction) -> SpaceTimeFunction:
    acc = fs[0]
    for f in fs[1:]:
        acc = convolve(acc, f)
    return acc


def weight_m(f: SpaceTimeFunction, m: float) -> SpaceTimeFunction:
    """Pointwise ``f(x) m^{tau_x}``; a homomorphism of the convolution algebra."""
    if not m > 0:
        raise ValueError("m must be positive")
    powers = float(m) ** np.arange(f.T + 1)
    vals = f.values * powers.reshape((-1,) + (1,) * f.d)
    return SpaceTimeFunction(vals, f"{f.label}^(m={m!r})")


def cos_factor(k: WaveVector, d: int) -> np.ndarray:
    """``1 - cos(k . sigma)`` on ``Z_W^d`` as an array of shape ``(W,)*d``."""
    W = k.W
    idx = np.indices((W,) * d)
    n = sum(int(j) * idx[i] for i, j in enumerate(k.j)) % W
    return 1.0 - np.cos(2.0 * np.pi * n / W)


def cos_weight(f: SpaceTimeFunction, k: WaveVector) -> SpaceTimeFunction:
    if k.W != f.W or len(k.j) != f.d:
        raise ValueError("wave vector does not match the torus")
    fac = cos_factor(k, f.d)
    return SpaceTimeFunction(f.values * fac[None, ...], f"(1-cos)*{f.label}")
