"""Exact Fourier analysis on the truncated p-adic integers.

Conventions: the forward transform is the analysis integral against the
normalized Haar measure, ``F[u] = p^-n sum_x f[x] conj(chi(u x))``, and the
inverse is the bare synthesis sum ``f[x] = sum_u F[u] chi(u x)``.  With
this pairing Plancherel reads ``sum_u |F[u]|^2 = p^-n sum_x |f[x]|^2``
with no stray constants.

A level-n function is genuinely locally constant, so its coefficients on
frequencies of norm > p^n vanish identically and the finite transform is
exact, not an approximation.

The fast path is a decimation-in-time recursion specialized to radix p;
the naive O(N^2) sum is kept behind a flag as an always-available oracle.
All twiddle factors are looked up in the context's root-of-unity table
with integer index arithmetic, never accumulated multiplicatively.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import TruncationContext


def _dft_recursive(a: np.ndarray, p: int, roots: np.ndarray, sign: int) -> np.ndarray:
    """Radix-p transform ``sum_x a[..., x] e(sign * u x / N)`` on the last axis."""
    N = a.shape[-1]
    if N == 1:
        return a.astype(np.complex128, copy=True)
    L = len(roots)
    M = N // p
    # decimate in time: row j of `sub` holds samples x = p*t + j
    sub = np.moveaxis(a.reshape(a.shape[:-1] + (M, p)), -1, -2)
    F = _dft_recursive(sub, p, roots, sign)
    stride = L // N
    jm = np.outer(np.arange(p, dtype=np.int64), np.arange(M, dtype=np.int64))
    twiddle = roots[(sign * jm * stride) % L]
    cj = np.outer(np.arange(p, dtype=np.int64), np.arange(p, dtype=np.int64))
    butterfly = roots[(sign * cj * (L // p)) % L]
    G = F * twiddle
    X = np.einsum("cj,...jm->...cm", butterfly, G)
    return X.reshape(a.shape)


def _dft_naive(a: np.ndarray, p: int, roots: np.ndarray, sign: int) -> np.ndarray:
    N = a.shape[-1]
    L = len(roots)
    stride = L // N
    x = np.arange(N, dtype=np.int64)
    W = roots[(sign * np.outer(x, x) * stride) % L]
    return a @ W  # W symmetric, so rows/columns interchangeable


def dft(a: np.ndarray, ctx: TruncationContext, sign: int, naive: bool = False) -> np.ndarray:
    """Unnormalized transform along the last axis of a batched array.

    ``sign=-1`` is the analysis orientation, ``sign=+1`` the synthesis one.
    """
    if sign not in (-1, 1):
        raise ValueError(f"sign must be -1 or +1, got {sign}")
    a = np.asarray(a, dtype=np.complex128)
    if a.shape[-1] != ctx.N:
        raise ValueError(f"last axis has length {a.shape[-1]}, context wants {ctx.N}")
    if ctx.N == 1:
        return a.copy()
    if naive:
        return _dft_naive(a, ctx.p, ctx.roots, sign)
    return _dft_recursive(a, ctx.p, ctx.roots, sign)


def dft_axis(a: np.ndarray, ctx: TruncationContext, sign: int, axis: int, naive: bool = False) -> np.ndarray:
    """Same transform applied along an arbitrary axis."""
    moved = np.moveaxis(np.asarray(a, dtype=np.complex128), axis, -1)
    return np.moveaxis(dft(moved, ctx, sign, naive=naive), -1, axis)


@dataclass
class LevelFunction:
    """Complex function on Z_p, locally constant at level n (p^n samples)."""

    ctx: TruncationContext
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.ctx.N,):
            raise ValueError(f"expected {self.ctx.N} samples, got shape {self.values.shape}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "p": self.ctx.p,
                "n": self.ctx.n,
                "kind": "point",
                "re": self.values.real.tolist(),
                "im": self.values.imag.tolist(),
            }
        )

    @staticmethod
    def from_json(text: str) -> "LevelFunction":
        doc = json.loads(text)
        if doc.get("kind") != "point":
            raise ValueError(f"expected kind 'point', got {doc.get('kind')!r}")
        ctx = TruncationContext(doc["p"], doc["n"])
        return LevelFunction(ctx, np.asarray(doc["re"]) + 1j * np.asarray(doc["im"]))


@dataclass
class SpectralFunction:
    """Fourier coefficients indexed by the truncated dual group."""

    ctx: TruncationContext
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (self.ctx.N,):
            raise ValueError(f"expected {self.ctx.N} coefficients, got shape {self.coeffs.shape}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "p": self.ctx.p,
                "n": self.ctx.n,
                "kind": "spectral",
                "re": self.coeffs.real.tolist(),
                "im": self.coeffs.imag.tolist(),
            }
        )

    @staticmethod
    def from_json(text: str) -> "SpectralFunction":
        doc = json.loads(text)
        if doc.get("kind") != "spectral":
            raise ValueError(f"expected kind 'spectral', got {doc.get('kind')!r}")
        ctx = TruncationContext(doc["p"], doc["n"])
        return SpectralFunction(ctx, np.asarray(doc["re"]) + 1j * np.asarray(doc["im"]))


def forward(f: LevelFunction, naive: bool = False) -> SpectralFunction:
    """Analysis transform with the Haar normalization p^-n."""
    return SpectralFunction(f.ctx, dft(f.values, f.ctx, -1, naive=naive) / f.ctx.N)


def inverse(F: SpectralFunction, naive: bool = False) -> LevelFunction:
    """Synthesis sum; exact inverse of :func:`forward`."""
    return LevelFunction(F.ctx, dft(F.coeffs, F.ctx, +1, naive=naive))


def l2_norm(f: LevelFunction) -> float:
    """Haar-normalized L2 norm sqrt(p^-n sum |f|^2)."""
    return float(np.sqrt(np.mean(np.abs(f.values) ** 2)))


def spectral_l2_norm(F: SpectralFunction) -> float:
    """l2 norm of the coefficient sequence (the Plancherel partner)."""
    return float(np.sqrt(np.sum(np.abs(F.coeffs) ** 2)))


def inner_product(f: LevelFunction, g: LevelFunction) -> complex:
    """Haar inner product ``p^-n sum f conj(g)``."""
    if f.ctx != g.ctx:
        raise ValueError("inner product across different contexts")
    return complex(np.mean(f.values * np.conj(g.values)))


def refine(f: LevelFunction, n2: int) -> LevelFunction:
    """Re-sample a level-n function at a finer level n2 > n.

    The function does not change: new sample y takes the value of the
    coset y mod p^n.  Its spectrum is the old one re-indexed (u -> u *
    p^(n2-n)) and padded with zeros on the new frequencies.
    """
    if n2 <= f.ctx.n:
        raise ValueError(f"refinement level {n2} must exceed current level {f.ctx.n}")
    fine = TruncationContext(f.ctx.p, n2)
    return LevelFunction(fine, f.values[np.arange(fine.N) % f.ctx.N])
