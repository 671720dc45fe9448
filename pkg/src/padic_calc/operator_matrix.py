"""Dense p^n x p^n realizations of operators, in either basis.

Sample basis: the matrix acts on sample vectors by plain matmul and
already contains the Haar weight, i.e. ``(T f)[x] = sum_y A[x, y] f[y]``.
Frequency basis: the matrix acts on coefficient vectors of the dual
group.  Conversion is conjugation by the transform pair and is exact up
to rounding.

Binary layout (documented interface): 8-byte magic ``PADICOP1``, uint32
p, uint32 n, uint8 basis tag (0 = sample, 1 = frequency), all
little-endian, followed by the row-major entries as interleaved
(re, im) float64 little-endian pairs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import TruncationContext
from .fourier import LevelFunction, SpectralFunction, dft_axis

_MAGIC = b"PADICOP1"
_BASIS_TAGS = {"sample": 0, "frequency": 1}
_TAG_BASIS = {v: k for k, v in _BASIS_TAGS.items()}


@dataclass
class OperatorMatrix:
    ctx: TruncationContext
    entries: np.ndarray
    basis: str = "sample"

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        N = self.ctx.N
        if self.entries.shape != (N, N):
            raise ValueError(f"expected a {N}x{N} matrix, got {self.entries.shape}")
        if self.basis not in _BASIS_TAGS:
            raise ValueError(f"basis must be 'sample' or 'frequency', got {self.basis!r}")

    def to_basis(self, basis: str) -> "OperatorMatrix":
        if basis not in _BASIS_TAGS:
            raise ValueError(f"unknown basis {basis!r}")
        if basis == self.basis:
            return OperatorMatrix(self.ctx, self.entries.copy(), self.basis)
        if self.basis == "sample":
            # M = F A F^{-1}: synthesis along columns, analysis along rows
            tmp = dft_axis(self.entries, self.ctx, +1, axis=1)
            M = dft_axis(tmp, self.ctx, -1, axis=0) / self.ctx.N
            return OperatorMatrix(self.ctx, M, "frequency")
        tmp = dft_axis(self.entries, self.ctx, -1, axis=1)
        A = dft_axis(tmp, self.ctx, +1, axis=0) / self.ctx.N
        return OperatorMatrix(self.ctx, A, "sample")

    def apply(self, f):
        """Apply to a LevelFunction / SpectralFunction / bare vector."""
        if isinstance(f, LevelFunction):
            if self.basis != "sample":
                raise ValueError("frequency-basis matrix applied to sample data")
            return LevelFunction(self.ctx, self.entries @ f.values)
        if isinstance(f, SpectralFunction):
            if self.basis != "frequency":
                raise ValueError("sample-basis matrix applied to spectral data")
            return SpectralFunction(self.ctx, self.entries @ f.coeffs)
        return self.entries @ np.asarray(f, dtype=np.complex128)

    def matmul(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.ctx != other.ctx:
            raise ValueError("operator product across different contexts")
        if self.basis != other.basis:
            raise ValueError("operator product across different bases")
        return OperatorMatrix(self.ctx, self.entries @ other.entries, self.basis)

    def adjoint(self) -> "OperatorMatrix":
        """Conjugate transpose (the Haar weights are uniform, so no rescale)."""
        return OperatorMatrix(self.ctx, self.entries.conj().T.copy(), self.basis)

    def transpose(self) -> "OperatorMatrix":
        """Plain transpose: the adjoint of the bilinear (unconjugated) pairing."""
        return OperatorMatrix(self.ctx, self.entries.T.copy(), self.basis)

    @staticmethod
    def identity(ctx: TruncationContext, basis: str = "sample") -> "OperatorMatrix":
        return OperatorMatrix(ctx, np.eye(ctx.N, dtype=np.complex128), basis)

    def save_binary(self, path) -> None:
        path = Path(path)
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IIB", self.ctx.p, self.ctx.n, _BASIS_TAGS[self.basis]))
            inter = np.empty((self.ctx.N, self.ctx.N, 2), dtype="<f8")
            inter[..., 0] = self.entries.real
            inter[..., 1] = self.entries.imag
            fh.write(inter.tobytes())

    @staticmethod
    def load_binary(path) -> "OperatorMatrix":
        raw = Path(path).read_bytes()
        if raw[:8] != _MAGIC:
            raise ValueError("not an operator-matrix file (bad magic)")
        p, n, tag = struct.unpack("<IIB", raw[8:17])
        ctx = TruncationContext(p, n)
        data = np.frombuffer(raw[17:], dtype="<f8").reshape(ctx.N, ctx.N, 2)
        return OperatorMatrix(ctx, data[..., 0] + 1j * data[..., 1], _TAG_BASIS[int(tag)])


def symbol_table_to_matrix(table: np.ndarray, ctx: TruncationContext) -> np.ndarray:
    """Sample-basis entries of the operator with symbol table sigma[x, u].

    ``A[x, y] = p^-n sum_u sigma(x, u) chi(u (x - y))``: synthesize each
    row and gather it along the shifted diagonal.
    """
    B = dft_axis(np.asarray(table, dtype=np.complex128), ctx, +1, axis=1)
    x = np.arange(ctx.N)
    idx = (x[:, None] - x[None, :]) % ctx.N
    return np.take_along_axis(B, idx, axis=1) / ctx.N


def matrix_to_symbol_table(entries: np.ndarray, ctx: TruncationContext) -> np.ndarray:
    """Symbol table of a sample-basis matrix: test against every character.

    ``sigma(x, u) = conj(chi(u x)) (A chi_u)(x)``, evaluated for all
    columns at once through one batched synthesis transform.
    """
    applied = dft_axis(np.asarray(entries, dtype=np.complex128), ctx, +1, axis=1)
    x = np.arange(ctx.N)
    conj_char = ctx.roots[(-np.outer(x, x)) % ctx.N]
    return applied * conj_char


def schur_sums(
    entries: np.ndarray,
    ctx: TruncationContext,
    r: float,
    m: float = 0.0,
    row_idx: np.ndarray | None = None,
    col_idx: np.ndarray | None = None,
) -> tuple[float, float]:
    """Weighted row/column sums of a frequency-basis matrix M[eta, xi].

    Returns ``(sup_xi <xi>^-m sum_eta |M| <eta-xi>^r,
              sup_eta <eta>^-m sum_xi |M| <eta-xi>^r)`` where the offset
    eta - xi is taken in the dual group.  ``row_idx`` / ``col_idx``
    restrict both the matrix and the index bookkeeping to a sub-block.
    """
    entries = np.asarray(entries)
    rows = np.arange(ctx.N) if row_idx is None else np.asarray(row_idx)
    cols = np.arange(ctx.N) if col_idx is None else np.asarray(col_idx)
    if rows.size == 0 or cols.size == 0:
        return 0.0, 0.0
    block = np.abs(entries[np.ix_(rows, cols)])
    offs = (rows[:, None] - cols[None, :]) % ctx.N
    weighted = block * np.power(ctx.weights[offs], r)
    row_sup = float(np.max(weighted.sum(axis=0) * np.power(ctx.weights[cols], -m)))
    col_sup = float(np.max(weighted.sum(axis=1) * np.power(ctx.weights[rows], -m)))
    return row_sup, col_sup
