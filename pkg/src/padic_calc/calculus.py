"""Quantization, symbol extraction, composition, adjoints, parametrices.

Everything here is exact at truncation: the ultrametric keeps xi + eta
inside the truncated dual, so the composition formula incurs no
truncation error and quantize/symbol_of invert each other on the nose
(up to rounding).  Adjoint and transpose symbols are *defined* through
the matrix realization; the series formulas of the calculus are then
checked against them as theorems in the test-suite, not used as
definitions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fourier import dft_axis
from .operator_matrix import (
    OperatorMatrix,
    matrix_to_symbol_table,
    schur_sums,
    symbol_table_to_matrix,
)
from .symbols import Symbol


class NotEllipticError(ValueError):
    """The symbol fails the lower bound needed for a parametrix."""


def quantize(sym: Symbol) -> OperatorMatrix:
    """Sample-basis matrix of the pseudo-differential operator of a symbol."""
    return OperatorMatrix(sym.ctx, symbol_table_to_matrix(sym.table, sym.ctx), "sample")


def symbol_of(A: OperatorMatrix) -> Symbol:
    """Associated symbol of an operator matrix (exact round trip with quantize)."""
    entries = A.entries if A.basis == "sample" else A.to_basis("sample").entries
    return Symbol(A.ctx, matrix_to_symbol_table(entries, A.ctx), "full")


def compose_symbols(sym1: Symbol, sym2: Symbol) -> Symbol:
    """Symbol of T_{sigma1} T_{sigma2}; exact at truncation.

    ``sigma(x, xi) = sum_eta sigma1(x, xi+eta) sighat2(eta, xi) chi(eta x)``
    where sighat2 is the x-spectrum of sigma2 per column.
    """
    if sym1.ctx != sym2.ctx:
        raise ValueError("composition across different contexts")
    ctx = sym1.ctx
    N = ctx.N
    sighat2 = dft_axis(sym2.table, ctx, -1, axis=0) / N
    cols = np.arange(N)
    out = np.zeros((N, N), dtype=np.complex128)
    for ue in range(N):
        coeff = sighat2[ue]
        if not np.any(coeff):
            continue
        out += sym1.table[:, (cols + ue) % N] * coeff[None, :] * ctx.character_column(ue)[:, None]
    return Symbol(ctx, out, "full")


def adjoint_symbol(sym: Symbol) -> Symbol:
    """Symbol of the L2 adjoint, through the matrix realization."""
    return symbol_of(quantize(sym).adjoint())


def transpose_symbol(sym: Symbol) -> Symbol:
    """Symbol of the bilinear transpose (no conjugation), via the matrix."""
    return symbol_of(quantize(sym).transpose())


def kernel_table(sym: Symbol) -> np.ndarray:
    """Integral kernel ``K(x, y) = sum_xi sigma(x, xi) chi(xi (x-y))``.

    The operator acts as ``T f(x) = p^-n sum_y K(x, y) f(y)``.
    """
    return symbol_table_to_matrix(sym.table, sym.ctx) * sym.ctx.N


@dataclass
class EllipticityReport:
    """Lower-bound scan |sigma(x, xi)| >= c <xi>^order on norm(xi) >= p^N."""

    order: float
    threshold: int
    constant: float
    shell_mins: np.ndarray  # min of |sigma| / <xi>^order per shell 0..n

    def to_json(self) -> str:
        return json.dumps(
            {
                "order": self.order,
                "threshold": self.threshold,
                "constant": self.constant,
                "shell_mins": self.shell_mins.tolist(),
            }
        )


def ellipticity_report(sym: Symbol, order: float, n_max: int | None = None) -> EllipticityReport | None:
    """Smallest threshold exponent N <= n_max with a positive shell bound.

    Shell 0 is the zero frequency (weight p^0 = 1), so N = 0 demands the
    bound on every mode.  Returns None if no threshold up to ``n_max``
    gives a strictly positive constant.
    """
    ctx = sym.ctx
    if n_max is None:
        n_max = ctx.n
    n_max = min(n_max, ctx.n)
    sh = ctx.shells
    ratios = np.abs(sym.table) / np.power(ctx.weights, order)[None, :]
    shell_mins = np.array(
        [float(ratios[:, sh == j].min()) if np.any(sh == j) else np.inf for j in range(0, ctx.n + 1)]
    )
    for N in range(0, n_max + 1):
        tail = shell_mins[N:]
        if tail.size and tail.min() > 0.0:
            return EllipticityReport(order, N, float(tail.min()), shell_mins)
    return None


@dataclass
class ParametrixReport:
    """Two-sided inverse-modulo-smoothing diagnostics for an elliptic symbol."""

    tau: Symbol
    threshold: int
    r_values: tuple
    residual_norms: dict  # side -> {r: (row_sup, col_sup)}  on the full matrix
    tail_cutoffs: tuple  # restriction exponents l (modes of norm >= p^l)
    tail_norms: dict  # side -> array (len(r_values), len(tail_cutoffs))
    fitted_orders: dict  # side -> {r: decay order of the tail norms in l}
    cut_block_norms: dict  # side -> S_0 norm of the below-threshold block

    def to_json(self) -> str:
        return json.dumps(
            {
                "threshold": self.threshold,
                "r_values": list(self.r_values),
                "residual_norms": {
                    side: {str(r): list(v) for r, v in d.items()} for side, d in self.residual_norms.items()
                },
                "tail_cutoffs": list(self.tail_cutoffs),
                "tail_norms": {side: arr.tolist() for side, arr in self.tail_norms.items()},
                "fitted_orders": {side: {str(r): v for r, v in d.items()} for side, d in self.fitted_orders.items()},
                "cut_block_norms": self.cut_block_norms,
            }
        )


def _decay_order(cutoffs, norms, p, floor=1e-13) -> float:
    """Least-squares decay exponent of ``norms ~ p^(-order * l)``."""
    vals = np.maximum(np.asarray(norms, dtype=float), floor)
    if np.all(vals <= floor):
        return np.inf
    x = np.asarray(cutoffs, dtype=float)
    y = np.log(vals) / np.log(p)
    if x.size < 2:
        return np.nan
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def parametrix(
    sym: Symbol,
    order: float,
    threshold: int,
    r_values: tuple = (0, 1, 2, 3, 4),
) -> ParametrixReport:
    """Cutoff reciprocal parametrix tau = 1/sigma above the threshold.

    tau(x, xi) = 1/sigma(x, xi) for norm(xi) >= p^threshold and 0 below;
    the residuals R1 = T_tau T_sigma - I and R2 = T_sigma T_tau - I are
    formed at matrix level in the frequency basis.  The report carries
    their Schur norms, the norms of the high-mode blocks for a sweep of
    restriction cutoffs, and the fitted decay order of that sweep (the
    finite-level surrogate for a smoothing residual).
    """
    ctx = sym.ctx
    ell = ellipticity_report(sym, order, n_max=threshold)
    if ell is None or ell.threshold > threshold:
        raise NotEllipticError(f"symbol is not elliptic of order {order} at threshold {threshold}")
    high = ctx.norms >= float(ctx.p) ** threshold
    tau_table = np.zeros_like(sym.table)
    tau_table[:, high] = 1.0 / sym.table[:, high]
    tau = Symbol(ctx, tau_table, "full")

    A = quantize(sym).to_basis("frequency").entries
    B = quantize(tau).to_basis("frequency").entries
    eye = np.eye(ctx.N)
    residuals = {"left": B @ A - eye, "right": A @ B - eye}

    cutoffs = tuple(range(threshold, ctx.n))
    residual_norms = {}
    tail_norms = {}
    fitted = {}
    cut_block = {}
    low_idx = np.flatnonzero(~high)
    for side, R in residuals.items():
        residual_norms[side] = {r: schur_sums(R, ctx, r) for r in r_values}
        grid = np.zeros((len(r_values), len(cutoffs)))
        for ci, ell_cut in enumerate(cutoffs):
            sel = np.flatnonzero(ctx.norms >= float(ctx.p) ** ell_cut)
            for ri, r in enumerate(r_values):
                rs, cs = schur_sums(R, ctx, r, row_idx=sel, col_idx=sel)
                grid[ri, ci] = max(rs, cs)
        tail_norms[side] = grid
        fitted[side] = {
            r: _decay_order(cutoffs, grid[ri], ctx.p) if len(cutoffs) >= 2 else np.nan
            for ri, r in enumerate(r_values)
        }
        rs, cs = schur_sums(R, ctx, 0.0, row_idx=low_idx, col_idx=low_idx)
        cut_block[side] = max(rs, cs)
    return ParametrixReport(
        tau=tau,
        threshold=threshold,
        r_values=tuple(r_values),
        residual_norms=residual_norms,
        tail_cutoffs=cutoffs,
        tail_norms=tail_norms,
        fitted_orders=fitted,
        cut_block_norms=cut_block,
    )


@dataclass
class AnalyticCalcReport:
    """Schur norms of quantize(f o sigma) - f(T_sigma), the calculus defect."""

    function: str
    r_values: tuple
    defect_norms: dict  # r -> (row_sup, col_sup)

    def max_defect(self) -> float:
        return max(max(v) for v in self.defect_norms.values())


def analytic_calculus(
    sym: Symbol,
    function: str = "power",
    exponent: int = 2,
    scale: float = 1.0,
    shift: complex = 0.0,
    guard: float = 1e-8,
    r_values: tuple = (0, 1, 2),
) -> tuple[Symbol, AnalyticCalcReport]:
    """Apply an analytic function to the symbol and diagnose the defect.

    Supported: ``power`` (sigma^k vs. the k-th matrix power),
    ``exponential`` (exp(scale*sigma) vs. the matrix exponential) and
    ``reciprocal_shift`` (1/(sigma - shift) vs. the resolvent), the
    latter guarded against near-singularity of the pointwise argument.
    """
    A = quantize(sym).entries
    if function == "power":
        if exponent < 0:
            raise ValueError("power exponent must be a non-negative integer")
        f_table = sym.table**exponent
        fA = np.linalg.matrix_power(A, exponent)
    elif function == "exponential":
        f_table = np.exp(scale * sym.table)
        fA = scipy.linalg.expm(scale * A)
    elif function == "reciprocal_shift":
        gap = np.min(np.abs(sym.table - shift))
        if gap < guard:
            raise ValueError(f"symbol range approaches the shift {shift}: min gap {gap:.3e} < {guard:.1e}")
        f_table = 1.0 / (sym.table - shift)
        fA = np.linalg.inv(A - shift * np.eye(sym.ctx.N))
    else:
        raise ValueError(f"unknown analytic function {function!r}")
    f_sym = Symbol(sym.ctx, f_table, sym.form if sym.form == "multiplier" else "full")
    defect = quantize(f_sym).entries - fA
    Dfreq = OperatorMatrix(sym.ctx, defect, "sample").to_basis("frequency").entries
    report = AnalyticCalcReport(
        function=function,
        r_values=tuple(r_values),
        defect_norms={r: schur_sums(Dfreq, sym.ctx, r) for r in r_values},
    )
    return f_sym, report
