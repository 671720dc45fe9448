"""Sobolev norms, operator bounds, eigen-decompositions, counting, heat flow."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .calculus import NotEllipticError, ellipticity_report, quantize
from .core import ConsistencyError, ResourceCapError, TruncationContext
from .fourier import LevelFunction, SpectralFunction, forward
from .operator_matrix import OperatorMatrix
from .symbols import Symbol
from .vladimirov import VladimirovSpec, multiplier_table

DENSE_EIG_CAP = 4096


@dataclass(frozen=True)
class SobolevScale:
    """Weight exponent s of the H^s scale and its embedding constant."""

    s: float

    def embedding_constant(self, ctx: TruncationContext) -> tuple[float, float, float]:
        """(constant, level_part, tail): sqrt of sum <xi>^-2s over the dual.

        The level part sums the p^n frequencies actually represented
        (shell m holds p^m - p^(m-1) of them); the tail adds the
        closed-form geometric remainder of the infinite dual, so the
        truncation never under-reports the constant.  Finite only for
        s > 1/2.
        """
        if self.s <= 0.5:
            raise ValueError(f"embedding constant diverges for s <= 1/2, got s={self.s}")
        p = float(ctx.p)
        ratio = p ** (1.0 - 2.0 * self.s)
        shells = np.arange(1, ctx.n + 1)
        level_part = 1.0 + (1.0 - 1.0 / p) * float(np.sum(ratio**shells))
        tail = (1.0 - 1.0 / p) * ratio ** (ctx.n + 1) / (1.0 - ratio)
        return float(np.sqrt(level_part + tail)), level_part, tail


def sobolev_norm(f, s: float) -> float:
    """``|| <xi>^s fhat ||_l2``; accepts point or spectral data."""
    if isinstance(f, LevelFunction):
        coeffs = forward(f).coeffs
        ctx = f.ctx
    elif isinstance(f, SpectralFunction):
        coeffs = f.coeffs
        ctx = f.ctx
    else:
        raise TypeError(f"expected LevelFunction or SpectralFunction, got {type(f)!r}")
    return float(np.sqrt(np.sum(np.power(ctx.weights, 2.0 * s) * np.abs(coeffs) ** 2)))


@dataclass
class EmbeddingReport:
    s: float
    constant: float
    level_part: float
    tail: float
    sup_norm: float
    sobolev: float
    ratio: float  # sup_norm / (constant * sobolev); <= 1 when the bound holds
    passed: bool


def embedding_check(f: LevelFunction, s: float) -> EmbeddingReport:
    """Check ``max|f| <= C_s ||f||_{H^s}`` and report the observed ratio."""
    constant, level_part, tail = SobolevScale(s).embedding_constant(f.ctx)
    sup = float(np.max(np.abs(f.values)))
    hs = sobolev_norm(f, s)
    bound = constant * hs
    ratio = sup / bound if bound > 0 else 0.0
    return EmbeddingReport(
        s=s,
        constant=constant,
        level_part=level_part,
        tail=tail,
        sup_norm=sup,
        sobolev=hs,
        ratio=ratio,
        passed=bool(sup <= bound * (1.0 + 1e-12)),
    )


def op_norm_sobolev(A: OperatorMatrix, s: float, m: float) -> float:
    """Spectral norm of J_s A J_-(s+m): the H^(s+m) -> H^s operator norm."""
    M = A.entries if A.basis == "frequency" else A.to_basis("frequency").entries
    w = A.ctx.weights
    conj = np.power(w, s)[:, None] * M * np.power(w, -(s + m))[None, :]
    return float(np.linalg.norm(conj, 2))


@dataclass
class NormEquivalenceReport:
    """Observed sandwich constants C, D of the hypoelliptic norm equivalence."""

    s: float
    order_upper: float
    order_lower: float
    best_c: float  # largest C with C ||f||_{H^{s+n}} <= ||Tf||_{H^s} + ||f||_{H^s}
    best_d: float  # smallest D with ||Tf||_{H^s} + ||f||_{H^s} <= D ||f||_{H^{s+m}}
    trials: int


def norm_equivalence_check(
    sym: Symbol,
    s: float,
    order_upper: float,
    order_lower: float,
    threshold: int = 1,
    trials: int = 64,
    rng: np.random.Generator | None = None,
) -> NormEquivalenceReport:
    """Estimate the two-sided Sobolev sandwich over random functions."""
    ell = ellipticity_report(sym, order_lower, n_max=threshold)
    if ell is None or ell.threshold > threshold:
        raise NotEllipticError(
            f"symbol is not hypoelliptic of order {order_lower} at threshold {threshold}"
        )
    rng = rng or np.random.default_rng(0)
    ctx = sym.ctx
    A = quantize(sym)
    best_c, best_d = np.inf, 0.0
    for _ in range(trials):
        f = LevelFunction(ctx, rng.normal(size=ctx.N) + 1j * rng.normal(size=ctx.N))
        Tf = A.apply(f)
        mid = sobolev_norm(Tf, s) + sobolev_norm(f, s)
        lower = sobolev_norm(f, s + order_lower)
        upper = sobolev_norm(f, s + order_upper)
        if lower > 0:
            best_c = min(best_c, mid / lower)
        if upper > 0:
            best_d = max(best_d, mid / upper)
    return NormEquivalenceReport(
        s=s,
        order_upper=order_upper,
        order_lower=order_lower,
        best_c=float(best_c),
        best_d=float(best_d),
        trials=trials,
    )


@dataclass
class EigenDecomposition:
    """Dense eigen-decomposition sorted by eigenvalue modulus."""

    values: np.ndarray
    vectors: np.ndarray  # column j pairs with values[j]
    max_residual: float
    operator_norm: float


def eigen(A: OperatorMatrix, cap: int = DENSE_EIG_CAP, residual_tol: float = 1e-8) -> EigenDecomposition:
    """numpy dense eigensolve with a per-pair residual certificate."""
    if A.ctx.N > cap:
        raise ResourceCapError(f"dense eigensolve of size {A.ctx.N} exceeds cap {cap}")
    entries = A.entries if A.basis == "sample" else A.to_basis("sample").entries
    w, V = np.linalg.eig(entries)
    order = np.argsort(np.abs(w), kind="stable")
    w, V = w[order], V[:, order]
    anorm = float(np.linalg.norm(entries, 2))
    resid = np.linalg.norm(entries @ V - V * w[None, :], axis=0) / np.maximum(np.linalg.norm(V, axis=0), 1e-300)
    max_resid = float(np.max(resid)) if resid.size else 0.0
    if max_resid > residual_tol * max(anorm, 1e-300):
        raise ConsistencyError(f"eigen residual {max_resid:.3e} exceeds {residual_tol:.1e} * ||A||")
    return EigenDecomposition(values=w, vectors=V, max_residual=max_resid, operator_norm=anorm)


def counting_function(eigenvalues: np.ndarray, t: float) -> int:
    """Number of eigenvalues with modulus <= t."""
    return int(np.sum(np.abs(np.asarray(eigenvalues)) <= t))


@dataclass
class WeylFit:
    """Shifted power-law fit of the counting function.

    ``log N(t) ~ slope * log(t + shift) + intercept`` over the jump
    points inside the window; ``slope`` estimates the asymptotic log-log
    slope (a spectral offset bends the naive chord at the low end, which
    ``plain_slope`` records for comparison).
    """

    slope: float
    shift: float
    intercept: float
    rss: float
    points: int
    plain_slope: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "slope": self.slope,
                "shift": self.shift,
                "intercept": self.intercept,
                "rss": self.rss,
                "points": self.points,
                "plain_slope": self.plain_slope,
            }
        )


def _linfit(x: np.ndarray, y: np.ndarray):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return coef[0], coef[1], float(r @ r)


def weyl_slope_fit(eigenvalues: np.ndarray, t_min: float, t_max: float) -> WeylFit:
    """Fit the counting function's growth on [t_min, t_max].

    Fit points are the distinct eigenvalue moduli (the jumps of N);
    the shift is chosen by least squares within (-0.9 t_min, t_min).
    """
    mods = np.abs(np.asarray(eigenvalues))
    ts = np.unique(mods)
    ts = ts[(ts >= t_min) & (ts <= t_max) & (ts > 0)]
    if ts.size < 3:
        raise ValueError(f"need at least 3 jump points in [{t_min}, {t_max}], found {ts.size}")
    counts = np.array([counting_function(mods, t) for t in ts], dtype=float)
    y = np.log(counts)

    def rss_of(b: float) -> float:
        return _linfit(np.log(ts + b), y)[2]

    res = scipy.optimize.minimize_scalar(rss_of, bounds=(-0.9 * t_min, t_min), method="bounded")
    shift = float(res.x)
    slope, intercept, rss = _linfit(np.log(ts + shift), y)
    plain_slope, _, _ = _linfit(np.log(ts), y)
    return WeylFit(
        slope=float(slope),
        shift=shift,
        intercept=float(intercept),
        rss=rss,
        points=int(ts.size),
        plain_slope=float(plain_slope),
    )


@dataclass
class HeatTrajectory:
    """Sobolev ladders and modal magnitudes of exp(-t T) f0."""

    times: list
    orders: list
    norms: np.ndarray  # [time, order]
    mode_magnitudes: np.ndarray  # [time, mode]
    path: str  # "multiplier" or "eigen"
    eigenvalues: np.ndarray | None = None

    def to_csv_rows(self):
        rows = [("t", "k", "norm")]
        for i, t in enumerate(self.times):
            for j, k in enumerate(self.orders):
                rows.append((t, k, self.norms[i, j]))
        return rows


def heat_evolve(generator, f0: LevelFunction, times, orders, eig_cap: int = DENSE_EIG_CAP) -> HeatTrajectory:
    """Evolve the semigroup generated by -T from f0 over a time grid.

    Multiplier symbols take the exact spectral path
    ``fhat(t, xi) = exp(-t lambda(xi)) fhat(0, xi)``; anything else goes
    through the dense eigen-decomposition.
    """
    times = [float(t) for t in times]
    orders = [float(k) for k in orders]
    if any(t < 0 for t in times):
        raise ValueError("negative evolution times are not allowed")
    ctx = f0.ctx
    if isinstance(generator, Symbol) and generator.form == "multiplier":
        lam = generator.table[0]
        F0 = forward(f0).coeffs
        norms = np.zeros((len(times), len(orders)))
        mags = np.zeros((len(times), ctx.N))
        for i, t in enumerate(times):
            coeffs = np.exp(-t * lam) * F0
            mags[i] = np.abs(coeffs)
            for j, k in enumerate(orders):
                norms[i, j] = sobolev_norm(SpectralFunction(ctx, coeffs), k)
        return HeatTrajectory(times, orders, norms, mags, "multiplier")

    A = quantize(generator) if isinstance(generator, Symbol) else generator
    dec = eigen(A, cap=eig_cap)
    coords = np.linalg.solve(dec.vectors, f0.values)
    norms = np.zeros((len(times), len(orders)))
    mags = np.zeros((len(times), ctx.N))
    for i, t in enumerate(times):
        modal = np.exp(-t * dec.values) * coords
        mags[i] = np.abs(modal)
        ft = LevelFunction(ctx, dec.vectors @ modal)
        for j, k in enumerate(orders):
            norms[i, j] = sobolev_norm(ft, k)
    return HeatTrajectory(times, orders, norms, mags, "eigen", eigenvalues=dec.values)


def variable_coefficient_generator(ctx: TruncationContext, terms, formula: str = "integral") -> Symbol:
    """Symbol of ``sum_i a_i(x) D^{s_i}``: rows scale the eigenvalue tables.

    ``terms`` is an iterable of (coefficient sample vector, order s_i).
    """
    table = np.zeros((ctx.N, ctx.N), dtype=np.complex128)
    for a_vals, s in terms:
        a = np.asarray(a_vals, dtype=np.complex128)
        if a.shape != (ctx.N,):
            raise ValueError(f"coefficient needs {ctx.N} samples, got {a.shape}")
        lam = multiplier_table(VladimirovSpec(float(s), ctx.p), ctx, formula)
        table += a[:, None] * lam[None, :]
    return Symbol(ctx, table, "full")
