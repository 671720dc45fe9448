"""Symbol tables, difference/derivative operators, class-seminorm sweeps.

A symbol is a complex table sigma[x, u] over sample points x and dual
indices u.  Three forms are tracked: ``full`` (generic), ``radial``
(depends on u only through |xi|_p; carries a per-x profile over shells
j = 0 for xi = 0 and j = 1..n for norm p^j) and ``multiplier``
(x-independent).  Expansions between forms are exact.

Difference operators:

* ``delta_plus``          group difference  sigma(x, xi+eta) - sigma(x, xi)
* ``radial_delta``        forward difference of the radial profile in the
                          shell exponent j (|xi|_p = p^j); the xi = 0
                          entry never participates in differencing
* ``dx_vladimirov``       fractional derivative in x (D^beta multiplier)
* ``partial_x_h``         the norm-shift derivative
                          sum_eta (|eta-xi|_p - |xi|_p)^h sighat(eta, xi) chi(eta x)

Seminorm sweeps estimate the best constants of three class families over
the finite grid and report a two-level growth ratio (sup over the full
dual vs. the level-(n-1) sub-dual) as a membership diagnostic: a finite
truncation can only falsify membership or exhibit level-stable constants,
never prove membership.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Frequency, ResourceCapError, TruncationContext
from .fourier import dft_axis
from .operator_matrix import OperatorMatrix, matrix_to_symbol_table
from .vladimirov import VladimirovSpec, multiplier_table

FAMILIES = ("S", "S_tilde", "S_check")

#: work cap for the cubic amplitude tensor (p^{3n} entries)
AMPLITUDE_CAP = 2**21
#: work cap for the quartic double-difference sweep (p^{4n} cells)
DOUBLE_DIFFERENCE_CAP = 2**20


@dataclass
class Symbol:
    """Complex symbol table sigma[x, u] with an optional structured form."""

    ctx: TruncationContext
    table: np.ndarray
    form: str = "full"
    profile: np.ndarray | None = None
    valid_shell_max: int | None = None

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=np.complex128)
        N = self.ctx.N
        if self.table.shape != (N, N):
            raise ValueError(f"expected a {N}x{N} symbol table, got {self.table.shape}")
        if self.form not in ("full", "radial", "multiplier"):
            raise ValueError(f"unknown symbol form {self.form!r}")

    @staticmethod
    def multiplier(ctx: TruncationContext, values) -> "Symbol":
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (ctx.N,):
            raise ValueError(f"multiplier needs {ctx.N} values, got {values.shape}")
        return Symbol(ctx, np.tile(values, (ctx.N, 1)), "multiplier")

    @staticmethod
    def radial(ctx: TruncationContext, profile) -> "Symbol":
        """Expand a shell profile; column j holds the value at |xi| = p^j (j=0: xi=0)."""
        profile = np.asarray(profile, dtype=np.complex128)
        if profile.ndim == 1:
            profile = np.tile(profile, (ctx.N, 1))
        if profile.shape != (ctx.N, ctx.n + 1):
            raise ValueError(f"radial profile must have shape ({ctx.N}, {ctx.n + 1})")
        table = profile[:, ctx.shells]
        return Symbol(ctx, table, "radial", profile=profile.copy())

    def radial_profile(self, tol: float = 1e-12) -> np.ndarray:
        """Per-x shell profile; detects radiality of full tables within tol."""
        if self.profile is not None:
            return self.profile
        sh = self.ctx.shells
        prof = np.zeros((self.ctx.N, self.ctx.n + 1), dtype=np.complex128)
        scale = max(1.0, float(np.max(np.abs(self.table))))
        for j in range(self.ctx.n + 1):
            cols = np.flatnonzero(sh == j)
            block = self.table[:, cols]
            ref = block[:, 0]
            if np.max(np.abs(block - ref[:, None])) > tol * scale:
                raise ValueError(f"symbol is not radial on shell {j}")
            prof[:, j] = ref
        return prof

    def to_json(self) -> str:
        return json.dumps(
            {
                "p": self.ctx.p,
                "n": self.ctx.n,
                "form": self.form,
                "re": self.table.real.tolist(),
                "im": self.table.imag.tolist(),
            }
        )

    @staticmethod
    def from_json(text: str) -> "Symbol":
        doc = json.loads(text)
        ctx = TruncationContext(doc["p"], doc["n"])
        table = np.asarray(doc["re"]) + 1j * np.asarray(doc["im"])
        return Symbol(ctx, table, doc.get("form", "full"))


@dataclass
class Amplitude:
    """Three-variable kernel a[x, y, u] of extent p^n in each slot."""

    ctx: TruncationContext
    tensor: np.ndarray

    def __post_init__(self):
        self.tensor = np.asarray(self.tensor, dtype=np.complex128)
        N = self.ctx.N
        if self.tensor.shape != (N, N, N):
            raise ValueError(f"expected a {N}^3 amplitude tensor, got {self.tensor.shape}")


@dataclass
class SeminormReport:
    """Estimated class constants C[alpha][beta] plus growth diagnostics."""

    family: str
    m: float
    rho: float
    delta: float
    alpha_max: int
    beta_max: int
    constants: np.ndarray
    growth_ratio: np.ndarray

    def to_csv_rows(self):
        rows = [("alpha", "beta", "constant", "growth_ratio")]
        for a in range(self.alpha_max + 1):
            for b in range(self.beta_max + 1):
                rows.append((a, b, self.constants[a, b], self.growth_ratio[a, b]))
        return rows

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": self.family,
                "m": self.m,
                "rho": self.rho,
                "delta": self.delta,
                "alpha_max": self.alpha_max,
                "beta_max": self.beta_max,
                "constants": self.constants.tolist(),
                "growth_ratio": self.growth_ratio.tolist(),
            }
        )

    def max_constant(self) -> float:
        return float(np.max(self.constants))

    def max_growth(self) -> float:
        return float(np.max(self.growth_ratio))


def vladimirov_symbol(spec: VladimirovSpec, ctx: TruncationContext, formula: str = "integral") -> Symbol:
    """The D^s eigenvalue table as a multiplier symbol."""
    return Symbol.multiplier(ctx, multiplier_table(spec, ctx, formula))


def delta_plus(sym: Symbol, eta) -> Symbol:
    """Group difference sigma(x, xi + eta) - sigma(x, xi); exact (dual closed)."""
    u_eta = eta.u if isinstance(eta, Frequency) else int(eta)
    N = sym.ctx.N
    shifted = sym.table[:, (np.arange(N) + u_eta) % N]
    form = "multiplier" if sym.form == "multiplier" else "full"
    return Symbol(sym.ctx, shifted - sym.table, form)


def radial_delta(sym: Symbol, alpha: int) -> Symbol:
    """alpha-fold forward difference of the radial profile in the exponent.

    Shells j = 1..n-alpha of the output hold the differenced profile;
    the xi = 0 entry and the shells beyond n-alpha (where the forward
    difference would look past the truncation) are zeroed, and
    ``valid_shell_max`` records the last trustworthy shell.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    prof = sym.radial_profile()
    ctx = sym.ctx
    if alpha == 0:
        out = Symbol.radial(ctx, prof)
        out.valid_shell_max = ctx.n
        return out
    if alpha > ctx.n - 1:
        raise ValueError(f"cannot take {alpha} shell differences at level {ctx.n}")
    diff = np.diff(prof[:, 1:], n=alpha, axis=1)  # shells 1..n-alpha
    new_prof = np.zeros_like(prof)
    new_prof[:, 1 : ctx.n - alpha + 1] = diff
    out = Symbol.radial(ctx, new_prof)
    out.valid_shell_max = ctx.n - alpha
    return out


def dx_vladimirov(sym: Symbol, beta: float) -> Symbol:
    """Apply the order-beta fractional derivative to each column in x."""
    if beta < 0:
        raise ValueError(f"derivative order must be >= 0, got {beta}")
    if beta == 0:
        return Symbol(sym.ctx, sym.table.copy(), sym.form, profile=None if sym.profile is None else sym.profile.copy())
    ctx = sym.ctx
    lam = multiplier_table(VladimirovSpec(beta, ctx.p), ctx, "integral")
    sighat = dft_axis(sym.table, ctx, -1, axis=0) / ctx.N
    out_table = dft_axis(lam[:, None] * sighat, ctx, +1, axis=0)
    out = Symbol(ctx, out_table, sym.form if sym.form != "radial" else "radial")
    if sym.form == "radial":
        prof_hat = dft_axis(sym.radial_profile(), ctx, -1, axis=0) / ctx.N
        out.profile = dft_axis(lam[:, None] * prof_hat, ctx, +1, axis=0)
    if sym.form == "multiplier":
        # constants in x are annihilated exactly; clean the rounding dust
        out.table[:] = 0.0
    return out


def partial_x_h(sym: Symbol, h: int) -> Symbol:
    """Norm-shift derivative: weight the x-spectrum by (|eta-xi|-|xi|)^h."""
    if h < 1:
        raise ValueError(f"h must be a positive integer, got {h}")
    ctx = sym.ctx
    N = ctx.N
    sighat = dft_axis(sym.table, ctx, -1, axis=0) / N
    idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    factor = (ctx.norms[idx] - ctx.norms[None, :]) ** h
    return Symbol(ctx, dft_axis(factor * sighat, ctx, +1, axis=0), "full")


def _sub_dual_mask(ctx: TruncationContext) -> np.ndarray:
    """True on the level-(n-1) dual embedded in level n (norm <= p^(n-1))."""
    mask = np.zeros(ctx.N, dtype=bool)
    mask[::ctx.p] = True
    return mask


def _masked_max(values: np.ndarray, mask: np.ndarray) -> float:
    sel = values[mask]
    return float(sel.max()) if sel.size else 0.0


def _ratio(full: float, sub: float) -> float:
    if sub == 0.0:
        return 1.0 if full == 0.0 else np.inf
    return full / sub


def seminorm(
    sym: Symbol,
    family: str,
    m: float,
    rho: float = 0.0,
    delta: float = 0.0,
    alpha_max: int = 4,
    beta_max: int = 4,
) -> SeminormReport:
    """Sweep the class estimate and return the observed constants.

    ``C[alpha][beta]`` is the sup over the finite grid of the relevant
    difference/derivative expression divided by the class bound's right
    side.  ``growth_ratio`` compares the sup over the full dual with the
    sup over the level-(n-1) sub-dual: bounded ratios are consistent with
    membership, growing ones falsify it.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if not (0.0 <= rho <= 1.0 and 0.0 <= delta <= 1.0):
        raise ValueError(f"rho and delta must lie in [0, 1], got rho={rho}, delta={delta}")
    if alpha_max < 0 or beta_max < 0:
        raise ValueError("alpha_max and beta_max must be non-negative")

    ctx = sym.ctx
    C = np.zeros((alpha_max + 1, beta_max + 1))
    Csub = np.zeros_like(C)

    if family == "S":
        prof = sym.radial_profile()
        shell_j = np.arange(1, ctx.n + 1)
        for beta in range(beta_max + 1):
            dprof = dx_vladimirov(Symbol.radial(ctx, prof), float(beta)).radial_profile() if beta else prof
            zero_col = np.max(np.abs(dprof[:, 0]))
            for alpha in range(alpha_max + 1):
                if alpha == 0:
                    vals = np.abs(dprof[:, 1:])
                    js = shell_j
                else:
                    if alpha > ctx.n - 1:
                        C[alpha, beta] = 0.0
                        Csub[alpha, beta] = 0.0
                        continue
                    vals = np.abs(np.diff(dprof[:, 1:], n=alpha, axis=1))
                    js = shell_j[: ctx.n - alpha]
                bound = np.power(float(ctx.p), js * (m - rho * alpha + delta * beta))
                ratios = vals / bound[None, :]
                full = float(ratios.max()) if ratios.size else 0.0
                sub = float(ratios[:, js <= ctx.n - 1].max()) if np.any(js <= ctx.n - 1) else 0.0
                if alpha == 0:
                    full = max(full, zero_col)  # <xi>^e = 1 at xi = 0
                    sub = max(sub, zero_col)
                C[alpha, beta] = full
                Csub[alpha, beta] = sub
        return SeminormReport(family, m, rho, delta, alpha_max, beta_max, C, np.vectorize(_ratio)(C, Csub))

    if family == "S_tilde":
        N = ctx.N
        cols = np.arange(N)
        sub_mask = _sub_dual_mask(ctx)
        for beta in range(beta_max + 1):
            if beta == 0:
                T = sym.table[:1] if sym.form == "multiplier" else sym.table
            elif sym.form == "multiplier":
                continue  # x-constant columns are annihilated exactly
            else:
                T = dx_vladimirov(Symbol(ctx, sym.table, "full"), float(beta)).table
            # alpha = 0 is the zeroth difference: the plain size of D^beta sigma
            base = np.max(np.abs(T), axis=0) / np.power(ctx.weights, m + delta * beta)
            C[0, beta] = float(base.max())
            Csub[0, beta] = _masked_max(base, sub_mask)
            if alpha_max == 0:
                continue
            num = np.zeros((N, N))  # num[eta, xi]
            for ue in range(1, N):
                dcol = T[:, (cols + ue) % N] - T
                num[ue] = np.max(np.abs(dcol), axis=0)
            allowed = ctx.norms[:, None] <= ctx.weights[None, :]
            allowed[0, :] = False  # eta = 0 excluded (difference vanishes anyway)
            for alpha in range(1, alpha_max + 1):
                denom = np.power(ctx.norms[:, None], alpha, where=ctx.norms[:, None] > 0, out=np.ones((N, 1))) * np.power(
                    ctx.weights[None, :], m - rho * alpha + delta * beta
                )
                ratios = np.where(allowed, num / denom, 0.0)
                C[alpha, beta] = float(ratios.max()) if ratios.size else 0.0
                sub_allowed = allowed & sub_mask[:, None] & sub_mask[None, :]
                Csub[alpha, beta] = _masked_max(ratios, sub_allowed)
        return SeminormReport(family, m, rho, delta, alpha_max, beta_max, C, np.vectorize(_ratio)(C, Csub))

    # family == "S_check": double differences in x and xi
    N = ctx.N
    if N**4 > DOUBLE_DIFFERENCE_CAP:
        raise ResourceCapError(
            f"double-difference sweep needs {N}^4 = {N**4} cells, cap is {DOUBLE_DIFFERENCE_CAP}"
        )
    cols = np.arange(N)
    point_norm = np.power(float(ctx.p), -ctx.valuations.astype(np.float64))  # |y|_p of residues
    sub_mask = _sub_dual_mask(ctx)
    num_xi = np.zeros((N, N))  # single xi-difference: [eta, xi]
    for ue in range(1, N):
        num_xi[ue] = np.max(np.abs(sym.table[:, (cols + ue) % N] - sym.table), axis=0)
    num_x = np.zeros((N, N))  # single x-difference: [y, xi]
    num2 = np.zeros((N, N, N))  # double difference: [y, eta, xi]
    for y in range(1, N):
        R = sym.table[(cols + y) % N, :] - sym.table
        num_x[y] = np.max(np.abs(R), axis=0)
        for ue in range(1, N):
            D = R[:, (cols + ue) % N] - R
            num2[y, ue] = np.max(np.abs(D), axis=0)
    eta_pow = np.power(ctx.norms, 1.0, where=ctx.norms > 0, out=np.ones(N))
    for alpha in range(alpha_max + 1):
        for beta in range(beta_max + 1):
            xi_w = np.power(ctx.weights, m - rho * alpha + delta * beta)
            if alpha == 0 and beta == 0:
                vals = np.max(np.abs(sym.table), axis=0) / xi_w
                C[0, 0] = float(vals.max())
                Csub[0, 0] = _masked_max(vals, sub_mask)
            elif alpha == 0:
                ratios = num_x[1:] / (point_norm[1:, None] ** beta * xi_w[None, :])
                C[0, beta] = float(ratios.max())
                Csub[0, beta] = _masked_max(ratios, np.broadcast_to(sub_mask[None, :], ratios.shape))
            elif beta == 0:
                ratios = num_xi[1:] / (eta_pow[1:, None] ** alpha * xi_w[None, :])
                C[alpha, 0] = float(ratios.max())
                sub2 = sub_mask[1:, None] & sub_mask[None, :]
                Csub[alpha, 0] = _masked_max(ratios, sub2)
            else:
                denom = point_norm[1:, None, None] ** beta * eta_pow[None, 1:, None] ** alpha * xi_w[None, None, :]
                ratios = num2[1:, 1:, :] / denom
                C[alpha, beta] = float(ratios.max()) if ratios.size else 0.0
                sub3 = sub_mask[None, 1:, None] & sub_mask[None, None, :]
                Csub[alpha, beta] = _masked_max(ratios, np.broadcast_to(sub3, ratios.shape))
    return SeminormReport(family, m, rho, delta, alpha_max, beta_max, C, np.vectorize(_ratio)(C, Csub))


def amplitude_to_operator(a: Amplitude, cap: int = AMPLITUDE_CAP) -> OperatorMatrix:
    """Sample-basis matrix ``A[x, y] = p^-n sum_u a[x, y, u] chi(u (x-y))``."""
    ctx = a.ctx
    if ctx.N**3 > cap:
        raise ResourceCapError(f"amplitude work p^(3n) = {ctx.N**3} exceeds cap {cap}")
    B = dft_axis(a.tensor, ctx, +1, axis=2)
    x = np.arange(ctx.N)
    idx = (x[:, None] - x[None, :]) % ctx.N
    entries = np.take_along_axis(B, idx[:, :, None], axis=2)[:, :, 0] / ctx.N
    return OperatorMatrix(ctx, entries, "sample")


def amplitude_to_symbol(a: Amplitude, cap: int = AMPLITUDE_CAP) -> Symbol:
    """The unique symbol with the same operator as the amplitude.

    At finite level the reduction is exact: the symbol is read off by
    testing the amplitude operator against every character.
    """
    A = amplitude_to_operator(a, cap=cap)
    return Symbol(a.ctx, matrix_to_symbol_table(A.entries, a.ctx), "full")


def asymptotic_sum(parts) -> Symbol:
    """Cutoff-glued sum of a strictly order-decreasing symbol sequence.

    Part j enters through the cutoff phi_j(xi) = 1 iff |xi|_p > p^j, so
    at level n only the first n parts can contribute.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one (symbol, order) part")
    orders = [float(mj) for _, mj in parts]
    if any(b >= a for a, b in zip(orders, orders[1:])):
        raise ValueError(f"orders must be strictly decreasing, got {orders}")
    ctx = parts[0][0].ctx
    total = np.zeros((ctx.N, ctx.N), dtype=np.complex128)
    for j, (sym, _mj) in enumerate(parts):
        if sym.ctx != ctx:
            raise ValueError("all parts must share one context")
        cut = ctx.norms > float(ctx.p) ** j
        if not np.any(cut):
            break
        total += sym.table * cut[None, :]
    return Symbol(ctx, total, "full")


def asymptotic_residue(parts, sigma: Symbol, upto: int) -> Symbol:
    """sigma minus the plain partial sum of the first ``upto`` parts."""
    table = sigma.table.copy()
    for sym, _mj in list(parts)[:upto]:
        table -= sym.table
    return Symbol(sigma.ctx, table, "full")
