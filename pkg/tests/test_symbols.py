"""Symbol forms, difference operators, seminorm sweeps, amplitudes."""

import numpy as np
import pytest

from padic_calc.core import Frequency, ResourceCapError, TruncationContext
from padic_calc.fourier import dft_axis
from padic_calc.symbols import (
    Amplitude,
    Symbol,
    amplitude_to_operator,
    amplitude_to_symbol,
    asymptotic_residue,
    asymptotic_sum,
    delta_plus,
    dx_vladimirov,
    partial_x_h,
    radial_delta,
    seminorm,
    vladimirov_symbol,
)
from padic_calc.vladimirov import VladimirovSpec, multiplier_table


def rng():
    return np.random.default_rng(11)


def random_symbol(ctx, gen):
    return Symbol(ctx, gen.normal(size=(ctx.N, ctx.N)) + 1j * gen.normal(size=(ctx.N, ctx.N)))


def test_symbol_forms_expand_exactly():
    ctx = TruncationContext(2, 3)
    vals = np.arange(ctx.N, dtype=float) + 1.0
    mult = Symbol.multiplier(ctx, vals)
    assert np.all(mult.table == vals[None, :])
    prof = np.arange(ctx.n + 1, dtype=float) ** 2
    rad = Symbol.radial(ctx, prof)
    # each column depends on u only through its shell
    assert np.all(rad.table[:, 0] == prof[0])
    for u in range(1, ctx.N):
        j = int(ctx.shells[u])
        assert np.all(rad.table[:, u] == prof[j])
    rec = rad.radial_profile()
    assert np.max(np.abs(rec - prof[None, :])) == 0.0


def test_radial_detection_rejects_generic_tables():
    ctx = TruncationContext(2, 3)
    sym = random_symbol(ctx, rng())
    with pytest.raises(ValueError):
        sym.radial_profile()


def test_delta_plus_basics():
    ctx = TruncationContext(2, 2)
    sym = Symbol.multiplier(ctx, ctx.weights)
    zero = delta_plus(sym, 0)
    assert np.max(np.abs(zero.table)) == 0.0
    one = Symbol.multiplier(ctx, np.ones(ctx.N))
    assert np.max(np.abs(delta_plus(one, 3).table)) == 0.0
    # weight(1/4 + 1/2) = 4 at p=2, n=2: the u=1 column difference vanishes
    d = delta_plus(sym, Frequency(ctx, 2))
    assert d.table[0, 1] == pytest.approx(0.0)
    # enumeration oracle over the whole dual-addition table
    for ue in range(ctx.N):
        d = delta_plus(sym, ue)
        for u in range(ctx.N):
            expected = ctx.weights[(u + ue) % ctx.N] - ctx.weights[u]
            assert d.table[2, u] == pytest.approx(expected)


def test_radial_delta_examples():
    ctx = TruncationContext(3, 4)
    const = Symbol.radial(ctx, np.full(ctx.n + 1, 2.0))
    assert np.max(np.abs(radial_delta(const, 1).table)) == 0.0
    linear = Symbol.radial(ctx, np.arange(ctx.n + 1, dtype=float))
    d = radial_delta(linear, 1)
    assert d.valid_shell_max == ctx.n - 1
    prof = d.radial_profile()
    assert np.max(np.abs(prof[:, 1 : ctx.n] - 1.0)) == 0.0
    # exponential profile p^(j s): one difference multiplies by (p^s - 1)
    s = 1.0
    expo = np.power(float(ctx.p), np.arange(ctx.n + 1) * s)
    d = radial_delta(Symbol.radial(ctx, expo), 1)
    prof = d.radial_profile()
    for j in range(1, ctx.n):
        assert prof[0, j] == pytest.approx(expo[j] * (ctx.p**s - 1.0))
    with pytest.raises(ValueError):
        radial_delta(linear, ctx.n)


def test_dx_vladimirov_kills_constants_and_scales_characters():
    ctx = TruncationContext(2, 4)
    sym = Symbol.multiplier(ctx, np.linspace(1, 2, ctx.N))
    out = dx_vladimirov(sym, 1.0)
    assert np.max(np.abs(out.table)) == 0.0
    assert np.max(np.abs(dx_vladimirov(sym, 0.0).table - sym.table)) == 0.0
    # a column equal to a character in x scales by the matching eigenvalue
    u0 = 4
    table = np.tile(ctx.character_column(u0)[:, None], (1, ctx.N))
    sym = Symbol(ctx, table)
    lam = multiplier_table(VladimirovSpec(1.5, 2), ctx, "integral")
    out = dx_vladimirov(sym, 1.5)
    assert np.max(np.abs(out.table - lam[u0] * table)) < 1e-10 * max(1.0, lam[u0])
    with pytest.raises(ValueError):
        dx_vladimirov(sym, -0.5)


def slow_partial_x_h(sym, h):
    """Naive double-sum oracle for the norm-shift derivative."""
    ctx = sym.ctx
    N = ctx.N
    sighat = dft_axis(sym.table, ctx, -1, axis=0) / N
    out = np.zeros((N, N), dtype=complex)
    for x in range(N):
        for uxi in range(N):
            acc = 0.0 + 0.0j
            for ue in range(N):
                shift = ctx.norms[(ue - uxi) % N] - ctx.norms[uxi]
                acc += shift**h * sighat[ue, uxi] * ctx.roots[(ue * x) % N]
            out[x, uxi] = acc
    return out


def test_partial_x_h():
    ctx = TruncationContext(2, 3)
    gen = rng()
    sym = random_symbol(ctx, gen)
    out = partial_x_h(sym, 1)
    ref = slow_partial_x_h(sym, 1)
    assert np.max(np.abs(out.table - ref)) < 1e-11 * max(1.0, np.max(np.abs(ref)))
    # x-constant symbols die because |-xi| = |xi|
    flat = Symbol.multiplier(ctx, gen.normal(size=ctx.N))
    assert np.max(np.abs(partial_x_h(flat, 2).table)) < 1e-12
    # the eta -> -eta symmetry of the weight |eta|^h makes the xi = 0
    # column real for real symbols (the only column where that holds)
    real_sym = Symbol(ctx, gen.normal(size=(ctx.N, ctx.N)))
    out = partial_x_h(real_sym, 2)
    scale = max(1.0, np.max(np.abs(out.table[:, 0].real)))
    assert np.max(np.abs(out.table[:, 0].imag)) < 1e-11 * scale
    with pytest.raises(ValueError):
        partial_x_h(sym, 0)


def test_partial_x_remark_bound():
    # ||partial_x^h sigma(., xi)||_L2 <= C ||D^h sigma(., xi)||_L2 with modest C
    ctx = TruncationContext(2, 5)
    gen = rng()
    sym = random_symbol(ctx, gen)
    h = 2
    lhs = partial_x_h(sym, h).table
    rhs = dx_vladimirov(sym, float(h)).table
    lhs_norms = np.sqrt(np.mean(np.abs(lhs) ** 2, axis=0))
    rhs_norms = np.sqrt(np.mean(np.abs(rhs) ** 2, axis=0))
    mask = rhs_norms > 1e-12
    observed = np.max(lhs_norms[mask] / rhs_norms[mask])
    spec = VladimirovSpec(float(h), 2)
    # the shift factor never exceeds the eigenvalue by more than this margin
    margin = float(ctx.p) ** h / (float(ctx.p) ** h - spec.additive_constant)
    assert observed <= margin * (1 + 1e-9)


def test_seminorm_trivial_symbol():
    ctx = TruncationContext(2, 4)
    one = Symbol.multiplier(ctx, np.ones(ctx.N))
    for family in ("S", "S_tilde"):
        rep = seminorm(one, family, m=0.0, rho=0.0, delta=0.0, alpha_max=2, beta_max=2)
        assert rep.constants[0, 0] == pytest.approx(1.0)
        mask = np.ones_like(rep.constants, dtype=bool)
        mask[0, 0] = False
        assert np.max(rep.constants[mask]) < 1e-12


def test_seminorm_checked_family_trivial():
    ctx = TruncationContext(2, 3)
    one = Symbol.multiplier(ctx, np.ones(ctx.N))
    rep = seminorm(one, "S_check", m=0.0, alpha_max=1, beta_max=1)
    assert rep.constants[0, 0] == pytest.approx(1.0)
    assert max(rep.constants[0, 1], rep.constants[1, 0], rep.constants[1, 1]) < 1e-12
    big = TruncationContext(2, 6)
    with pytest.raises(ResourceCapError):
        seminorm(Symbol.multiplier(big, np.ones(big.N)), "S_check", m=0.0)


def test_seminorm_vladimirov_level_stable_and_misfit_blows_up():
    spec = VladimirovSpec(1.0, 2)
    reps = {}
    for n in (5, 6):
        ctx = TruncationContext(2, n)
        sym = vladimirov_symbol(spec, ctx)
        reps[n] = seminorm(sym, "S_tilde", m=1.0, rho=1.0, delta=0.0, alpha_max=3, beta_max=2)
    for rep in reps.values():
        assert np.all(np.isfinite(rep.constants))
        assert np.max(rep.growth_ratio[np.isfinite(rep.growth_ratio)]) <= 1.25
    # constants agree across the two genuinely different levels; the (0,0)
    # entry creeps toward 1 like 1 - c p^-n, hence the loose tolerance
    assert np.allclose(reps[5].constants, reps[6].constants, rtol=0.05, atol=1e-12)

    # weight^s sold as order m = 0 must blow up like p^(s n)
    ctx = TruncationContext(2, 6)
    sym = Symbol.multiplier(ctx, ctx.weights)
    rep = seminorm(sym, "S_tilde", m=0.0, rho=0.0, delta=0.0, alpha_max=0, beta_max=0)
    assert rep.growth_ratio[0, 0] == pytest.approx(2.0, rel=0.2)
    with pytest.raises(ValueError):
        seminorm(sym, "S_tilde", m=0.0, rho=1.5)
    with pytest.raises(ValueError):
        seminorm(sym, "mystery", m=0.0)


def test_seminorm_radial_family_on_vladimirov():
    ctx = TruncationContext(2, 6)
    spec = VladimirovSpec(1.0, 2)
    sym = vladimirov_symbol(spec, ctx)
    rep = seminorm(sym, "S", m=1.0, rho=1.0, delta=0.0, alpha_max=2, beta_max=1)
    assert np.all(np.isfinite(rep.constants))
    assert rep.constants[0, 0] <= 1.0 + 1e-9  # |lambda| <= <xi>^s exactly
    ratios = rep.growth_ratio[np.isfinite(rep.growth_ratio)]
    assert np.all((0.8 <= ratios) & (ratios <= 1.25))


def test_containment_s_in_s_tilde():
    # a symbol passing family S at (m,0,0) also passes S_tilde on the same grid
    ctx = TruncationContext(2, 5)
    gen = rng()
    prof = gen.normal(size=ctx.n + 1) + 1j * gen.normal(size=ctx.n + 1)
    sym = Symbol.radial(ctx, prof)
    rep_s = seminorm(sym, "S", m=0.0, alpha_max=2, beta_max=2)
    rep_t = seminorm(sym, "S_tilde", m=0.0, alpha_max=2, beta_max=2)
    assert np.all(np.isfinite(rep_s.constants))
    assert np.all(np.isfinite(rep_t.constants))
    # group differences only feel norm changes, so the S_tilde constants are
    # controlled by (twice) the radial oscillation
    assert rep_t.constants[0, 0] <= 2 * rep_s.constants[0, 0] + 1e-9


def slow_amplitude_operator(a):
    ctx = a.ctx
    N = ctx.N
    out = np.zeros((N, N), dtype=complex)
    for x in range(N):
        for y in range(N):
            acc = 0.0 + 0.0j
            for u in range(N):
                acc += a.tensor[x, y, u] * ctx.roots[(u * (x - y)) % N]
            out[x, y] = acc / N
    return out


def test_amplitude_operator_against_oracle():
    ctx = TruncationContext(2, 2)
    gen = rng()
    a = Amplitude(ctx, gen.normal(size=(ctx.N,) * 3) + 1j * gen.normal(size=(ctx.N,) * 3))
    A = amplitude_to_operator(a)
    ref = slow_amplitude_operator(a)
    assert np.max(np.abs(A.entries - ref)) < 1e-11


def test_amplitude_constant_gives_identity():
    ctx = TruncationContext(3, 2)
    a = Amplitude(ctx, np.ones((ctx.N,) * 3))
    A = amplitude_to_operator(a)
    assert np.max(np.abs(A.entries - np.eye(ctx.N))) < 1e-12


def test_amplitude_reduces_to_symbol():
    from padic_calc.calculus import quantize

    ctx = TruncationContext(2, 3)
    gen = rng()
    sym = random_symbol(ctx, gen)
    tensor = np.repeat(sym.table[:, None, :], ctx.N, axis=1)  # a(x,y,u) = sigma(x,u)
    a = Amplitude(ctx, tensor)
    A = amplitude_to_operator(a)
    Q = quantize(sym)
    assert np.max(np.abs(A.entries - Q.entries)) < 1e-11
    # full round trip through the extracted symbol
    sig2 = amplitude_to_symbol(a)
    assert np.max(np.abs(quantize(sig2).entries - A.entries)) < 1e-10
    with pytest.raises(ResourceCapError):
        amplitude_to_operator(a, cap=7)


def test_asymptotic_sum_cutoffs():
    ctx = TruncationContext(2, 4)
    one = Symbol.multiplier(ctx, np.ones(ctx.N))
    glued = asymptotic_sum([(one, 0.0)])
    # phi_0 keeps |xi| > 1, i.e. every nonzero frequency
    assert glued.table[0, 0] == 0.0
    assert np.all(glued.table[:, 1:] == 1.0)
    zeros = Symbol.multiplier(ctx, np.zeros(ctx.N))
    assert np.max(np.abs(asymptotic_sum([(zeros, 1.0), (zeros, 0.0)]).table)) == 0.0
    with pytest.raises(ValueError):
        asymptotic_sum([(one, 0.0), (one, 0.0)])
    with pytest.raises(ValueError):
        asymptotic_sum([])


def test_asymptotic_residue_passes_next_order():
    ctx = TruncationContext(2, 6)
    s1 = vladimirov_symbol(VladimirovSpec(1.0, 2), ctx)
    s0_vals = multiplier_table(VladimirovSpec(1.0, 2), ctx, "integral") + ctx.weights**0.0
    parts = [(Symbol.multiplier(ctx, s0_vals), 1.0), (vladimirov_symbol(VladimirovSpec(0.5, 2), ctx), 0.5)]
    glued = asymptotic_sum(parts)
    resid = asymptotic_residue(parts, glued, 1)
    rep = seminorm(resid, "S_tilde", m=0.5, rho=0.0, delta=0.0, alpha_max=1, beta_max=1)
    assert np.all(np.isfinite(rep.constants))


def test_symbol_json_round_trip():
    ctx = TruncationContext(2, 2)
    sym = random_symbol(ctx, rng())
    again = Symbol.from_json(sym.to_json())
    assert again.ctx == ctx
    assert np.max(np.abs(again.table - sym.table)) == 0.0


def binomial(v, k):
    # generalized binomial C(v, k) for any integer v: a product of k
    # consecutive integers is always divisible by k!
    import math

    num = 1
    for i in range(k):
        num *= v - i
    return num // math.factorial(k)


def test_discrete_taylor_newton_form_exact_for_polynomials():
    # Newton forward-difference expansion terminates exactly once the
    # order passes the polynomial degree; the v^k/k! variant does not,
    # which is why the binomial weights are the ones used throughout.
    def f(u):
        return u**3 - 2 * u + 1

    us = range(-4, 5)
    vs = range(-6, 7)
    M = 4  # degree 3 polynomial
    for u in us:
        diffs = [f(u)]
        row = [f(u + i) for i in range(M + 1)]
        for k in range(1, M + 1):
            row = [b - a for a, b in zip(row, row[1:])]
            diffs.append(row[0])
        for v in vs:
            newton = sum(binomial(v, k) * diffs[k] for k in range(M))
            assert newton == f(u + v)
            import math

            naive = sum(v**k / math.factorial(k) * diffs[k] for k in range(M))
            if v not in (0, 1):
                assert naive != pytest.approx(f(u + v))


def test_product_of_symbols_stays_in_summed_order_class():
    ctx = TruncationContext(2, 6)
    s1 = vladimirov_symbol(VladimirovSpec(1.0, 2), ctx)
    s2 = vladimirov_symbol(VladimirovSpec(0.5, 2), ctx)
    prod = Symbol(ctx, s1.table * s2.table, "multiplier")
    rep = seminorm(prod, "S", m=1.5, rho=1.0, delta=0.0, alpha_max=2, beta_max=1)
    assert np.all(np.isfinite(rep.constants))
    assert rep.constants[0, 0] <= 1.0 + 1e-9
    ratios = rep.growth_ratio[np.isfinite(rep.growth_ratio)]
    assert np.all(ratios <= 1.25)


def test_seminorm_report_csv_and_json():
    ctx = TruncationContext(2, 4)
    rep = seminorm(Symbol.multiplier(ctx, np.ones(ctx.N)), "S_tilde", m=0.0, alpha_max=1, beta_max=1)
    rows = rep.to_csv_rows()
    assert rows[0] == ("alpha", "beta", "constant", "growth_ratio")
    assert len(rows) == 1 + 4
    doc = __import__("json").loads(rep.to_json())
    assert doc["family"] == "S_tilde" and doc["alpha_max"] == 1
