"""Associated matrices, Schur norms, equivalence identity, inversion series."""

import numpy as np
import pytest

from padic_calc.core import TruncationContext
from padic_calc.calculus import quantize
from padic_calc.matrix_algebra import (
    EllipticityMarginError,
    associated_matrix,
    equivalence_check,
    schur_norm,
    wiener_experiment,
)
from padic_calc.operator_matrix import OperatorMatrix
from padic_calc.symbols import Symbol, vladimirov_symbol
from padic_calc.vladimirov import VladimirovSpec, multiplier_table


def rng():
    return np.random.default_rng(31)


def random_symbol(ctx, gen):
    return Symbol(ctx, gen.normal(size=(ctx.N, ctx.N)) + 1j * gen.normal(size=(ctx.N, ctx.N)))


def test_associated_matrix_of_multiplier_is_diagonal():
    ctx = TruncationContext(2, 4)
    gen = rng()
    vals = gen.normal(size=ctx.N)
    M = associated_matrix(Symbol.multiplier(ctx, vals))
    assert M.basis == "frequency"
    assert np.max(np.abs(M.entries - np.diag(vals))) < 1e-11


def test_associated_matrix_single_mode_stripe():
    ctx = TruncationContext(3, 2)
    u0 = 4
    table = np.tile(ctx.character_column(u0)[:, None], (1, ctx.N))
    M = associated_matrix(Symbol(ctx, table)).entries
    hits = np.abs(M) > 1e-12
    rows, cols = np.nonzero(hits)
    assert np.all((rows - cols) % ctx.N == u0)


def test_associated_matrix_matches_basis_converted_quantization():
    ctx = TruncationContext(2, 4)
    gen = rng()
    sym = random_symbol(ctx, gen)
    M1 = associated_matrix(sym).entries
    M2 = quantize(sym).to_basis("frequency").entries
    assert np.max(np.abs(M1 - M2)) < 1e-10


def test_schur_norm_identity_and_diagonal():
    ctx = TruncationContext(2, 5)
    eye = OperatorMatrix.identity(ctx, "frequency")
    for r in (0.0, 2.0, 4.0):
        rep = schur_norm(eye, r)
        assert rep.norm == pytest.approx(1.0)
        assert rep.growth_ratio == pytest.approx(1.0)
    lam = multiplier_table(VladimirovSpec(1.0, 2), ctx, "integral")
    rep = schur_norm(OperatorMatrix(ctx, np.diag(lam), "frequency"), r=3.0, m=1.0)
    expected = np.max(np.abs(lam) * ctx.weights**-1.0)
    assert rep.norm == pytest.approx(float(expected))
    with pytest.raises(ValueError):
        schur_norm(OperatorMatrix.identity(ctx, "frequency"), r=-1.0)


def test_schur_adjoint_symmetry_and_submultiplicativity():
    ctx = TruncationContext(2, 4)
    gen = rng()
    A = gen.normal(size=(ctx.N, ctx.N)) + 1j * gen.normal(size=(ctx.N, ctx.N))
    B = gen.normal(size=(ctx.N, ctx.N)) + 1j * gen.normal(size=(ctx.N, ctx.N))
    for r in (0.0, 1.0, 2.0):
        na = schur_norm(A, r, ctx=ctx).norm
        nastar = schur_norm(A.conj().T, r, ctx=ctx).norm
        assert na == pytest.approx(nastar, rel=1e-12)  # exact row/col swap
        # ultrametric Peetre constant 1 makes the algebra submultiplicative
        nprod = schur_norm(A @ B, r, ctx=ctx).norm
        assert nprod <= na * schur_norm(B, r, ctx=ctx).norm * (1 + 1e-12)


def test_schur_dominates_spectral_norm():
    ctx = TruncationContext(2, 5)
    gen = rng()
    for _ in range(5):
        A = gen.normal(size=(ctx.N, ctx.N)) + 1j * gen.normal(size=(ctx.N, ctx.N))
        assert np.linalg.norm(A, 2) <= schur_norm(A, 0.0, ctx=ctx).norm * (1 + 1e-12)


def test_equivalence_check_trivial_and_vladimirov():
    ctx = TruncationContext(2, 5)
    one = Symbol.multiplier(ctx, np.ones(ctx.N))
    rep = equivalence_check(one, m=0.0, r_max=2, alpha_max=1, beta_max=1)
    assert rep.schur[0].norm == pytest.approx(1.0)
    assert all(gap < 1e-10 for gap in rep.identity_gaps.values())

    sym = vladimirov_symbol(VladimirovSpec(1.0, 2), ctx)
    rep = equivalence_check(sym, m=1.0, r_max=4, alpha_max=2, beta_max=1)
    assert all(np.isfinite(r.norm) for r in rep.schur)
    for r in rep.schur:
        assert 0.8 <= r.growth_ratio <= 1.25
    assert all(gap < 1e-10 for gap in rep.identity_gaps.values())


def test_equivalence_identity_for_generic_symbol():
    ctx = TruncationContext(2, 4)
    sym = random_symbol(ctx, rng())
    rep = equivalence_check(sym, m=0.0, r_max=3, alpha_max=1, beta_max=1)
    assert all(gap < 1e-10 for gap in rep.identity_gaps.values())


def test_misclassified_order_blows_up_on_both_sides():
    spec = VladimirovSpec(1.0, 2)
    norms = {}
    sems = {}
    for n in (5, 6):
        ctx = TruncationContext(2, n)
        sym = vladimirov_symbol(spec, ctx)
        rep = equivalence_check(sym, m=0.0, r_max=0, alpha_max=0, beta_max=0)
        norms[n] = rep.schur[0].norm
        sems[n] = rep.seminorms.constants[0, 0]
    schur_exponent = np.log2(norms[6] / norms[5])
    sem_exponent = np.log2(sems[6] / sems[5])
    assert schur_exponent == pytest.approx(1.0, abs=0.1)  # order misfit s - m = 1
    assert sem_exponent == pytest.approx(1.0, abs=0.1)
    assert abs(schur_exponent - sem_exponent) <= 0.1 * max(abs(schur_exponent), abs(sem_exponent))


def test_wiener_multiplier_converges_immediately():
    ctx = TruncationContext(2, 4)
    sym = Symbol.multiplier(ctx, ctx.weights)
    rep = wiener_experiment(sym, order=1.0, threshold=1)
    for col in rep.columns:
        assert col.delta == pytest.approx(1.0)
        assert col.terms <= 2
        assert col.recon_error < 1e-12
    # 1/sigma spectrum is a single delta: the constant is exactly 1
    assert rep.jr_constants[0] == pytest.approx(1.0, rel=1e-10)


def test_wiener_perturbed_contraction_respects_bound():
    ctx = TruncationContext(2, 5)
    gen = rng()
    spec = VladimirovSpec(1.0, 2)
    lam = multiplier_table(spec, ctx, "integral")
    margin = lam[ctx.norms == 2.0].min()
    bump = gen.normal(size=ctx.N)
    V = 0.1 * margin * bump / np.max(np.abs(bump))
    sym = Symbol(ctx, lam[None, :] + V[:, None])
    rep = wiener_experiment(sym, order=1.0, threshold=1)
    for col in rep.columns:
        assert col.measured_ratio <= col.ratio_bound * 1.05 + 1e-12
        assert col.recon_error < 1e-11
    for r, c in rep.jr_constants.items():
        assert np.isfinite(c) and c > 0


def test_wiener_rejects_vanishing_symbol():
    ctx = TruncationContext(2, 4)
    spec = VladimirovSpec(1.0, 2)
    lam = multiplier_table(spec, ctx, "integral")
    table = np.tile(lam, (ctx.N, 1)).astype(complex)
    table[0, ctx.N // 2] = 0.0  # kill one entry on the norm-2 shell
    with pytest.raises(EllipticityMarginError):
        wiener_experiment(Symbol(ctx, table), order=1.0, threshold=1)
