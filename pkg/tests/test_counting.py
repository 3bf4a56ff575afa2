from __future__ import annotations

import math

import numpy as np
import pytest

from ellipsum.arith.diophantine import parse_shift
from ellipsum.arith.quadform import build_ctx
from ellipsum.errors import (
    NonpositiveEps,
    RadiusOutOfRange,
    SeriesMismatch,
    TruncationExceedsSeries,
    ValidationError,
)
from ellipsum.lattice import build_radii
from ellipsum.spectral import (
    F,
    F_K0,
    S,
    BumpMollifier,
    DeviationEvaluator,
    ExpSumSeries,
    SpectralEvaluator,
    rep_sums,
)

I2 = [[1, 0], [0, 1]]


def _evaluator(M=I2, alpha=None, R_max: float = 10.0, allowance=0.0):
    ctx = build_ctx(M)
    shift = parse_shift(alpha, ctx.n) if alpha else None
    return DeviationEvaluator(build_radii(ctx, shift, R_max), allowance)


def test_F_and_S_at_small_radii() -> None:
    ev = _evaluator()

    assert F(ev, 0.5) == pytest.approx(
        (1 - math.pi * 0.25) / math.sqrt(0.5)
    )
    assert S(ev, 0.5, 0.6) == pytest.approx(
        (4 - math.pi * (1.1**2 - 0.25)) / (math.sqrt(0.6) * math.sqrt(0.5))
    )
    assert ev.N(1.0) == 5
    assert isinstance(F(ev, 0.5), float)


def test_F_jumps_by_the_shell_count() -> None:
    ev = _evaluator()
    r = math.sqrt(2.0)

    jump = F(ev, r + 1e-9) - F(ev, r - 1e-9)

    assert jump == pytest.approx(4 / r**0.5, rel=1e-6)


def test_F_is_vectorized() -> None:
    ev = _evaluator(alpha="sqrt2-1,sqrt3-1")
    t = np.linspace(1.0, 9.0, 17)

    values = F(ev, t)

    assert values.shape == t.shape
    assert values[3] == pytest.approx(F(ev, float(t[3])))


def test_S_splits_into_difference_quotient_and_correction() -> None:
    ev = _evaluator(M=[[2, 1], [1, 3]], alpha="sqrt2-1,sqrt3-1", R_max=30)
    t = np.linspace(5.0, 25.0, 41)
    eps = 0.7

    diff, corr = ev.decomposition(t, eps)

    assert np.allclose(diff + corr, S(ev, t, eps), rtol=1e-10, atol=1e-10)


def test_radius_checks() -> None:
    ev = _evaluator(R_max=5.0)

    with pytest.raises(RadiusOutOfRange):
        F(ev, 0.0)
    with pytest.raises(RadiusOutOfRange):
        F(ev, 5.5)
    with pytest.raises(RadiusOutOfRange):
        S(ev, 4.8, 0.5)
    with pytest.raises(NonpositiveEps):
        S(ev, 1.0, 0.0)
    with pytest.raises(NonpositiveEps):
        ev.P(1.0, -1.0)


def test_spectral_single_shell_value() -> None:
    series = ExpSumSeries.from_values(I2, [0.0, 1.0])
    sp = SpectralEvaluator(series, 1, K=1.0)

    assert sp.p_cut == 1
    assert F_K0(sp, 0.375) == pytest.approx(math.exp(-math.pi) / math.pi)


def test_spectral_truncation_and_matrix_checks() -> None:
    ctx = build_ctx([[1, 0], [0, 2]])
    series = rep_sums(ctx.adjugate(), None, 5)

    with pytest.raises(TruncationExceedsSeries):
        SpectralEvaluator(series, ctx.detM, K=2.5)
    with pytest.raises(SeriesMismatch):
        SpectralEvaluator.for_form(ctx, rep_sums(ctx, None, 5), K=1.0)
    with pytest.raises(ValidationError):
        SpectralEvaluator(series, ctx.detM, K=0.5)
    assert SpectralEvaluator.for_form(ctx, series, K=1.5).p_cut == 2


def test_imaginary_series_is_rejected() -> None:
    series = ExpSumSeries.from_values(I2, [0.0, 1j])
    sp = SpectralEvaluator(series, 1, K=1.0)

    with pytest.raises(ArithmeticError):
        sp.F_K0(0.375)


def test_twisted_spectral_sum_is_real() -> None:
    ctx = build_ctx(I2)
    alpha = parse_shift("sqrt2-1,sqrt3-1", 2)
    sp = SpectralEvaluator.for_form(ctx, rep_sums(ctx, alpha, 400), K=8.0)

    values = sp.F_K0(np.linspace(10.0, 20.0, 50))

    assert np.all(np.isfinite(values))
    assert sp.last_imag_residue < 1e-9


def test_S_K0_is_difference_quotient() -> None:
    series = rep_sums(build_ctx(I2), None, 100)
    sp = SpectralEvaluator(series, 1, K=5.0, mollifier=BumpMollifier(2))
    t = np.array([3.0, 4.5])

    expected = (sp.F_K0(t + 0.2) - sp.F_K0(t)) / math.sqrt(0.2)

    assert np.allclose(sp.S_K0(t, 0.2), expected)
    with pytest.raises(NonpositiveEps):
        sp.S_K0(t, 0.0)


def test_spectral_sum_tracks_deviation_on_average() -> None:
    ctx = build_ctx(I2)
    alpha = parse_shift("sqrt2-1,sqrt3-1", 2)
    ev = DeviationEvaluator(build_radii(ctx, alpha, 60.0))
    sp = SpectralEvaluator.for_form(ctx, rep_sums(ctx, alpha, 1100), K=16.0)
    t = np.linspace(30.0, 60.0, 6001)

    f = ev.F(t)
    mismatch = np.mean((f - sp.F_K0(t)) ** 2)

    assert mismatch < 0.5 * np.mean(f**2)
