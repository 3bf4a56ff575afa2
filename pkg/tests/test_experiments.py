from __future__ import annotations

import math

import numpy as np
import pytest

from ellipsum.arith.diophantine import parse_shift
from ellipsum.arith.quadform import build_ctx
from ellipsum.averaging import (
    EpsRule,
    default_kernel,
    diag_shell_variance,
    diag_variance,
    fit_trend,
    is_decaying,
    mean_F,
    mean_S,
    shell_block_sum,
    shell_stability,
    spectral_error,
    truncated_shell_diagonal,
    var_F,
    var_S,
)
from ellipsum.errors import (
    NonpositiveEps,
    SeriesMismatch,
    SupportExceedsRadii,
    TruncationExceedsSeries,
    ValidationError,
)
from ellipsum.lattice import build_radii
from ellipsum.spectral import ExpSumSeries, SpectralEvaluator, rep_sums

I2 = [[1, 0], [0, 1]]
GENERIC = "sqrt2-1,sqrt3-1"


def _generic(M=I2):
    ctx = build_ctx(M)
    return ctx, parse_shift(GENERIC, ctx.n)


def test_eps_rule() -> None:
    assert EpsRule(0.5)(400.0) == pytest.approx(0.05)
    assert EpsRule(2.0)(10.0) == pytest.approx(0.01)
    assert not EpsRule(2.0).in_variance_regime
    with pytest.raises(ValidationError):
        EpsRule(0.0)


def test_mean_F_reuses_radii_and_checks_coverage() -> None:
    ctx, alpha = _generic()
    rm = build_radii(ctx, alpha, 80.0)

    rows = mean_F(ctx, alpha, [10.0, 20.0, 40.0], rm=rm)

    assert [r.T for r in rows] == [10.0, 20.0, 40.0]
    assert all(r.est_error >= 0 for r in rows)
    assert all(abs(r.value) < 3.0 for r in rows)
    assert mean_F(ctx, alpha, [], rm=rm) == []
    with pytest.raises(SupportExceedsRadii):
        mean_F(ctx, alpha, [50.0], rm=rm)
    with pytest.raises(SeriesMismatch):
        mean_F(ctx, None, [10.0], rm=rm)


def test_rational_center_is_computable() -> None:
    ctx = build_ctx(I2)

    rows = mean_F(ctx, None, [20.0])

    assert math.isfinite(rows[0].value)


def test_is_decaying() -> None:
    ctx, alpha = _generic()
    rows = mean_F(ctx, alpha, [10.0, 20.0])
    assert is_decaying(rows[:1])
    assert is_decaying(sorted(rows, key=lambda r: -abs(r.value)))


def test_var_F_report_fields() -> None:
    ctx, alpha = _generic()

    report = var_F(ctx, alpha, 40.0, P=5000, K=8.0)

    assert report.value >= report.mean**2
    assert report.target > 0
    assert report.ratio == pytest.approx(report.value / report.target)
    assert report.tail_bound < report.target
    assert report.diag_spectral is not None
    assert 0 < report.diag_spectral < 2 * report.target
    assert set(report.to_dict()) >= {"value", "target", "ratio", "est_error"}


def test_var_S_checks_the_width_regime() -> None:
    ctx, alpha = _generic()

    with pytest.raises(ValidationError, match="gamma"):
        var_S(ctx, alpha, 30.0, EpsRule(1.5))

    report = var_S(ctx, alpha, 30.0, EpsRule(0.5))
    assert report.eps == pytest.approx(30.0**-0.5)
    assert report.target == pytest.approx(2 * math.pi)
    assert report.value >= report.mean_S**2
    assert report.est_error >= 0


def test_mean_S_allows_thin_shells() -> None:
    ctx, alpha = _generic()

    res = mean_S(ctx, alpha, 30.0, EpsRule(1.5))

    assert math.isfinite(res.value)
    assert res.breakpoint_count > 0


def test_shell_stability_reports_both_widths() -> None:
    ctx, alpha = _generic()

    report = shell_stability(ctx, alpha, 30.0, 0.2)

    assert report.value > 0 and report.half_value > 0
    assert report.rel_change == pytest.approx(
        abs(report.half_value - report.value) / report.value
    )


def test_diag_variance_matches_direct_sum() -> None:
    ctx = build_ctx([[1, 0], [0, 2]])
    r = [0.0] + [1.0] * 40
    series = ExpSumSeries.from_values(ctx.adjM, r)

    value = diag_variance(ctx, series, K=4.0)

    d = 2.0
    expected = sum(
        p**-1.5 * math.exp(-2 * math.pi * p / (16 * d))
        for p in range(1, 33)
    )
    assert value == pytest.approx(math.sqrt(d) * expected / (2 * math.pi**2))


def test_diag_shell_variance_of_zero_series_is_zero() -> None:
    ctx = build_ctx(I2)
    zero = ExpSumSeries.from_values(I2, [0.0] * 100)

    assert diag_shell_variance(ctx, zero, 0.1, K=4.0) == 0.0
    with pytest.raises(NonpositiveEps):
        diag_shell_variance(ctx, zero, 0.0, K=4.0)
    with pytest.raises(TruncationExceedsSeries):
        diag_shell_variance(ctx, zero, 0.1, K=8.0)


def test_diag_shell_variance_matches_direct_sum() -> None:
    ctx = build_ctx(I2)
    series = ExpSumSeries.from_values(I2, [0.0, 2.0, 1.0, 0.5])
    eps, K = 0.3, 1.6

    value = diag_shell_variance(ctx, series, eps, K)

    expected = 0.0
    for p, rp in ((1, 2.0), (2, 1.0), (3, 0.5)):
        hat = math.exp(-math.pi * p / K**2)
        expected += (
            math.sin(math.pi * eps * math.sqrt(p)) ** 2
            * rp**2
            * p**-1.5
            * hat**2
        )
    assert value == pytest.approx(2 * expected / (eps * math.pi**2))


def test_shell_block_sum_tracks_volume_growth() -> None:
    ctx, alpha = _generic()
    series = rep_sums(ctx, alpha, 40000)

    value, target = shell_block_sum(series, 0.01, 1.0, 4.0)

    assert target == pytest.approx(3 * math.pi)
    assert value == pytest.approx(target, rel=0.1)
    with pytest.raises(TruncationExceedsSeries):
        shell_block_sum(series, 0.005, 1.0, 4.0)
    with pytest.raises(ValidationError):
        shell_block_sum(series, 0.01, 4.0, 1.0)


def test_truncated_shell_diagonal_approaches_its_limit() -> None:
    ctx, alpha = _generic()
    series = rep_sums(ctx.adjugate(), alpha, 10000)

    value, target = truncated_shell_diagonal(ctx, series, 0.02, 4.0)

    assert target > 0
    assert value == pytest.approx(target, rel=0.25)
    with pytest.raises(TruncationExceedsSeries):
        truncated_shell_diagonal(ctx, series, 0.01, 4.0)
    with pytest.raises(SeriesMismatch):
        truncated_shell_diagonal(
            build_ctx([[1, 0], [0, 2]]), series, 0.02, 4.0
        )


def test_spectral_error_shrinks_with_K() -> None:
    ctx, alpha = _generic()
    rm = build_radii(ctx, alpha, 40.0)
    adj = rep_sums(ctx, alpha, 1100)
    kernel = default_kernel()

    errors = []
    for K in (2.0, 4.0, 16.0):
        sp = SpectralEvaluator.for_form(ctx, adj, K)
        res = spectral_error(rm, sp, 20.0, kernel, samples=4000)
        assert res.est_error >= 0
        errors.append(res.value)

    assert errors[-1] < errors[0]
    with pytest.raises(SupportExceedsRadii):
        spectral_error(rm, sp, 30.0, kernel)


def test_fit_trend() -> None:
    K = [4.0, 8.0, 16.0]
    exact = [3.0 * 50.0 / k for k in K]

    fit = fit_trend(K, exact, 50.0, 2)
    assert fit.C == pytest.approx(3.0)
    assert fit.max_factor == pytest.approx(1.0)

    noisy = [exact[0] * 2.0, exact[1], exact[2] / 2.0]
    fit = fit_trend(K, noisy, 50.0, 2)
    assert fit.C == pytest.approx(3.0)
    assert fit.max_factor == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        fit_trend(K, [1.0, 0.0, 1.0], 50.0, 2)


@pytest.mark.slow
def test_mean_F_decays_for_generic_center() -> None:
    ctx, alpha = _generic()

    rows = mean_F(ctx, alpha, [100.0, 200.0, 400.0, 800.0], workers=4)

    assert is_decaying(rows)
    assert abs(rows[-1].value) < 0.1


@pytest.mark.slow
@pytest.mark.parametrize("M", [I2, [[1, 0], [0, 2]]])
def test_variance_of_F_matches_constant(M) -> None:
    ctx, alpha = _generic(M)

    report = var_F(ctx, alpha, 800.0, P=100_000, workers=4)

    assert 0.8 <= report.ratio <= 1.2


@pytest.mark.slow
def test_variance_of_S_matches_volume() -> None:
    ctx, alpha = _generic()

    report = var_S(ctx, alpha, 800.0, EpsRule(0.5), workers=4)

    assert 0.8 <= report.ratio <= 1.2


@pytest.mark.slow
def test_variance_of_S_in_three_dimensions() -> None:
    ctx = build_ctx([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    alpha = parse_shift("sqrt2-1,sqrt3-1,sqrt5-2", 3)

    report = var_S(ctx, alpha, 40.0, EpsRule(0.5), workers=4)

    assert report.target == pytest.approx(4 * math.pi)
    assert 0.5 <= report.ratio <= 2.0


@pytest.mark.slow
def test_diag_shell_variance_near_volume() -> None:
    ctx, alpha = _generic()
    zeta = 0.25
    adj = rep_sums(ctx.adjugate(), alpha, int(500 ** (2 + zeta)) + 1)

    value = diag_shell_variance(ctx, adj, 0.02, 500.0, zeta=zeta)

    assert value == pytest.approx(2 * math.pi, rel=0.15)
