from __future__ import annotations

import numpy as np
import pytest

from ellipsum.arith.diophantine import parse_shift
from ellipsum.arith.quadform import build_ctx
from ellipsum.averaging import (
    AveragingKernel,
    average_piecewise,
    average_sampled,
    average_step,
    bump_density,
    default_kernel,
)
from ellipsum.averaging.kernel import check_normalized
from ellipsum.errors import SupportExceedsRadii, ValidationError
from ellipsum.lattice import build_radii
from ellipsum.spectral import DeviationEvaluator

I2 = [[1, 0], [0, 1]]


def _one(t: np.ndarray) -> np.ndarray:
    return np.ones_like(t)


def _counts(R: float, alpha: str = "0"):
    ctx = build_ctx(I2)
    return build_radii(ctx, parse_shift(alpha, 2), R)


def test_bump_kernel_invariants() -> None:
    k = default_kernel()

    check_normalized(k)
    assert k.cdf(1.0) == 0.0
    assert k.cdf(2.0) == 1.0
    assert k.cdf(0.5) == 0.0 and k.cdf(7.0) == 1.0
    assert k.cdf(1.5) == pytest.approx(0.5, abs=1e-8)
    assert k.moment(1) == pytest.approx(1.5, abs=1e-12)
    assert k.mu(0.99) == 0.0 and k.mu(2.0) == 0.0
    assert k.cdf_error < 1e-8

    grid = np.linspace(0.9, 2.1, 500)
    assert np.all(np.diff(k.cdf(grid)) >= 0)


def test_kernel_rejects_bad_support() -> None:
    with pytest.raises(ValidationError):
        AveragingKernel(0.0, 1.0)
    with pytest.raises(ValidationError):
        AveragingKernel(2.0, 1.0)
    with pytest.raises(ValidationError, match="integrates to zero"):
        AveragingKernel(1.0, 2.0, density=lambda t: np.zeros_like(t))


@pytest.mark.parametrize("T", [1.0, 7.5, 100.0, 3000.0])
def test_average_of_one_is_one(T: float) -> None:
    for kernel in (default_kernel(), AveragingKernel(0.5, 3.0)):
        res = average_piecewise(_one, T, kernel)
        assert res.value == pytest.approx(1.0, abs=1e-10)
        assert res.est_error >= 0


def test_first_moment_scales_with_T() -> None:
    k = AveragingKernel(0.5, 3.0)

    for T in (1.0, 40.0, 900.0):
        res = average_piecewise(lambda t: t, T, k)
        assert res.value == pytest.approx(k.moment(1) * T, rel=1e-10)


def test_scaled_density_gives_identical_averages() -> None:
    raw = bump_density(1.0, 2.0)
    doubled = AveragingKernel(1.0, 2.0, density=lambda t: 2.0 * raw(t))
    plain = default_kernel()
    rm = _counts(60.0, "sqrt2-1,sqrt3-1")
    ev = DeviationEvaluator(rm)

    a = average_piecewise(ev.F, 30.0, plain, rm.radii, limit=rm.R_max)
    b = average_piecewise(ev.F, 30.0, doubled, rm.radii, limit=rm.R_max)

    assert b.value == pytest.approx(a.value, rel=1e-14, abs=1e-15)
    assert doubled.Z == pytest.approx(2.0 * plain.Z, rel=1e-15)


def test_step_closed_form_matches_gauss_rule() -> None:
    rm = _counts(40.0)
    ev = DeviationEvaluator(rm)
    k = default_kernel()

    closed = average_step(rm.radii, 20.0, k, limit=rm.R_max)
    gauss = average_piecewise(
        lambda t: np.asarray(ev.N(t), dtype=float),
        20.0,
        k,
        rm.radii,
        limit=rm.R_max,
    )

    assert closed.value == pytest.approx(gauss.value, rel=1e-8)
    assert closed.breakpoint_count == gauss.breakpoint_count


def test_step_average_matches_fine_midpoint_rule() -> None:
    rm = _counts(200.0)
    ev = DeviationEvaluator(rm)
    k = default_kernel()

    closed = average_step(rm.radii, 100.0, k, limit=rm.R_max)
    riemann = average_sampled(
        lambda t: np.asarray(ev.N(t), dtype=float), 100.0, k, 10**6
    )

    assert closed.value == pytest.approx(riemann.value, rel=1e-6)


def test_support_must_lie_inside_radii() -> None:
    rm = _counts(30.0)
    ev = DeviationEvaluator(rm)

    with pytest.raises(SupportExceedsRadii):
        average_piecewise(ev.F, 20.0, default_kernel(), limit=rm.R_max)
    with pytest.raises(SupportExceedsRadii):
        average_step(rm.radii, 15.0, default_kernel(), limit=14.0)
    with pytest.raises(SupportExceedsRadii):
        average_piecewise(
            _one, 14.9, default_kernel(), limit=30.0, headroom=0.5
        )
    with pytest.raises(ValidationError):
        average_piecewise(_one, 0.0, default_kernel())


def test_zero_integrand_averages_to_zero() -> None:
    res = average_piecewise(np.zeros_like, 50.0, default_kernel())

    assert res.value == 0.0
    assert res.est_error == 0.0


def test_worker_count_does_not_change_the_sum() -> None:
    rm = _counts(200.0, "sqrt2-1,sqrt3-1")
    ev = DeviationEvaluator(rm)
    k = default_kernel()

    serial = average_piecewise(ev.F, 100.0, k, rm.radii, limit=rm.R_max)
    threaded = average_piecewise(
        ev.F, 100.0, k, rm.radii, limit=rm.R_max, workers=4
    )

    assert serial == threaded
    assert serial.breakpoint_count > 65536


def test_sampled_average_reports_resolution_gap() -> None:
    res = average_sampled(lambda t: np.sin(t), 10.0, default_kernel(), 4000)

    assert res.est_error < 1e-5
    with pytest.raises(ValidationError):
        average_sampled(_one, 10.0, default_kernel(), 1)
