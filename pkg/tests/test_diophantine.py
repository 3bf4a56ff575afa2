from __future__ import annotations

import math

import pytest
from mpmath import mp, mpf

from ellipsum.arith.diophantine import (
    ShiftVector,
    estimate_type,
    independence_scan,
    parse_shift,
)
from ellipsum.errors import (
    BadToken,
    DimensionMismatch,
    SearchSpaceTooLarge,
    ValidationError,
)


def test_parse_shift_evaluates_named_tokens() -> None:
    alpha = parse_shift("sqrt2-1,sqrt3-1", 2)

    hi, lo = alpha.hi_lo()
    assert hi[0] == pytest.approx(0.41421356237309503)
    assert hi[1] == pytest.approx(0.7320508075688772)
    with mp.workdps(40):
        assert abs(mpf(hi[0]) + mpf(lo[0]) - (mp.sqrt(2) - 1)) < mpf(
            "1e-30"
        )
    assert alpha.spec == "sqrt2-1,sqrt3-1"


def test_parse_shift_rationals_decimals_and_constants() -> None:
    assert parse_shift("0.5,0.5", 2).as_floats().tolist() == [0.5, 0.5]
    with mp.workdps(50):
        third = parse_shift("1/3", 1).comps[0]
        assert abs(third - mpf(1) / 3) < mpf("1e-45")
    assert parse_shift("-0.25", 1).as_floats()[0] == -0.25
    assert float(parse_shift("phi-1", 1).comps[0]) == pytest.approx(
        0.6180339887498949
    )
    assert float(parse_shift("pi-3", 1).comps[0]) == pytest.approx(
        math.pi - 3
    )
    assert parse_shift("0", 3).is_zero


def test_parse_shift_rejects_bad_input() -> None:
    with pytest.raises(BadToken, match="Unknown shift token"):
        parse_shift("sqrtx", 1)
    with pytest.raises(DimensionMismatch):
        parse_shift("0.5", 2)


def test_shift_vector_negation_and_digest() -> None:
    alpha = parse_shift("0.25,0.5", 2)

    neg = alpha.negated()
    assert neg.as_floats().tolist() == [-0.25, -0.5]
    assert alpha.digest != neg.digest
    assert ShiftVector.zero(2).is_zero


def test_golden_ratio_has_type_two() -> None:
    report = estimate_type(parse_shift("phi-1", 1), q_max=10_000)

    assert not report.rational_hit
    assert 2.0 <= report.kappa_hat <= 2.05
    assert report.worst_dist > 0


def test_rational_shift_is_a_rational_hit() -> None:
    report = estimate_type(parse_shift("1/3", 1), q_max=100)

    assert report.rational_hit
    assert report.worst_q == 3
    assert math.isinf(report.kappa_hat)
    assert report.to_dict()["kappa_hat"] is None


def test_every_small_denominator_is_detected() -> None:
    for b in range(2, 12):
        for a in range(1, b):
            alpha = parse_shift(f"{a}/{b}", 1)
            assert estimate_type(alpha, q_max=12).rational_hit


def test_estimate_is_monotone_in_q_max() -> None:
    alpha = parse_shift("sqrt2-1,sqrt3-1", 2)

    kappas = [estimate_type(alpha, q).kappa_hat for q in (500, 2000, 8000)]
    assert kappas == sorted(kappas)
    assert kappas[-1] < 2.0


def test_estimate_is_stable_under_more_digits() -> None:
    alpha = parse_shift("sqrt3-1", 1)

    a = estimate_type(alpha, 2000, dps=50).kappa_hat
    b = estimate_type(alpha, 2000, dps=100).kappa_hat
    assert abs(a - b) < 1e-6


def test_independence_scan_finds_equal_rationals() -> None:
    report = independence_scan(parse_shift("0.5,0.5", 2), coeff_bound=2)

    assert report
    assert report.witness == (1, -1, 0)


def test_independence_scan_certifies_irrational_pairs() -> None:
    assert not independence_scan(parse_shift("sqrt2-1", 1), coeff_bound=10)
    assert not independence_scan(
        parse_shift("sqrt2-1,sqrt3-1", 2), coeff_bound=50
    )


def test_independence_scan_caps_search_space() -> None:
    alpha = parse_shift("sqrt2-1,sqrt3-1,sqrt5-2", 3)

    with pytest.raises(SearchSpaceTooLarge):
        independence_scan(alpha, coeff_bound=200)


def test_scan_bounds_are_validation_errors() -> None:
    alpha = parse_shift("0.5", 1)

    with pytest.raises(ValidationError, match="^qmax: must be >= 2"):
        estimate_type(alpha, 1)
    with pytest.raises(ValidationError, match="^coeff_bound: must be >= 1"):
        independence_scan(alpha, coeff_bound=0)
