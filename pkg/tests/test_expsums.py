from __future__ import annotations

import math

import numpy as np
import pytest

from ellipsum.arith.diophantine import parse_shift
from ellipsum.arith.quadform import build_ctx
from ellipsum.errors import (
    CheckpointOutOfRange,
    SeriesMismatch,
    TruncationExceedsSeries,
)
from ellipsum.spectral import (
    ExpSumSeries,
    abel_block_check,
    boundedness_check,
    mean_square_trace,
    rep_sums,
    variance_series,
)

I2 = [[1, 0], [0, 1]]
GENERIC = "sqrt2-1,sqrt3-1"


def test_rep_sums_of_sums_of_two_squares() -> None:
    series = rep_sums(build_ctx(I2), None, 10)

    assert series.r[0] == 0
    assert series.r[1] == 4
    assert series.r[2] == 4
    assert series.r[3] == 0
    assert series.R_cum[2] == 32
    assert series.p_max == 10


def test_half_integer_twist_is_real() -> None:
    series = rep_sums(build_ctx(I2), parse_shift("0.5,0.5", 2), 200)

    assert series.r[1] == pytest.approx(-4)
    assert np.max(np.abs(series.r.imag)) < 1e-12


def test_series_invariants_for_generic_twist() -> None:
    ctx = build_ctx([[1, 0], [0, 2]])
    alpha = parse_shift(GENERIC, 2)

    series = rep_sums(ctx, alpha, 2000)
    plain = rep_sums(ctx, None, 2000)
    negated = rep_sums(ctx, alpha.negated(), 2000)

    assert np.all(np.diff(series.R_cum) >= 0)
    assert np.all(np.abs(series.r) <= plain.r.real + 1e-9)
    assert np.allclose(negated.r, np.conj(series.r), atol=1e-9)


def test_mean_square_trace_rows_and_bounds() -> None:
    series = rep_sums(build_ctx([[1]]), parse_shift("sqrt2-1", 1), 40000)

    rows = mean_square_trace(series, [100, 40000])
    assert [r.N for r in rows] == [100, 40000]
    assert rows[0].target == pytest.approx(2.0)
    assert rows[1].ratio == pytest.approx(2.0, rel=0.1)
    with pytest.raises(CheckpointOutOfRange):
        mean_square_trace(series, [40001])
    with pytest.raises(CheckpointOutOfRange):
        mean_square_trace(series, [0])


def test_variance_series_single_term() -> None:
    ctx = build_ctx(I2)
    series = rep_sums(ctx, None, 4)

    result = variance_series(ctx, series, 1)

    assert result.value == pytest.approx(16.0)
    assert result.P == 1


def test_variance_series_of_a_zero_series_vanishes() -> None:
    ctx = build_ctx(I2)
    zero = ExpSumSeries.from_values(I2, [0.0] * 50)

    result = variance_series(ctx, zero, 49)

    assert result.value == 0.0
    assert result.tail_bound == 0.0


def test_variance_series_checks_matrix_and_length() -> None:
    ctx = build_ctx([[1, 0], [0, 2]])
    wrong = rep_sums(ctx, None, 10)
    right = rep_sums(ctx.adjugate(), None, 10)

    with pytest.raises(SeriesMismatch):
        variance_series(ctx, wrong, 5)
    with pytest.raises(TruncationExceedsSeries):
        variance_series(ctx, right, 11)


def test_variance_series_is_nondecreasing_in_P() -> None:
    ctx = build_ctx(I2)
    series = rep_sums(ctx, parse_shift(GENERIC, 2), 20000)

    values = [variance_series(ctx, series, P) for P in (1000, 5000, 20000)]
    assert [v.value for v in values] == sorted(v.value for v in values)
    tails = [v.tail_bound for v in values]
    assert tails == sorted(tails, reverse=True)
    assert values[-1].tail_bound / values[-1].value < 0.05


def test_abel_blocks_decay_above_critical_exponent() -> None:
    series = rep_sums(build_ctx(I2), None, 2**14)

    report = abel_block_check(series, 1.5)

    assert report.convergent
    assert math.isfinite(report.C) and report.C > 0
    assert report.blocks[-1].value < report.blocks[3].value
    assert len(report.blocks) == 14

    critical = abel_block_check(series, 1.0)
    assert not critical.convergent
    tail = [blk.value for blk in critical.blocks[6:]]
    assert max(tail) / min(tail) < 4.0


def test_abel_check_of_zero_series() -> None:
    zero = ExpSumSeries.from_values(I2, [0.0] * 64)

    assert abel_block_check(zero, 1.5).C == 0.0


def test_boundedness_check_for_generic_twist() -> None:
    series = rep_sums(build_ctx(I2), parse_shift(GENERIC, 2), 20000)

    assert 0 < boundedness_check(series, start=1000) < 3.0
