from __future__ import annotations

import math
from itertools import product

import numpy as np
import pytest

from ellipsum.arith.ddmath import shifted_qform
from ellipsum.arith.diophantine import parse_shift
from ellipsum.arith.quadform import build_ctx
from ellipsum.errors import BudgetExceeded, RadiusOutOfRange
from ellipsum.lattice import (
    LatticeEnumerator,
    PointBlock,
    bucket_shells,
    build_radii,
    count_upto,
    enumerate_points,
)

I2 = [[1, 0], [0, 1]]


def _collect(ctx, center, R, workers: int = 1) -> list[tuple[int, ...]]:
    seen: list[tuple[int, ...]] = []

    def visit(block: PointBlock) -> None:
        seen.extend(tuple(int(v) for v in row) for row in block.points)

    enumerate_points(ctx, center, R, visit=visit, workers=workers)
    return seen


def _box_scan(ctx, center, R) -> set[tuple[int, ...]]:
    lam = float(np.linalg.eigvalsh(ctx.as_array().astype(float)).min())
    b = int(math.ceil(R / math.sqrt(lam))) + 1
    pts = np.array(list(product(range(-b, b + 1), repeat=ctx.n)))
    M = ctx.as_array()
    if center is None:
        q = ((pts @ M) * pts).sum(axis=1)
        bound = math.floor(R * R + 1e-9 * max(1.0, R * R))
        keep = q <= bound
    else:
        hi, lo = center.hi_lo()
        keep = shifted_qform(M, pts, hi, lo) <= R * R
    return {tuple(int(v) for v in row) for row in pts[keep]}


def test_enumerate_small_balls() -> None:
    ctx = build_ctx(I2)

    assert enumerate_points(ctx, None, 1.0) == 5
    assert enumerate_points(ctx, None, 1.5) == 9
    half = parse_shift("0.5,0.5", 2)
    assert sorted(_collect(ctx, half, 0.71)) == [
        (0, 0),
        (0, 1),
        (1, 0),
        (1, 1),
    ]


@pytest.mark.parametrize(
    "matrix",
    [
        [[1]],
        [[3]],
        [[1, 0], [0, 1]],
        [[2, 1], [1, 2]],
        [[5, 2], [2, 1]],
        [[1, 0, 0], [0, 2, 0], [0, 0, 3]],
        [[2, -1, 0], [-1, 2, -1], [0, -1, 2]],
    ],
)
def test_enumeration_matches_box_scan(matrix) -> None:
    ctx = build_ctx(matrix)
    tokens = ["sqrt2-1", "sqrt3-1", "pi-3"][: ctx.n]
    shift = parse_shift(",".join(tokens), ctx.n)
    for R in (0.5, 1.0, 2.0, math.sqrt(5), 7.3):
        got = _collect(ctx, None, R)
        assert len(got) == len(set(got))
        assert set(got) == _box_scan(ctx, None, R)
        shifted = _collect(ctx, shift, R)
        assert set(shifted) == _box_scan(ctx, shift, R)


def test_enumeration_oracle_at_radius_twenty() -> None:
    ctx = build_ctx([[2, 1], [1, 3]])

    assert set(_collect(ctx, None, 20.0)) == _box_scan(ctx, None, 20.0)


def test_traversal_order_is_lexicographic() -> None:
    ctx = build_ctx([[1, 0], [0, 2]])

    pts = _collect(ctx, None, 3.0)
    keys = [tuple(reversed(p)) for p in pts]
    assert keys == sorted(keys)


def test_parallel_enumeration_matches_serial_order() -> None:
    ctx = build_ctx([[2, 1], [1, 2]])

    assert _collect(ctx, None, 30.0, workers=4) == _collect(ctx, None, 30.0)


def test_shard_split_is_independent_of_workers() -> None:
    ctx = build_ctx(I2)

    walker = LatticeEnumerator(ctx, None, R=40.0)
    shards = walker.shard_ranges
    assert shards[0][0] == -40 and shards[-1][1] == 40
    for (_, hi), (lo, _) in zip(shards, shards[1:]):
        assert lo == hi + 1


def test_budget_cap_rejects_huge_balls() -> None:
    ctx = build_ctx(I2)

    with pytest.raises(BudgetExceeded, match="exceed the cap"):
        enumerate_points(ctx, None, 1e5)
    with pytest.raises(BudgetExceeded):
        enumerate_points(ctx, None, 100.0, cap=1e3)
    assert BudgetExceeded("x").exit_code == 3


def test_build_radii_examples() -> None:
    rm = build_radii(build_ctx(I2), None, 1.0)
    assert rm.radii.tolist() == [0.0, 1.0, 1.0, 1.0, 1.0]

    half = build_radii(build_ctx(I2), parse_shift("0.5,0.5", 2), 1.0)
    assert half.count == 4
    assert np.allclose(half.radii, math.sqrt(0.5))

    assert build_radii(build_ctx([[1, 0], [0, 4]]), None, 2.0).count == 7


def test_count_upto_closed_ball() -> None:
    rm = build_radii(build_ctx(I2), None, 2.0)

    assert count_upto(rm, 1.0) == 5
    assert count_upto(rm, 0.99) == 1
    assert count_upto(rm, 1.5) == 9
    assert count_upto(rm, rm.R_max) == rm.count
    assert count_upto(rm, np.array([0.0, 1.0])).tolist() == [1, 5]
    with pytest.raises(RadiusOutOfRange):
        count_upto(rm, 2.5)
    with pytest.raises(RadiusOutOfRange):
        count_upto(rm, -0.1)


def test_radii_are_sorted_and_bounded() -> None:
    shift = parse_shift("sqrt2-1,sqrt3-1", 2)
    rm = build_radii(build_ctx([[2, 1], [1, 2]]), shift, 60.0, workers=3)

    assert np.all(np.diff(rm.radii) >= 0)
    assert rm.radii[-1] <= rm.R_max
    assert rm.count / (rm.volume * rm.R_max**2) == pytest.approx(1, rel=0.05)
    assert rm == build_radii(build_ctx([[2, 1], [1, 2]]), shift, 60.0)


def test_bucket_shells_examples() -> None:
    plain = bucket_shells(build_ctx(I2), None, 3)
    assert plain.counts.tolist() == [1, 4, 4, 0]
    assert plain.sums[0] == 1

    half = bucket_shells(build_ctx(I2), parse_shift("0.5,0.5", 2), 2)
    assert half.sums[1] == pytest.approx(-4)
    assert np.max(np.abs(half.sums.imag)) < 1e-12

    d12 = bucket_shells(build_ctx([[1, 0], [0, 2]]), None, 3)
    assert d12.counts[1:].tolist() == [2, 2, 4]


def test_shell_counts_match_enumeration() -> None:
    ctx = build_ctx([[2, 1], [1, 3]])
    shift = parse_shift("sqrt2-1,sqrt3-1", 2)

    buckets = bucket_shells(ctx, shift, 500)

    assert int(buckets.counts.sum()) == enumerate_points(
        ctx, None, math.sqrt(500)
    )
    assert np.all(np.abs(buckets.sums) <= buckets.counts + 1e-9)


def test_twisted_shell_sums_match_compensated_sums() -> None:
    ctx = build_ctx([[2, 1], [1, 3]])
    shift = parse_shift("sqrt2-1,sqrt3-1", 2)
    alpha = np.array([math.sqrt(2) - 1, math.sqrt(3) - 1])
    M = np.array(ctx.M)

    buckets = bucket_shells(ctx, shift, 300)

    angles: dict = {}
    for m in product(range(-15, 16), repeat=2):
        q = int(np.array(m) @ M @ np.array(m))
        if q <= 300:
            angles.setdefault(q, []).append(2 * math.pi * (alpha @ m))
    for q in range(301):
        shell = angles.get(q, [])
        expected = complex(
            math.fsum(math.cos(t) for t in shell),
            -math.fsum(math.sin(t) for t in shell),
        )
        assert buckets.counts[q] == len(shell)
        assert abs(buckets.sums[q] - expected) < 1e-12


def test_parallel_buckets_are_bit_identical() -> None:
    ctx = build_ctx(I2)
    shift = parse_shift("sqrt2-1,sqrt3-1", 2)

    serial = bucket_shells(ctx, shift, 4000)
    parallel = bucket_shells(ctx, shift, 4000, workers=4)

    assert serial == parallel


def test_enumerator_rejects_bad_radius() -> None:
    with pytest.raises(ValueError, match="positive"):
        LatticeEnumerator(build_ctx(I2), None, R=0.0)
