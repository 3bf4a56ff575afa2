"""
Twisted representation numbers: sums of e(m . alpha) over the shells
{m : Q_M(m) = p}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from ellipsum.arith.ddmath import phase_mod1
from ellipsum.arith.diophantine import ShiftVector
from ellipsum.arith.quadform import QuadFormCtx
from ellipsum.errors import ValidationError
from ellipsum.lattice.enumerate import (
    DEFAULT_POINT_CAP,
    LatticeEnumerator,
    PointBlock,
)
from ellipsum.utils.logging import logger

_Part = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True, eq=False)
class ShellBuckets:
    """
    Per-shell accumulators, indexed 0..p_max.

    Index 0 holds the origin (count 1, sum 1).

    :ivar p_max (int): Largest shell.
    :ivar sums (np.ndarray): complex128 sums of e(m . alpha).
    :ivar counts (np.ndarray): int64 representation numbers r[M,0](p).
    """

    p_max: int
    sums: np.ndarray
    counts: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ShellBuckets):
            return NotImplemented
        return (
            self.p_max == other.p_max
            and np.array_equal(self.sums, other.sums)
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None  # type: ignore[assignment]


def bucket_shells(
    ctx: QuadFormCtx,
    alpha: Optional[ShiftVector],
    p_max: int,
    workers: int = 1,
    cap: float = DEFAULT_POINT_CAP,
) -> ShellBuckets:
    """
    Accumulate e(m . alpha) = exp(-2 pi i m . alpha) by shell.

    Points are enumerated around the origin with exact integer Q values;
    phases are reduced modulo 1 in double-double before the trig calls.
    Per-shard arrays are concatenated in shard order and stably sorted by
    shell. Each shell is then summed pairwise with np.add.reduceat, so the
    result does not depend on the worker count.

    :param ctx: Quadratic form.
    :type ctx: QuadFormCtx
    :param alpha: Twist (None or zero for plain counts).
    :type alpha: Optional[ShiftVector]
    :param p_max: Largest shell (>= 1).
    :type p_max: int
    :param workers: Worker threads.
    :type workers: int
    :param cap: Maximum estimated point count.
    :type cap: float
    :return: Shell buckets.
    :rtype: ShellBuckets
    :raises BudgetExceeded: If the ball is too large.
    """
    if p_max < 1:
        raise ValidationError(f"p_max must be >= 1, got {p_max}")
    walker = LatticeEnumerator(ctx, None, radius_sq=int(p_max), cap=cap)
    twisted = alpha is not None and not alpha.is_zero
    if twisted:
        assert alpha is not None
        a_hi, a_lo = alpha.hi_lo()

    def reduce(blocks: Iterator[PointBlock]) -> _Part:
        qs: List[np.ndarray] = []
        phases: List[np.ndarray] = []
        for block in blocks:
            qs.append(block.qvals)
            if twisted:
                phases.append(phase_mod1(block.points, a_hi, a_lo))
        if not qs:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        return (
            np.concatenate(qs),
            np.concatenate(phases) if twisted else np.zeros(0),
        )

    parts = walker.map_shards(reduce, workers=workers)
    size = p_max + 1
    q = (
        np.concatenate([p[0] for p in parts])
        if parts
        else np.zeros(0, dtype=np.int64)
    )
    counts = np.bincount(q, minlength=size).astype(np.int64)
    if twisted and q.size:
        order = np.argsort(q, kind="stable")
        theta = 2.0 * np.pi * np.concatenate([p[1] for p in parts])[order]
        q = q[order]
        starts = np.flatnonzero(np.diff(q, prepend=-1))
        sums = np.zeros(size, dtype=np.complex128)
        sums.real[q[starts]] = np.add.reduceat(np.cos(theta), starts)
        sums.imag[q[starts]] = np.add.reduceat(-np.sin(theta), starts)
    else:
        sums = counts.astype(np.complex128)
    logger.debug(f"Bucketed {int(counts.sum())} points into {size} shells")
    return ShellBuckets(p_max=int(p_max), sums=sums, counts=counts)
