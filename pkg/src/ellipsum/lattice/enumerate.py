"""
Enumeration of integer points in a (possibly shifted) ellipsoid.

The walk is a Cholesky-triangular recursive descent (Fincke-Pohst): with
M = L L^T the form splits as a sum of squares of (L^T y)_i, whose i-th
term only involves y_i..y_{n-1}. Coordinates are fixed from the last one
down to the second; every admissible prefix yields one row, an integer
interval for the first coordinate. Rows are materialized in numpy chunks
and filtered by the exact membership test.

Shards split the range of the last coordinate into a fixed number of
contiguous pieces. The split depends only on the ellipsoid, never on the
worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import (
    Callable,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
)

import numpy as np

from ellipsum.arith.ddmath import shifted_qform
from ellipsum.arith.diophantine import ShiftVector
from ellipsum.arith.quadform import QuadFormCtx
from ellipsum.errors import BudgetExceeded, ValidationError
from ellipsum.utils.logging import logger
from ellipsum.utils.workers import ShardPool

DEFAULT_POINT_CAP = 5e8
DEFAULT_SHARDS = 16
CHUNK_POINTS = 1 << 18
GUARD = 1e-9
_SLACK = 1e-6

T = TypeVar("T")


@dataclass(frozen=True)
class PointBlock:
    """
    Consecutive points of the traversal.

    :ivar points (np.ndarray): Integer points, shape (k, n), int64.
    :ivar qvals (np.ndarray): Q_M(m - center); int64 when the center is
        zero, float64 otherwise.
    """

    points: np.ndarray
    qvals: np.ndarray

    def __len__(self) -> int:
        return int(self.points.shape[0])


def integer_bound(R: float) -> int:
    """
    Integer bound on Q_M(m) for an unshifted ball of radius R.

    :param R: Radius.
    :type R: float
    :return: floor(R^2 + 1e-9 max(1, R^2)).
    :rtype: int
    """
    r2 = R * R
    return int(math.floor(r2 + GUARD * max(1.0, r2)))


class LatticeEnumerator:
    """
    Points m in Z^n with Q_M(m - center) <= R^2.
    """

    def __init__(
        self,
        ctx: QuadFormCtx,
        center: Optional[ShiftVector] = None,
        R: Optional[float] = None,
        radius_sq: Optional[int] = None,
        cap: float = DEFAULT_POINT_CAP,
        shards: int = DEFAULT_SHARDS,
    ):
        """
        :param ctx: Quadratic form.
        :type ctx: QuadFormCtx
        :param center: Center; None or a zero shift gives the exact path.
        :type center: Optional[ShiftVector]
        :param R: Radius (> 0). Ignored when radius_sq is given.
        :type R: Optional[float]
        :param radius_sq: Exact integer bound on Q_M(m), unshifted only.
        :type radius_sq: Optional[int]
        :param cap: Maximum estimated point count.
        :type cap: float
        :param shards: Number of shards of the last coordinate range.
        :type shards: int
        :raises BudgetExceeded: If volume * R^n exceeds cap.
        """
        self.ctx = ctx
        self.n = ctx.n
        self.exact = center is None or center.is_zero
        if radius_sq is not None:
            if not self.exact:
                raise ValidationError("radius_sq requires a zero center")
            if radius_sq < 0:
                raise ValidationError(f"radius_sq={radius_sq} is negative")
            self.bound_int: Optional[int] = int(radius_sq)
            self.bound = float(radius_sq)
        else:
            if R is None or not R > 0:
                raise ValidationError(f"Radius must be positive, got {R}")
            self.bound_int = integer_bound(R) if self.exact else None
            self.bound = float(R) * float(R)

        estimate = ctx.volume * self.bound ** (self.n / 2.0)
        if estimate > cap:
            raise BudgetExceeded(
                f"Estimated {estimate:.3g} lattice points exceed the cap "
                f"{cap:.3g} (radius^2={self.bound:.6g}, n={self.n})"
            )
        self.estimate = estimate

        if self.exact:
            self._c_hi = np.zeros(self.n)
            self._c_lo = np.zeros(self.n)
        else:
            assert center is not None
            self._c_hi, self._c_lo = center.hi_lo()
        self._U = np.ascontiguousarray(ctx.chol.T)
        self._M = ctx.as_array()
        self._search = self.bound * (1.0 + GUARD) + GUARD
        self._shards = self._split_outer(max(1, int(shards)))

    def _interval(
        self, i: int, y: Sequence[float], rem: float
    ) -> Tuple[int, int]:
        U = self._U
        s = 0.0
        for j in range(i + 1, self.n):
            s += U[i, j] * y[j]
        r = math.sqrt(rem) if rem > 0 else 0.0
        c = self._c_hi[i]
        lo = (-r - s) / U[i, i] + c
        hi = (r - s) / U[i, i] + c
        return math.ceil(lo - _SLACK), math.floor(hi + _SLACK)

    def _split_outer(self, shards: int) -> List[Tuple[int, int]]:
        y = [0.0] * self.n
        lo, hi = self._interval(self.n - 1, y, self._search)
        if hi < lo:
            return []
        count = hi - lo + 1
        pieces = min(shards, count)
        edges = [lo + (count * k) // pieces for k in range(pieces + 1)]
        return [(edges[k], edges[k + 1] - 1) for k in range(pieces)]

    @property
    def shard_ranges(self) -> List[Tuple[int, int]]:
        """Ranges of the last coordinate, in merge order."""
        return list(self._shards)

    def _rows(
        self, shard: Tuple[int, int]
    ) -> Iterator[Tuple[int, int, Tuple[int, ...]]]:
        """Rows (lo, hi, (x_1..x_{n-1})) in lexicographic order."""
        n = self.n
        U = self._U
        c = self._c_hi
        x = [0] * n
        y = [0.0] * n

        def descend(i: int, rem: float) -> Iterator[Tuple[int, int, tuple]]:
            lo, hi = self._interval(i, y, rem)
            if i == n - 1:
                lo, hi = max(lo, shard[0]), min(hi, shard[1])
            if lo > hi:
                return
            if i == 0:
                yield lo, hi, tuple(x[1:])
                return
            s = 0.0
            for j in range(i + 1, n):
                s += U[i, j] * y[j]
            for xi in range(lo, hi + 1):
                x[i] = xi
                y[i] = xi - c[i]
                term = U[i, i] * y[i] + s
                yield from descend(i - 1, rem - term * term)

        yield from descend(n - 1, self._search)

    def _materialize(
        self, rows: List[Tuple[int, int, Tuple[int, ...]]]
    ) -> np.ndarray:
        lo = np.array([r[0] for r in rows], dtype=np.int64)
        lengths = np.array([r[1] - r[0] + 1 for r in rows], dtype=np.int64)
        total = int(lengths.sum())
        starts = np.cumsum(lengths) - lengths
        first = np.arange(total, dtype=np.int64) - np.repeat(starts, lengths)
        first += np.repeat(lo, lengths)
        pts = np.empty((total, self.n), dtype=np.int64)
        pts[:, 0] = first
        if self.n > 1:
            fixed = np.array([r[2] for r in rows], dtype=np.int64)
            pts[:, 1:] = np.repeat(fixed, lengths, axis=0)
        return pts

    def _filter(self, pts: np.ndarray) -> PointBlock:
        if self.exact:
            q = ((pts @ self._M) * pts).sum(axis=1)
            keep = q <= self.bound_int
        else:
            q = shifted_qform(self._M, pts, self._c_hi, self._c_lo)
            keep = q <= self.bound
        return PointBlock(points=pts[keep], qvals=q[keep])

    def iter_blocks(self, shard: Tuple[int, int]) -> Iterator[PointBlock]:
        """
        Points of one shard in traversal order, in chunks.

        :param shard: Range of the last coordinate.
        :type shard: Tuple[int, int]
        :return: Non-empty point blocks.
        :rtype: Iterator[PointBlock]
        """
        pending: List[Tuple[int, int, Tuple[int, ...]]] = []
        size = 0
        for row in self._rows(shard):
            pending.append(row)
            size += row[1] - row[0] + 1
            if size >= CHUNK_POINTS:
                block = self._filter(self._materialize(pending))
                pending, size = [], 0
                if len(block):
                    yield block
        if pending:
            block = self._filter(self._materialize(pending))
            if len(block):
                yield block

    def map_shards(
        self, fn: Callable[[Iterator[PointBlock]], T], workers: int = 1
    ) -> List[T]:
        """
        Apply a per-shard reducer and return its results in shard order.

        :param fn: Reducer consuming the blocks of one shard.
        :type fn: Callable[[Iterator[PointBlock]], T]
        :param workers: Worker threads.
        :type workers: int
        :return: One result per shard.
        :rtype: List[T]
        """
        pool: ShardPool = ShardPool(
            lambda shard: fn(self.iter_blocks(shard)), workers=workers
        )
        return pool.map(self._shards)

    def blocks(self, workers: int = 1) -> Iterator[PointBlock]:
        """All blocks in global traversal order."""
        if workers <= 1:
            for shard in self._shards:
                yield from self.iter_blocks(shard)
            return
        for shard_blocks in self.map_shards(list, workers=workers):
            yield from shard_blocks


def enumerate_points(
    ctx: QuadFormCtx,
    center: Optional[ShiftVector],
    R: float,
    visit: Optional[Callable[[PointBlock], None]] = None,
    cap: float = DEFAULT_POINT_CAP,
    workers: int = 1,
) -> int:
    """
    Visit every integer point with Q_M(m - center) <= R^2 exactly once.

    Membership is decided in integers when the center is zero (bound
    floor(R^2 + 1e-9 max(1, R^2))) and on the double-double value of
    Q_M(m - alpha) otherwise; the search intervals carry a relative guard
    band of 1e-9 so no boundary candidate is skipped. The visitor receives
    blocks in lexicographic traversal order (last coordinate outermost).

    :param ctx: Quadratic form.
    :type ctx: QuadFormCtx
    :param center: Center or None for the origin.
    :type center: Optional[ShiftVector]
    :param R: Radius (> 0).
    :type R: float
    :param visit: Callback receiving point blocks.
    :type visit: Optional[Callable[[PointBlock], None]]
    :param cap: Maximum estimated point count.
    :type cap: float
    :param workers: Worker threads.
    :type workers: int
    :return: Number of points visited.
    :rtype: int
    :raises BudgetExceeded: If volume * R^n exceeds cap.
    """
    walker = LatticeEnumerator(ctx, center, R=R, cap=cap)
    total = 0
    for block in walker.blocks(workers=workers):
        total += len(block)
        if visit is not None:
            visit(block)
    logger.debug(
        f"Enumerated {total} points (n={ctx.n}, R={R:.6g}, "
        f"estimate={walker.estimate:.4g})"
    )
    return total
