"""
Sorted elliptic radii |m - alpha|_M of the points of a ball.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Union

import numpy as np

from ellipsum.arith.diophantine import ShiftVector
from ellipsum.arith.quadform import IntMatrix, QuadFormCtx
from ellipsum.errors import RadiusOutOfRange
from ellipsum.lattice.cache_format import CacheHeader, CacheKind
from ellipsum.lattice.enumerate import (
    DEFAULT_POINT_CAP,
    LatticeEnumerator,
    PointBlock,
)
from ellipsum.utils.logging import logger

CONSISTENCY_MIN_RADIUS = 50.0
CONSISTENCY_TOL = 0.05
_QUERY_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class RadiiMultiset:
    """
    Multiset of radii of the points in a (possibly shifted) ball.

    :ivar M (IntMatrix): Matrix of the form.
    :ivar alpha_spec (str): Spec string of the center.
    :ivar R_max (float): Enumeration radius.
    :ivar radii (np.ndarray): Sorted float64 radii, all <= R_max.
    :ivar n (int): Dimension.
    :ivar volume (float): Volume of {Q_M <= 1}.
    """

    M: IntMatrix
    alpha_spec: str
    R_max: float
    radii: np.ndarray
    n: int
    volume: float

    @property
    def count(self) -> int:
        """Number of points."""
        return int(self.radii.shape[0])

    @property
    def ctx_digest(self) -> str:
        """Hex digest of (M, alpha spec, R_max)."""
        text = ";".join(",".join(str(v) for v in row) for row in self.M)
        key = f"radii|M:{text}|alpha:{self.alpha_spec}|R:{self.R_max!r}"
        return hashlib.sha256(key.encode("utf-8")).hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RadiiMultiset):
            return NotImplemented
        return (
            self.M == other.M
            and self.alpha_spec == other.alpha_spec
            and self.R_max == other.R_max
            and np.array_equal(self.radii, other.radii)
        )

    def __hash__(self) -> int:
        return hash(self.ctx_digest)

    def cache_header(self) -> CacheHeader:
        """Header identifying this multiset in the cache."""
        return CacheHeader(
            kind=CacheKind.RADII,
            matrix=self.M,
            alpha_spec=self.alpha_spec,
            bound=self.R_max,
        )

    def cache_arrays(self) -> List[np.ndarray]:
        """Radii followed by the volume."""
        return [self.radii, np.array([self.volume], dtype=np.float64)]

    @classmethod
    def from_cache(
        cls, header: CacheHeader, arrays: List[np.ndarray]
    ) -> "RadiiMultiset":
        """
        Rebuild a multiset read from the cache.

        :raises ValueError: On a payload that does not fit the header.
        """
        if header.kind != CacheKind.RADII or len(arrays) != 2:
            raise ValueError("Cache entry does not hold radii")
        radii, volume = arrays
        if radii.size and (
            np.any(np.diff(radii) < 0) or radii[-1] > header.bound
        ):
            raise ValueError("Cached radii are not sorted within R_max")
        radii.setflags(write=False)
        return cls(
            M=header.matrix,
            alpha_spec=header.alpha_spec,
            R_max=header.bound,
            radii=radii,
            n=header.n,
            volume=float(volume[0]),
        )


def _shard_radii(
    exact: bool,
) -> Callable[[Iterator[PointBlock]], np.ndarray]:
    def reduce(blocks: Iterator[PointBlock]) -> np.ndarray:
        parts: List[np.ndarray] = []
        for block in blocks:
            q = block.qvals.astype(np.float64)
            if not exact:
                q = np.maximum(q, 0.0)
            parts.append(np.sqrt(q))
        if not parts:
            return np.zeros(0, dtype=np.float64)
        return np.concatenate(parts)

    return reduce


def _check_growth(rm: RadiiMultiset):
    if rm.n != 2 or rm.R_max < CONSISTENCY_MIN_RADIUS:
        return
    expected = rm.volume * rm.R_max**2
    rel = abs(rm.count / expected - 1.0)
    if rel > CONSISTENCY_TOL:
        logger.error(
            f"Point count {rm.count} deviates from volume * R^2 = "
            f"{expected:.1f} by {rel:.2%}"
        )
        raise ArithmeticError(
            f"Enumeration inconsistent with the volume ({rel:.2%} off)"
        )


def build_radii(
    ctx: QuadFormCtx,
    alpha: Optional[ShiftVector],
    R_max: float,
    workers: int = 1,
    cap: float = DEFAULT_POINT_CAP,
) -> RadiiMultiset:
    """
    Enumerate the ball of radius R_max around alpha once and sort radii.

    :param ctx: Quadratic form.
    :type ctx: QuadFormCtx
    :param alpha: Center (None for the origin).
    :type alpha: Optional[ShiftVector]
    :param R_max: Radius (> 0).
    :type R_max: float
    :param workers: Worker threads.
    :type workers: int
    :param cap: Maximum estimated point count.
    :type cap: float
    :return: Radii multiset.
    :rtype: RadiiMultiset
    :raises BudgetExceeded: If the ball is too large.
    """
    walker = LatticeEnumerator(ctx, alpha, R=R_max, cap=cap)
    parts = walker.map_shards(_shard_radii(walker.exact), workers=workers)
    radii = np.sort(
        np.concatenate(parts) if parts else np.zeros(0), kind="stable"
    )
    if radii.size:
        np.minimum(radii, R_max, out=radii)
    radii.setflags(write=False)
    rm = RadiiMultiset(
        M=ctx.M,
        alpha_spec=alpha.spec if alpha is not None else "0",
        R_max=float(R_max),
        radii=radii,
        n=ctx.n,
        volume=ctx.volume,
    )
    _check_growth(rm)
    logger.info(f"Built {rm.count} radii up to R_max={R_max:g}")
    return rm


def count_upto(
    rm: RadiiMultiset, t: Union[float, np.ndarray]
) -> Union[int, np.ndarray]:
    """
    Number of radii <= t (closed ball).

    :param rm: Radii multiset.
    :type rm: RadiiMultiset
    :param t: Radius or array of radii in [0, R_max].
    :type t: Union[float, np.ndarray]
    :return: Counts, an int for scalar input.
    :rtype: Union[int, np.ndarray]
    :raises RadiusOutOfRange: If some t is negative or exceeds R_max.
    """
    arr = np.asarray(t, dtype=np.float64)
    if arr.size and (
        np.any(arr < 0) or np.any(arr > rm.R_max * (1 + _QUERY_SLACK))
    ):
        raise RadiusOutOfRange(
            f"t must lie in [0, {rm.R_max:g}], got "
            f"[{float(arr.min()):g}, {float(arr.max()):g}]"
        )
    counts = np.searchsorted(rm.radii, arr, side="right")
    if counts.ndim == 0:
        return int(counts)
    return counts.astype(np.int64)
