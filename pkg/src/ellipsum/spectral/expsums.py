"""
Exponential-sum series r[M,alpha](p), the cumulative mean square R(N) and
the variance constant built from the adjugate series.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ellipsum.arith.diophantine import ShiftVector
from ellipsum.arith.quadform import IntMatrix, QuadFormCtx, build_ctx
from ellipsum.errors import (
    CheckpointOutOfRange,
    SeriesMismatch,
    TruncationExceedsSeries,
    ValidationError,
)
from ellipsum.lattice.cache_format import CacheHeader, CacheKind
from ellipsum.lattice.enumerate import DEFAULT_POINT_CAP
from ellipsum.lattice.shells import bucket_shells
from ellipsum.utils.logging import logger


@dataclass(frozen=True, eq=False)
class ExpSumSeries:
    """
    Twisted representation numbers and their cumulative mean square.

    Both arrays are indexed 0..p_max with r[0] = 0 and R_cum[0] = 0.

    :ivar M (IntMatrix): Matrix the series was built for.
    :ivar alpha_spec (str): Spec string of the twist.
    :ivar p_max (int): Last index.
    :ivar r (np.ndarray): complex128 r[M,alpha](p).
    :ivar R_cum (np.ndarray): float64 sum_{p<=N} |r(p)|^2.
    :ivar n (int): Dimension.
    :ivar volume (float): Volume of {Q_M <= 1}.
    """

    M: IntMatrix
    alpha_spec: str
    p_max: int
    r: np.ndarray
    R_cum: np.ndarray
    n: int
    volume: float

    @property
    def matrix_digest(self) -> str:
        """Hex digest of the matrix."""
        text = ";".join(",".join(str(v) for v in row) for row in self.M)
        return hashlib.sha256(f"M:{text}".encode("utf-8")).hexdigest()

    @property
    def abs2(self) -> np.ndarray:
        """|r(p)|^2."""
        return self.r.real**2 + self.r.imag**2

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExpSumSeries):
            return NotImplemented
        return (
            self.M == other.M
            and self.alpha_spec == other.alpha_spec
            and self.p_max == other.p_max
            and np.array_equal(self.r, other.r)
            and np.array_equal(self.R_cum, other.R_cum)
        )

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def from_values(
        cls,
        M: Sequence[Sequence[int]],
        r: Sequence[complex],
        alpha_spec: str = "synthetic",
    ) -> "ExpSumSeries":
        """
        Series with prescribed values; r[0] is forced to 0.

        :param M: Matrix the values belong to.
        :type M: Sequence[Sequence[int]]
        :param r: Values indexed from 0.
        :type r: Sequence[complex]
        :param alpha_spec: Label stored as the twist spec.
        :type alpha_spec: str
        :return: Series.
        :rtype: ExpSumSeries
        """
        ctx = build_ctx(M)
        values = np.array(r, dtype=np.complex128)
        if values.size < 2:
            raise ValidationError("A series needs at least p = 0 and p = 1")
        values[0] = 0
        return cls._assemble(ctx, alpha_spec, values)

    @classmethod
    def _assemble(
        cls, ctx: QuadFormCtx, alpha_spec: str, r: np.ndarray
    ) -> "ExpSumSeries":
        abs2 = r.real**2 + r.imag**2
        R_cum = np.cumsum(abs2.astype(np.longdouble)).astype(np.float64)
        r.setflags(write=False)
        R_cum.setflags(write=False)
        return cls(
            M=ctx.M,
            alpha_spec=alpha_spec,
            p_max=int(r.size - 1),
            r=r,
            R_cum=R_cum,
            n=ctx.n,
            volume=ctx.volume,
        )

    def cache_header(self) -> CacheHeader:
        """Header identifying this series in the cache."""
        return CacheHeader(
            kind=CacheKind.SERIES,
            matrix=self.M,
            alpha_spec=self.alpha_spec,
            bound=float(self.p_max),
        )

    def cache_arrays(self) -> List[np.ndarray]:
        """r, R_cum and the volume."""
        return [
            self.r,
            self.R_cum,
            np.array([self.volume], dtype=np.float64),
        ]

    @classmethod
    def from_cache(
        cls, header: CacheHeader, arrays: List[np.ndarray]
    ) -> "ExpSumSeries":
        """
        Rebuild a series read from the cache.

        :raises ValueError: On a payload that does not fit the header.
        """
        if header.kind != CacheKind.SERIES or len(arrays) != 3:
            raise ValueError("Cache entry does not hold a series")
        r, R_cum, volume = arrays
        p_max = int(header.bound)
        if r.size != p_max + 1 or R_cum.size != p_max + 1:
            raise ValueError("Series length does not match p_max")
        r.setflags(write=False)
        R_cum.setflags(write=False)
        return cls(
            M=header.matrix,
            alpha_spec=header.alpha_spec,
            p_max=p_max,
            r=r,
            R_cum=R_cum,
            n=header.n,
            volume=float(volume[0]),
        )


def rep_sums(
    ctx: QuadFormCtx,
    alpha: Optional[ShiftVector],
    p_max: int,
    workers: int = 1,
    cap: float = DEFAULT_POINT_CAP,
) -> ExpSumSeries:
    """
    r[M,alpha](p) = sum_{Q_M(m) = p} e(m . alpha) for 1 <= p <= p_max.

    :param ctx: Quadratic form.
    :type ctx: QuadFormCtx
    :param alpha: Twist (None for plain representation numbers).
    :type alpha: Optional[ShiftVector]
    :param p_max: Last shell (>= 1).
    :type p_max: int
    :param workers: Worker threads.
    :type workers: int
    :param cap: Maximum estimated point count.
    :type cap: float
    :return: Series with cumulative mean square.
    :rtype: ExpSumSeries
    :raises BudgetExceeded: If the enumeration is too large.
    """
    buckets = bucket_shells(ctx, alpha, p_max, workers=workers, cap=cap)
    r = buckets.sums.copy()
    r[0] = 0
    spec = alpha.spec if alpha is not None else "0"
    series = ExpSumSeries._assemble(ctx, spec, r)
    logger.info(
        f"Series up to p={p_max}: R({p_max}) = {series.R_cum[-1]:.6g}"
    )
    return series


@dataclass(frozen=True)
class TraceRow:
    """
    One checkpoint of the normalized mean square.

    :ivar N (int): Checkpoint.
    :ivar ratio (float): R(N) / N^(n/2).
    :ivar target (float): Volume of the unit ellipsoid.
    """

    N: int
    ratio: float
    target: float


def mean_square_trace(
    series: ExpSumSeries, checkpoints: Sequence[int]
) -> List[TraceRow]:
    """
    R(N)/N^(n/2) next to its limit |E^M| at each checkpoint.

    :param series: Series of the form itself (not its adjugate).
    :type series: ExpSumSeries
    :param checkpoints: Values of N in [1, p_max].
    :type checkpoints: Sequence[int]
    :return: One row per checkpoint.
    :rtype: List[TraceRow]
    :raises CheckpointOutOfRange: If some N is outside [1, p_max].
    """
    rows = []
    for N in checkpoints:
        N = int(N)
        if N < 1 or N > series.p_max:
            raise CheckpointOutOfRange(
                f"Checkpoint {N} outside [1, {series.p_max}]"
            )
        ratio = float(series.R_cum[N]) / N ** (series.n / 2.0)
        rows.append(TraceRow(N=N, ratio=ratio, target=series.volume))
    return rows


def _dyadic_blocks(p_max: int, P: int) -> List[Tuple[int, int]]:
    blocks = []
    k = 0
    while 2**k <= P:
        blocks.append((2**k, min(2 ** (k + 1) - 1, P, p_max)))
        k += 1
    return blocks


@dataclass(frozen=True)
class VarianceSeries:
    """
    Truncated variance series.

    :ivar value (float): (det M)^((n-1)/2) sum_{p<=P} |r(p)|^2 p^(-(n+1)/2)
        over the adjugate series.
    :ivar tail_bound (float): Dyadic tail heuristic C_emp P^(-1/2).
    :ivar P (int): Truncation.
    """

    value: float
    tail_bound: float
    P: int


def variance_series(
    ctx: QuadFormCtx, adj_series: ExpSumSeries, P: int
) -> VarianceSeries:
    """
    Truncated variance constant of F_M.

    The tail heuristic takes C_emp as the largest normalized dyadic block
    sum(|r(p)|^2 p^(-(n+1)/2)) * sqrt(2^k) over blocks [2^k, 2^(k+1)).

    :param ctx: Form M.
    :type ctx: QuadFormCtx
    :param adj_series: Series for the adjugate of M with the same twist.
    :type adj_series: ExpSumSeries
    :param P: Truncation (>= 1).
    :type P: int
    :return: Value and tail bound.
    :rtype: VarianceSeries
    :raises SeriesMismatch: If the series was not built for adj(M).
    :raises TruncationExceedsSeries: If P > p_max.
    """
    if adj_series.M != ctx.adjM:
        raise SeriesMismatch(
            "Variance series needs the series of the adjugate matrix "
            f"{ctx.adjM}, got one for {adj_series.M}"
        )
    if P < 1:
        raise ValidationError(f"P must be >= 1, got {P}")
    if P > adj_series.p_max:
        raise TruncationExceedsSeries(
            f"P={P} exceeds the series length {adj_series.p_max}"
        )
    n = ctx.n
    pref = float(ctx.detM) ** ((n - 1) / 2.0)
    p = np.arange(1, P + 1, dtype=np.float64)
    terms = adj_series.abs2[1 : P + 1] * p ** (-(n + 1) / 2.0)
    value = pref * float(np.sum(terms))

    c_emp = 0.0
    for lo, hi in _dyadic_blocks(adj_series.p_max, P):
        block = float(np.sum(terms[lo - 1 : hi]))
        c_emp = max(c_emp, block * np.sqrt(lo))
    tail = pref * c_emp / np.sqrt(P)
    logger.debug(f"Variance series P={P}: {value:.6g} (tail {tail:.3g})")
    return VarianceSeries(value=value, tail_bound=float(tail), P=int(P))


@dataclass(frozen=True)
class AbelBlock:
    """
    One dyadic block [2^k, 2^(k+1)).

    :ivar k (int): Block index.
    :ivar value (float): sum |r(p)|^2 p^(-b) over the block.
    :ivar normalized (float): value / 2^(k(n/2 - b)).
    """

    k: int
    value: float
    normalized: float


@dataclass(frozen=True)
class AbelReport:
    """
    Dyadic block check of sum |r(p)|^2 p^(-b).

    :ivar b (float): Exponent.
    :ivar blocks (Tuple[AbelBlock, ...]): Complete blocks.
    :ivar C (float): Largest normalized block value.
    :ivar convergent (bool): Whether b > n/2.
    """

    b: float
    blocks: Tuple[AbelBlock, ...]
    C: float
    convergent: bool


def abel_block_check(series: ExpSumSeries, b: float) -> AbelReport:
    """
    Compare dyadic block sums of |r(p)|^2 p^(-b) with C 2^(k(n/2 - b)).

    Only complete blocks inside the series are reported. For b <= n/2 the
    sum diverges and the report says so; the block values are still
    computed.

    :param series: Series.
    :type series: ExpSumSeries
    :param b: Exponent (> 0).
    :type b: float
    :return: Block report.
    :rtype: AbelReport
    """
    if b <= 0:
        raise ValidationError(f"Exponent b must be positive, got {b}")
    n = series.n
    abs2 = series.abs2
    blocks = []
    k = 0
    while 2 ** (k + 1) - 1 <= series.p_max:
        lo, hi = 2**k, 2 ** (k + 1) - 1
        p = np.arange(lo, hi + 1, dtype=np.float64)
        value = float(np.sum(abs2[lo : hi + 1] * p ** (-b)))
        normalized = value / 2.0 ** (k * (n / 2.0 - b))
        blocks.append(AbelBlock(k=k, value=value, normalized=normalized))
        k += 1
    C = max((blk.normalized for blk in blocks), default=0.0)
    return AbelReport(
        b=float(b), blocks=tuple(blocks), C=C, convergent=b > n / 2.0
    )


def boundedness_check(series: ExpSumSeries, start: int = 1000) -> float:
    """
    max_{start <= N <= p_max} R(N)/N^(n/2), divided by |E^M|.

    :param series: Series of the form itself.
    :type series: ExpSumSeries
    :param start: First N considered.
    :type start: int
    :return: Normalized maximum.
    :rtype: float
    :raises CheckpointOutOfRange: If start is outside [1, p_max].
    """
    if start < 1 or start > series.p_max:
        raise CheckpointOutOfRange(
            f"start={start} outside [1, {series.p_max}]"
        )
    N = np.arange(start, series.p_max + 1, dtype=np.float64)
    ratios = series.R_cum[start:] / N ** (series.n / 2.0)
    return float(ratios.max()) / series.volume
