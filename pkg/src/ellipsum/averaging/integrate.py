"""
The averaging operator <f>_T for piecewise smooth integrands.

Integrands read off a radii multiset are smooth between consecutive
radii. The support of mu_T is cut at those breakpoints (and at a uniform
panel grid), every piece gets a Gauss-Legendre rule of order 8 and the
difference to an order 4 rule on the same piece is the error estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from ellipsum.averaging.kernel import AveragingKernel
from ellipsum.errors import SupportExceedsRadii, ValidationError
from ellipsum.utils.logging import logger
from ellipsum.utils.workers import ShardPool

Integrand = Callable[[np.ndarray], np.ndarray]

GAUSS_ORDER = 8
CHECK_ORDER = 4
SUPPORT_PANELS = 256
CHUNK_INTERVALS = 1 << 16
_X8, _W8 = leggauss(GAUSS_ORDER)
_X4, _W4 = leggauss(CHECK_ORDER)


@dataclass(frozen=True)
class AverageResult:
    """
    One value of the averaging operator.

    :ivar T (float): Scale.
    :ivar value (float): <f>_T.
    :ivar est_error (float): Integration error estimate (>= 0).
    :ivar breakpoint_count (int): Jump points inside the support.
    """

    T: float
    value: float
    est_error: float
    breakpoint_count: int

    def to_dict(self) -> dict:
        """JSON-ready mapping."""
        return {
            "T": self.T,
            "value": self.value,
            "est_error": self.est_error,
            "breakpoint_count": self.breakpoint_count,
        }


def check_support(
    kernel: AveragingKernel, T: float, limit: float, headroom: float = 0.0
) -> Tuple[float, float]:
    """
    Support of mu_T, checked against the available radius.

    :param kernel: Kernel.
    :type kernel: AveragingKernel
    :param T: Scale (> 0).
    :type T: float
    :param limit: Largest radius the integrand is defined for.
    :type limit: float
    :param headroom: Extra room needed beyond c1 T (shell width).
    :type headroom: float
    :return: (c0 T, c1 T).
    :rtype: Tuple[float, float]
    :raises SupportExceedsRadii: If c1 T + headroom > limit.
    """
    if not T > 0:
        raise ValidationError(f"T must be positive, got {T}")
    lo, hi = kernel.support_T(T)
    if hi + headroom > limit:
        raise SupportExceedsRadii(
            f"Averaging support [{lo:g}, {hi:g}] (+{headroom:g}) exceeds "
            f"the radii built to {limit:g}"
        )
    return lo, hi


def _rule_sum(
    f: Integrand,
    kernel: AveragingKernel,
    T: float,
    a: np.ndarray,
    b: np.ndarray,
    x: np.ndarray,
    w: np.ndarray,
) -> np.ndarray:
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b)[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(nodes.ravel())).reshape(nodes.shape)
    dens = np.asarray(kernel.mu_T(nodes.ravel(), T)).reshape(nodes.shape)
    return half * np.sum(w[None, :] * vals * dens, axis=1)


def _integrate_chunk(
    f: Integrand, kernel: AveragingKernel, T: float
) -> Callable[[Tuple[np.ndarray, np.ndarray]], Tuple[float, float]]:
    def run(piece: Tuple[np.ndarray, np.ndarray]) -> Tuple[float, float]:
        a, b = piece
        fine = _rule_sum(f, kernel, T, a, b, _X8, _W8)
        coarse = _rule_sum(f, kernel, T, a, b, _X4, _W4)
        return float(np.sum(fine)), float(np.sum(np.abs(fine - coarse)))

    return run


def average_piecewise(
    f: Integrand,
    T: float,
    kernel: AveragingKernel,
    breakpoints: Optional[np.ndarray] = None,
    limit: float = np.inf,
    headroom: float = 0.0,
    workers: int = 1,
) -> AverageResult:
    """
    <f>_T for f smooth between the given breakpoints.

    Chunks of sub-intervals may run on several threads; chunk sums are
    reduced in chunk order, so the result does not depend on ``workers``.

    :param f: Vectorized integrand.
    :type f: Integrand
    :param T: Scale.
    :type T: float
    :param kernel: Kernel.
    :type kernel: AveragingKernel
    :param breakpoints: Points where f may jump (need not be sorted).
    :type breakpoints: Optional[np.ndarray]
    :param limit: Largest t at which f may be evaluated.
    :type limit: float
    :param headroom: Extra room needed beyond the support.
    :type headroom: float
    :param workers: Worker threads.
    :type workers: int
    :return: Value and error estimate.
    :rtype: AverageResult
    :raises SupportExceedsRadii: If the support leaves the radii.
    """
    lo, hi = check_support(kernel, T, limit, headroom)
    if breakpoints is None:
        inner = np.zeros(0)
    else:
        bp = np.asarray(breakpoints, dtype=np.float64)
        inner = bp[(bp > lo) & (bp < hi)]
    panels = np.linspace(lo, hi, SUPPORT_PANELS + 1)
    edges = np.unique(np.concatenate([panels, inner]))
    a, b = edges[:-1], edges[1:]

    pieces = [
        (a[s : s + CHUNK_INTERVALS], b[s : s + CHUNK_INTERVALS])
        for s in range(0, a.size, CHUNK_INTERVALS)
    ]
    pool: ShardPool = ShardPool(
        _integrate_chunk(f, kernel, T), workers=workers, name="average"
    )
    sums = pool.map(pieces)
    value = float(np.sum([s[0] for s in sums]))
    err = float(np.sum([s[1] for s in sums]))
    logger.debug(
        f"<f>_T at T={T:g}: {a.size} pieces, {inner.size} breakpoints"
    )
    return AverageResult(
        T=float(T),
        value=value,
        est_error=err,
        breakpoint_count=int(np.unique(inner).size),
    )


def average_step(
    jumps: np.ndarray,
    T: float,
    kernel: AveragingKernel,
    limit: float = np.inf,
) -> AverageResult:
    """
    <N>_T for the counting function N(t) = #{j : r_j <= t}.

    Closed form sum_j (1 - CDF_T(r_j)); the error estimate is the number
    of jumps inside the support times the CDF interpolation error.

    :param jumps: Jump radii r_j (multiplicities repeated).
    :type jumps: np.ndarray
    :param T: Scale.
    :type T: float
    :param kernel: Kernel.
    :type kernel: AveragingKernel
    :param limit: Radius up to which the jumps are complete.
    :type limit: float
    :return: Value and error estimate.
    :rtype: AverageResult
    """
    lo, hi = check_support(kernel, T, limit)
    r = np.asarray(jumps, dtype=np.float64)
    below = int(np.count_nonzero(r <= lo))
    inside = r[(r > lo) & (r < hi)]
    tail = np.sum(1.0 - np.asarray(kernel.cdf_T(inside, T)))
    return AverageResult(
        T=float(T),
        value=float(below + tail),
        est_error=float(inside.size * kernel.cdf_error),
        breakpoint_count=int(np.unique(inside).size),
    )


def average_sampled(
    f: Integrand,
    T: float,
    kernel: AveragingKernel,
    samples: int = 2000,
) -> AverageResult:
    """
    <f>_T by kernel-weighted midpoint sampling.

    The error estimate is the difference to the same rule with half as
    many nodes.

    :param f: Vectorized integrand.
    :type f: Integrand
    :param T: Scale (> 0).
    :type T: float
    :param kernel: Kernel.
    :type kernel: AveragingKernel
    :param samples: Node count (>= 2).
    :type samples: int
    :return: Value and error estimate.
    :rtype: AverageResult
    """
    if samples < 2:
        raise ValidationError(f"Need at least two samples, got {samples}")
    if not T > 0:
        raise ValidationError(f"T must be positive, got {T}")
    lo, hi = kernel.support_T(T)

    def midpoint(m: int) -> float:
        h = (hi - lo) / m
        t = lo + (np.arange(m) + 0.5) * h
        weights = np.asarray(kernel.mu_T(t, T)) * h
        return float(np.sum(weights * np.asarray(f(t))))

    value = midpoint(samples)
    coarse = midpoint(samples // 2)
    return AverageResult(
        T=float(T),
        value=value,
        est_error=abs(value - coarse),
        breakpoint_count=0,
    )
