"""
Identities linking |Theta|^2 to the mean square of twisted
representation numbers of a diagonal form D_a = diag(a_1, ..., a_n).

On the line z = a (u + i v), phi = 0, xi = (x, 0) the theta sum of a
radial profile psi(|w|^2) is a trigonometric polynomial in u with
frequencies |m|_a^2 / 2, so its mean square over a period of length 2
collapses to the diagonal pairs |m|_a^2 = |h|_a^2. Period means are
taken with the trapezoid rule on equispaced nodes, which is exact for
trigonometric polynomials once the node count exceeds the largest
frequency gap.

The theta side is evaluated with :func:`theta_sum` at every node. Only
when that would cost more than ``DIRECT_TERMS`` lattice terms does
:func:`bridge_check` switch to the FFT of the shell coefficients, which
is the same polynomial evaluated on a finer grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import fft
from scipy.integrate import quad

from ellipsum.arith.diophantine import ShiftVector
from ellipsum.arith.quadform import QuadFormCtx, ball_volume, build_ctx
from ellipsum.errors import BudgetExceeded, ValidationError
from ellipsum.lattice.enumerate import LatticeEnumerator
from ellipsum.spectral.expsums import ExpSumSeries, rep_sums
from ellipsum.theta.group import GroupPoint
from ellipsum.theta.profiles import (
    ExactIndicator,
    RadialIndicatorApprox,
    ThetaProfile,
)
from ellipsum.theta.sums import theta_sum
from ellipsum.utils.logging import logger
from ellipsum.utils.workers import ShardPool

NODES_PER_FREQUENCY = 40
MAX_NODES = 1 << 24
MAX_PAIRS = 5e7
MIN_V = 1e-6
DIRECT_TERMS = 1e8
MAX_DIRECT_TERMS = 2e9


def diagonal_ctx(a: Sequence[int]) -> QuadFormCtx:
    """
    Context of diag(a) for positive integers a_k.

    :param a: Diagonal.
    :type a: Sequence[int]
    :return: Quadratic form context.
    :rtype: QuadFormCtx
    :raises ValidationError: On a non-positive or non-integer entry.
    """
    if not a or any(int(ak) != ak or ak < 1 for ak in a):
        raise ValidationError(f"a must be positive integers, got {a}")
    n = len(a)
    rows = [[int(a[i]) if i == j else 0 for j in range(n)] for i in range(n)]
    return build_ctx(rows)


def _period_mean_sq(coeffs: np.ndarray, nodes: int) -> float:
    """Mean of |sum_q c_q e(u q / 2)|^2 over u in [0, 2) on equispaced
    nodes, the polynomial evaluated by one inverse FFT."""
    values = fft.ifft(coeffs, n=nodes) * nodes
    return float(np.mean(values.real**2 + values.imag**2))


def _node_count(q_max: int) -> int:
    # |Theta|^2 has frequencies up to q_max/2 on a period of length 2
    nodes = max(NODES_PER_FREQUENCY * q_max // 2, 2 * q_max + 2)
    if 2 * q_max + 2 > MAX_NODES:
        raise BudgetExceeded(
            f"{2 * q_max + 2} nodes needed for q <= {q_max}, "
            f"cap {MAX_NODES}"
        )
    return min(nodes, MAX_NODES)


def _box_terms(a: Sequence[int], v: float, support_sq: float) -> float:
    reach = [math.sqrt(support_sq / (ak * v)) for ak in a]
    return float(math.prod(2 * math.floor(r) + 1 for r in reach))


def theta_period_mean(
    profile: ThetaProfile,
    a: Sequence[int],
    v: float,
    x: Sequence[float],
    nodes: int,
    workers: int = 1,
) -> float:
    """
    (1/2) int_0^2 |Theta(a (u + i v), 0; (x, 0), 0)|^2 du by the trapezoid
    rule, with Theta evaluated by :func:`theta_sum` at every node.

    Exact once ``nodes`` exceeds the largest norm |m|_a^2 in the support.

    :param profile: Radial profile (indicator or smoothed indicator).
    :type profile: ThetaProfile
    :param a: Positive integer weights.
    :type a: Sequence[int]
    :param v: Imaginary part (> 0).
    :type v: float
    :param x: Twist.
    :type x: Sequence[float]
    :param nodes: Equispaced nodes on [0, 2).
    :type nodes: int
    :param workers: Worker threads, one node per task.
    :type workers: int
    :return: Period mean of |Theta|^2.
    :rtype: float
    """
    xs = [float(xk) for xk in x]

    def at(u: float) -> float:
        g = GroupPoint.make([ak * complex(u, v) for ak in a], x=xs)
        value = theta_sum(profile, g)
        return value.real**2 + value.imag**2

    us = [2.0 * j / nodes for j in range(nodes)]
    pool: ShardPool = ShardPool(at, workers=workers, name="theta-nodes")
    return math.fsum(pool.map(us)) / nodes


@dataclass(frozen=True)
class MeanSquareIdentity:
    """
    Both sides of the exact mean-square identity.

    :ivar lhs (float): (1/2) int_0^2 |Theta|^2 du from theta values.
    :ivar rhs (float): (prod a)^{1/2} v^{n/2} sum over pairs of equal
        norm <= 1/v of e((h - m) . x).
    :ivar points (int): Lattice points with |m|_a^2 <= 1/v.
    :ivar q_max (int): Largest admissible norm.
    """

    lhs: float
    rhs: float
    points: int
    q_max: int


def msq_integral_u(
    a: Sequence[int],
    v: float,
    x: Sequence[float],
    workers: int = 1,
) -> MeanSquareIdentity:
    """
    Exact identity for the indicator profile.

    The left side is the period mean of |Theta(a(u + iv), 0; (x, 0), 0)|^2,
    with Theta evaluated by :func:`theta_sum` on 2 q_max + 2 nodes; the
    right side is the explicit double sum over pairs (m, h) with equal
    norm.

    :param a: Positive integer weights.
    :type a: Sequence[int]
    :param v: Imaginary part (> 0).
    :type v: float
    :param x: Twist.
    :type x: Sequence[float]
    :param workers: Worker threads for the enumeration and the nodes.
    :type workers: int
    :return: Both sides.
    :rtype: MeanSquareIdentity
    :raises BudgetExceeded: If there are too many pairs or theta terms.
    """
    ctx = diagonal_ctx(a)
    if not v > 0:
        raise ValidationError(f"v must be positive, got {v}")
    xv = np.asarray(x, dtype=np.float64)
    if xv.shape != (ctx.n,):
        raise ValidationError(f"x must have {ctx.n} components")
    profile = ExactIndicator()
    q_max = int(math.floor(profile.support_sq / v))
    nodes = 2 * q_max + 2
    work = nodes * _box_terms(a, v, profile.support_sq)
    if work > MAX_DIRECT_TERMS:
        raise BudgetExceeded(
            f"{work:.3g} theta terms exceed the cap {MAX_DIRECT_TERMS:g}"
        )

    walker = LatticeEnumerator(ctx, None, radius_sq=q_max)
    pts_parts = []
    q_parts = []
    for block in walker.blocks(workers=workers):
        pts_parts.append(block.points)
        q_parts.append(block.qvals)
    pts = np.concatenate(pts_parts) if pts_parts else np.zeros((0, ctx.n))
    qs = (
        np.concatenate(q_parts).astype(np.int64)
        if q_parts
        else np.zeros(0, dtype=np.int64)
    )
    angles = 2.0 * math.pi * (pts @ xv)

    order = np.argsort(qs, kind="stable")
    qs, angles = qs[order], angles[order]
    bounds = np.flatnonzero(np.diff(qs)) + 1
    shells = np.split(angles, bounds)
    pairs = float(sum(s.size * s.size for s in shells))
    if pairs > MAX_PAIRS:
        raise BudgetExceeded(f"{pairs:.3g} pairs exceed the cap {MAX_PAIRS}")

    scale = math.prod(a) ** 0.5 * v ** (ctx.n / 2.0)
    pair_sum = math.fsum(
        float(np.sum(np.cos(s[:, None] - s[None, :]))) for s in shells
    )
    rhs = scale * pair_sum
    lhs = theta_period_mean(profile, a, v, xv, nodes, workers=workers)
    logger.debug(
        f"Mean-square identity: {qs.size} points, {len(shells)} shells, "
        f"q_max={q_max}, {nodes} nodes"
    )
    return MeanSquareIdentity(
        lhs=lhs, rhs=rhs, points=int(qs.size), q_max=q_max
    )


def radial_target(profile: RadialIndicatorApprox, a: Sequence[int]) -> float:
    """
    Limit of the theta side as v -> 0:
    (prod a)^{-1/2} (n/2) |B| int_0^inf psi(r)^2 r^{n/2 - 1} dr.

    :param profile: Radial cutoff.
    :type profile: RadialIndicatorApprox
    :param a: Weights.
    :type a: Sequence[int]
    :return: Target value.
    :rtype: float
    """
    n = len(a)
    edge, _ = quad(
        lambda r: float(profile.psi(r)) ** 2 * r ** (n / 2.0 - 1.0),
        1.0,
        profile.support_sq,
        epsabs=1e-13,
        epsrel=1e-12,
    )
    mass = 1.0 + 0.5 * n * edge
    return ball_volume(n) * mass / math.sqrt(math.prod(a))


@dataclass(frozen=True)
class BridgeRow:
    """
    One v of the bridge table.

    :ivar v (float): Imaginary part.
    :ivar N (int): floor(1/v).
    :ivar theta_msq (float): (prod a)^{-1/2} (1/2) int_0^2 |Theta|^2 du.
    :ivar repsum_msq (float): R(N) / N^{n/2}.
    :ivar target (float): Limit of the theta side.
    :ivar nodes (int): Quadrature nodes in u.
    :ivar method (str): ``direct`` (theta sums at every node) or ``fft``.
    """

    v: float
    N: int
    theta_msq: float
    repsum_msq: float
    target: float
    nodes: int
    method: str = "direct"

    def to_dict(self) -> dict:
        """JSON-ready mapping."""
        return {
            "v": self.v,
            "N": self.N,
            "theta_msq": self.theta_msq,
            "repsum_msq": self.repsum_msq,
            "target": self.target,
            "method": self.method,
        }


def _check_v_list(v_list: Sequence[float]) -> List[float]:
    vs = [float(v) for v in v_list]
    if not vs:
        raise ValidationError("v_list is empty")
    if any(not b < a for a, b in zip(vs, vs[1:])):
        raise ValidationError(f"v_list must be decreasing, got {vs}")
    if vs[-1] < MIN_V or vs[0] <= 0:
        raise ValidationError(f"v must lie in [{MIN_V:g}, inf), got {vs}")
    return vs



def bridge_check(
    a: Sequence[int],
    alpha: Optional[ShiftVector],
    v_list: Sequence[float],
    sharpness: float = 20.0,
    series: Optional[ExpSumSeries] = None,
    workers: int = 1,
) -> List[BridgeRow]:
    """
    Theta side, representation-number side and target for each v.

    The theta side averages :func:`theta_sum` over 2 q_max + 2 nodes in u
    while that costs at most ``DIRECT_TERMS`` lattice terms; beyond that
    it is the FFT of psi(v q) r[D_a, alpha](q) on the trapezoid grid.

    :param a: Positive integer weights.
    :type a: Sequence[int]
    :param alpha: Twist x = alpha (None for x = 0).
    :type alpha: Optional[ShiftVector]
    :param v_list: Decreasing values of v, the last >= 1e-6.
    :type v_list: Sequence[float]
    :param sharpness: Sharpness of the radial cutoff psi.
    :type sharpness: float
    :param series: Precomputed r[D_a, alpha]; built when None.
    :type series: Optional[ExpSumSeries]
    :param workers: Worker threads.
    :type workers: int
    :return: One row per v.
    :rtype: List[BridgeRow]
    :raises BudgetExceeded: If the node count or enumeration is too large.
    """
    ctx = diagonal_ctx(a)
    vs = _check_v_list(v_list)
    profile = RadialIndicatorApprox(sharpness)
    need = int(math.floor(profile.support_sq / vs[-1]))
    if series is None:
        series = rep_sums(ctx, alpha, max(need, 1), workers=workers)
    elif series.M != ctx.M or series.p_max < need:
        raise ValidationError(
            f"Series for {series.M} up to {series.p_max} does not cover "
            f"diag{tuple(a)} up to {need}"
        )
    target = radial_target(profile, a)
    n = ctx.n
    root = math.prod(a) ** 0.5
    x = [float(c) for c in alpha.comps] if alpha is not None else [0.0] * n

    rows = []
    for v in vs:
        q_max = int(math.floor(profile.support_sq / v))
        direct = 2 * q_max + 2
        if direct * _box_terms(a, v, profile.support_sq) <= DIRECT_TERMS:
            method = "direct"
            nodes = direct
            msq = theta_period_mean(profile, a, v, x, nodes, workers)
        else:
            method = "fft"
            q = np.arange(q_max + 1, dtype=np.float64)
            weights = profile.psi(v * q)
            coeffs = weights * np.conj(series.r[: q_max + 1])
            coeffs[0] = weights[0]
            nodes = _node_count(q_max)
            msq = root * v ** (n / 2.0) * _period_mean_sq(coeffs, nodes)
        theta_msq = msq / root
        N = int(math.floor(1.0 / v))
        repsum = float(series.R_cum[N]) / N ** (n / 2.0)
        rows.append(
            BridgeRow(
                v=v,
                N=N,
                theta_msq=theta_msq,
                repsum_msq=repsum,
                target=target,
                nodes=nodes,
                method=method,
            )
        )
        logger.info(
            f"v={v:g} ({method}, {nodes} nodes): theta {theta_msq:.6g}, "
            f"R(N)/N^(n/2) {repsum:.6g}, target {target:.6g}"
        )
    return rows
