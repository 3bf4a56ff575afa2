"""
Averaged statistics of F and S and their diagonal spectral counterparts.

Every experiment returns the averaged quantity next to the limit it is
expected to approach, so the caller can print or assert the ratio.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from ellipsum.arith.diophantine import ShiftVector
from ellipsum.arith.quadform import QuadFormCtx
from ellipsum.averaging.integrate import (
    AverageResult,
    average_piecewise,
    average_sampled,
    check_support,
)
from ellipsum.averaging.kernel import AveragingKernel, default_kernel
from ellipsum.errors import (
    NonpositiveEps,
    SeriesMismatch,
    SupportExceedsRadii,
    TruncationExceedsSeries,
    ValidationError,
)
from ellipsum.lattice.radii import RadiiMultiset, build_radii
from ellipsum.spectral.counting import DeviationEvaluator, SpectralEvaluator
from ellipsum.spectral.expsums import ExpSumSeries, rep_sums, variance_series
from ellipsum.spectral.mollifier import Mollifier
from ellipsum.utils.logging import logger

DEFAULT_P = 100_000


@dataclass(frozen=True)
class EpsRule:
    """
    Shell width eps = T^(-gamma).

    :ivar gamma (float): Exponent, in (0, 1) for the variance regime.
    """

    gamma: float = 0.5

    def __post_init__(self):
        if not 0 < self.gamma:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")

    @property
    def in_variance_regime(self) -> bool:
        """Whether 0 < gamma < 1."""
        return 0 < self.gamma < 1

    def __call__(self, T: float) -> float:
        return float(T) ** (-self.gamma)


@dataclass(frozen=True)
class VarianceReport:
    """
    <|F|^2>_T next to A/(2 pi^2).

    :ivar T (float): Scale.
    :ivar value (float): <|F|^2>_T.
    :ivar target (float): Truncated variance constant over 2 pi^2.
    :ivar ratio (float): value / target.
    :ivar est_error (float): Integration error estimate.
    :ivar mean (float): <F>_T.
    :ivar tail_bound (float): Tail heuristic of the variance series, over
        2 pi^2.
    :ivar diag_spectral (Optional[float]): Diagonal variance of F_K0.
    """

    T: float
    value: float
    target: float
    ratio: float
    est_error: float
    mean: float
    tail_bound: float
    diag_spectral: Optional[float] = None

    def to_dict(self) -> dict:
        """JSON-ready mapping."""
        return asdict(self)


@dataclass(frozen=True)
class ShellReport:
    """
    <|S(., eps)|^2>_T next to n |E^M|.

    :ivar T (float): Scale.
    :ivar eps (float): Shell width.
    :ivar value (float): <|S|^2>_T.
    :ivar target (float): n |E^M|.
    :ivar ratio (float): value / target.
    :ivar est_error (float): Integration error estimate.
    :ivar mean_S (float): <S>_T.
    """

    T: float
    eps: float
    value: float
    target: float
    ratio: float
    est_error: float
    mean_S: float

    def to_dict(self) -> dict:
        """JSON-ready mapping."""
        return asdict(self)


@dataclass(frozen=True)
class StabilityReport:
    """
    <|S|^2>_T at eps and eps/2.

    :ivar value (float): At eps.
    :ivar half_value (float): At eps/2.
    :ivar rel_change (float): |half_value - value| / |value|.
    """

    value: float
    half_value: float
    rel_change: float


@dataclass(frozen=True)
class TrendFit:
    """
    Fit of value ~ C T^(n-1) / K.

    :ivar C (float): Geometric-mean constant.
    :ivar max_factor (float): Worst factor between a value and the fit.
    """

    C: float
    max_factor: float


def ensure_radii(
    ctx: QuadFormCtx,
    alpha: Optional[ShiftVector],
    R_needed: float,
    rm: Optional[RadiiMultiset] = None,
    workers: int = 1,
) -> RadiiMultiset:
    """
    Reuse ``rm`` when it covers R_needed, otherwise enumerate.

    :raises SupportExceedsRadii: If a supplied multiset is too small.
    :raises SeriesMismatch: If it belongs to another form or center.
    """
    if rm is None:
        return build_radii(ctx, alpha, R_needed, workers=workers)
    spec = alpha.spec if alpha is not None else "0"
    if rm.M != ctx.M or rm.alpha_spec != spec:
        raise SeriesMismatch(
            f"Radii built for {rm.M} / {rm.alpha_spec}, expected "
            f"{ctx.M} / {spec}"
        )
    if rm.R_max < R_needed:
        raise SupportExceedsRadii(
            f"Radii built to {rm.R_max:g}, need {R_needed:g}"
        )
    return rm


def _shell_breaks(rm: RadiiMultiset, eps: float) -> np.ndarray:
    return np.concatenate([rm.radii, rm.radii - eps])


def mean_F(
    ctx: QuadFormCtx,
    alpha: Optional[ShiftVector],
    T_list: Sequence[float],
    kernel: Optional[AveragingKernel] = None,
    rm: Optional[RadiiMultiset] = None,
    workers: int = 1,
) -> List[AverageResult]:
    """
    <F>_T for every T in T_list.

    :param ctx: Form.
    :type ctx: QuadFormCtx
    :param alpha: Center.
    :type alpha: Optional[ShiftVector]
    :param T_list: Scales.
    :type T_list: Sequence[float]
    :param kernel: Kernel, the bump on [1, 2] by default.
    :type kernel: Optional[AveragingKernel]
    :param rm: Radii to reuse.
    :type rm: Optional[RadiiMultiset]
    :param workers: Worker threads.
    :type workers: int
    :return: One result per T.
    :rtype: List[AverageResult]
    """
    kernel = kernel or default_kernel()
    if not T_list:
        return []
    rm = ensure_radii(ctx, alpha, kernel.c1 * max(T_list), rm, workers)
    ev = DeviationEvaluator(rm)
    out = []
    for T in T_list:
        res = average_piecewise(
            ev.F, T, kernel, rm.radii, limit=rm.R_max, workers=workers
        )
        logger.info(f"<F>_T at T={T:g}: {res.value:.6g}")
        out.append(res)
    return out


def is_decaying(results: Sequence[AverageResult]) -> bool:
    """Whether |<F>_T| is nonincreasing along the list."""
    mags = [abs(r.value) for r in results]
    return all(b <= a for a, b in zip(mags, mags[1:]))


def diag_variance(
    ctx: QuadFormCtx,
    adj_series: ExpSumSeries,
    K: float,
    zeta: float = 0.5,
    mollifier: Optional[Mollifier] = None,
) -> float:
    """
    Diagonal variance of the smoothed spectral sum F_K0.

    (1/(2 pi^2)) d^((n-1)/2) sum_{p <= K^(2+zeta)} |r(p)|^2 p^(-(n+1)/2)
    |hat(sqrt(p)/(K sqrt(d)))|^2 with d = det M and r the adjugate series.

    :raises TruncationExceedsSeries: If K^(2+zeta) > p_max.
    """
    sp = SpectralEvaluator.for_form(ctx, adj_series, K, zeta, mollifier)
    n, d = ctx.n, float(ctx.detM)
    p = np.arange(1, sp.p_cut + 1, dtype=np.float64)
    hat = np.asarray(
        sp.mollifier.hat(np.sqrt(p) / (sp.K * math.sqrt(d)))
    )
    terms = adj_series.abs2[1 : sp.p_cut + 1] * p ** (-(n + 1) / 2.0)
    total = float(np.sum(terms * hat * hat))
    return d ** ((n - 1) / 2.0) * total / (2.0 * math.pi**2)


def var_F(
    ctx: QuadFormCtx,
    alpha: Optional[ShiftVector],
    T: float,
    kernel: Optional[AveragingKernel] = None,
    P: int = DEFAULT_P,
    adj_series: Optional[ExpSumSeries] = None,
    rm: Optional[RadiiMultiset] = None,
    K: Optional[float] = None,
    workers: int = 1,
) -> VarianceReport:
    """
    <|F|^2>_T against the variance constant.

    :param ctx: Form.
    :type ctx: QuadFormCtx
    :param alpha: Center.
    :type alpha: Optional[ShiftVector]
    :param T: Scale.
    :type T: float
    :param kernel: Kernel, the bump on [1, 2] by default.
    :type kernel: Optional[AveragingKernel]
    :param P: Truncation of the variance series.
    :type P: int
    :param adj_series: Series of adj(M) with the same center, built to P
        when missing.
    :type adj_series: Optional[ExpSumSeries]
    :param rm: Radii to reuse.
    :type rm: Optional[RadiiMultiset]
    :param K: Also report the diagonal variance of F_K0 at this K.
    :type K: Optional[float]
    :param workers: Worker threads.
    :type workers: int
    :return: Report.
    :rtype: VarianceReport
    """
    kernel = kernel or default_kernel()
    rm = ensure_radii(ctx, alpha, kernel.c1 * T, rm, workers)
    if adj_series is None:
        adj_series = rep_sums(ctx.adjugate(), alpha, P, workers=workers)
    ev = DeviationEvaluator(rm)
    res = average_piecewise(
        lambda t: np.asarray(ev.F(t)) ** 2,
        T,
        kernel,
        rm.radii,
        limit=rm.R_max,
        workers=workers,
    )
    mean = average_piecewise(
        ev.F, T, kernel, rm.radii, limit=rm.R_max, workers=workers
    )
    if res.value < mean.value**2 - res.est_error - mean.est_error:
        logger.warning(
            f"<|F|^2>_T = {res.value:.6g} below <F>_T^2 = "
            f"{mean.value ** 2:.6g}"
        )
    series = variance_series(ctx, adj_series, P)
    target = series.value / (2.0 * math.pi**2)
    diag = diag_variance(ctx, adj_series, K) if K is not None else None
    return VarianceReport(
        T=float(T),
        value=res.value,
        target=target,
        ratio=res.value / target if target > 0 else math.nan,
        est_error=res.est_error,
        mean=mean.value,
        tail_bound=series.tail_bound / (2.0 * math.pi**2),
        diag_spectral=diag,
    )


def _shell_average(
    ev: DeviationEvaluator,
    rm: RadiiMultiset,
    T: float,
    eps: float,
    kernel: AveragingKernel,
    power: int,
    workers: int,
) -> AverageResult:
    return average_piecewise(
        lambda t: np.asarray(ev.S(t, eps)) ** power,
        T,
        kernel,
        _shell_breaks(rm, eps),
        limit=rm.R_max,
        headroom=eps,
        workers=workers,
    )


def _shell_eps(T: float, eps: Optional[float], rule: EpsRule) -> float:
    value = rule(T) if eps is None else float(eps)
    if not value > 0:
        raise ValidationError(f"eps must be positive, got {value}")
    return value


def var_S(
    ctx: QuadFormCtx,
    alpha: Optional[ShiftVector],
    T: float,
    eps_rule: EpsRule = EpsRule(),
    kernel: Optional[AveragingKernel] = None,
    rm: Optional[RadiiMultiset] = None,
    eps: Optional[float] = None,
    workers: int = 1,
) -> ShellReport:
    """
    <|S(., eps)|^2>_T against n |E^M|, with eps = T^(-gamma).

    :param ctx: Form.
    :type ctx: QuadFormCtx
    :param alpha: Center.
    :type alpha: Optional[ShiftVector]
    :param T: Scale.
    :type T: float
    :param eps_rule: Width rule, gamma in (0, 1).
    :type eps_rule: EpsRule
    :param kernel: Kernel, the bump on [1, 2] by default.
    :type kernel: Optional[AveragingKernel]
    :param rm: Radii to reuse.
    :type rm: Optional[RadiiMultiset]
    :param eps: Explicit width overriding the rule.
    :type eps: Optional[float]
    :param workers: Worker threads.
    :type workers: int
    :return: Report.
    :rtype: ShellReport
    :raises ValidationError: If gamma is outside (0, 1).
    """
    if eps is None and not eps_rule.in_variance_regime:
        raise ValidationError(
            f"Shell variance needs gamma in (0, 1), got {eps_rule.gamma}"
        )
    kernel = kernel or default_kernel()
    width = _shell_eps(T, eps, eps_rule)
    rm = ensure_radii(ctx, alpha, kernel.c1 * T + width, rm, workers)
    ev = DeviationEvaluator(rm, shell_allowance=width)
    res = _shell_average(ev, rm, T, width, kernel, 2, workers)
    mean = _shell_average(ev, rm, T, width, kernel, 1, workers)
    target = ctx.n * ctx.volume
    logger.info(
        f"<|S|^2>_T at T={T:g}, eps={width:.4g}: {res.value:.6g} "
        f"(target {target:.6g})"
    )
    return ShellReport(
        T=float(T),
        eps=width,
        value=res.value,
        target=target,
        ratio=res.value / target,
        est_error=res.est_error,
        mean_S=mean.value,
    )


def mean_S(
    ctx: QuadFormCtx,
    alpha: Optional[ShiftVector],
    T: float,
    eps_rule: EpsRule = EpsRule(),
    kernel: Optional[AveragingKernel] = None,
    rm: Optional[RadiiMultiset] = None,
    workers: int = 1,
) -> AverageResult:
    """
    <S(., eps)>_T with eps = T^(-gamma) for any gamma > 0.

    :return: Average and error estimate.
    :rtype: AverageResult
    """
    kernel = kernel or default_kernel()
    width = _shell_eps(T, None, eps_rule)
    rm = ensure_radii(ctx, alpha, kernel.c1 * T + width, rm, workers)
    ev = DeviationEvaluator(rm, shell_allowance=width)
    return _shell_average(ev, rm, T, width, kernel, 1, workers)


def shell_stability(
    ctx: QuadFormCtx,
    alpha: Optional[ShiftVector],
    T: float,
    eps: float,
    kernel: Optional[AveragingKernel] = None,
    rm: Optional[RadiiMultiset] = None,
    workers: int = 1,
) -> StabilityReport:
    """
    Relative change of <|S|^2>_T when eps is halved at fixed T.

    :return: Both values and the relative change.
    :rtype: StabilityReport
    """
    kernel = kernel or default_kernel()
    rm = ensure_radii(ctx, alpha, kernel.c1 * T + eps, rm, workers)
    ev = DeviationEvaluator(rm, shell_allowance=eps)
    full = _shell_average(ev, rm, T, eps, kernel, 2, workers).value
    half = _shell_average(ev, rm, T, eps / 2.0, kernel, 2, workers).value
    change = abs(half - full) / abs(full) if full else math.inf
    return StabilityReport(value=full, half_value=half, rel_change=change)


def _sin2_terms(
    ctx: QuadFormCtx, adj_series: ExpSumSeries, eps: float, p_hi: int
) -> Tuple[np.ndarray, np.ndarray]:
    n, d = ctx.n, float(ctx.detM)
    p = np.arange(1, p_hi + 1, dtype=np.float64)
    sin2 = np.sin(math.pi * eps * np.sqrt(p / d)) ** 2
    terms = sin2 * adj_series.abs2[1 : p_hi + 1] * p ** (-(n + 1) / 2.0)
    return p, terms


def diag_shell_variance(
    ctx: QuadFormCtx,
    adj_series: ExpSumSeries,
    eps: float,
    K: float,
    zeta: float = 0.5,
    mollifier: Optional[Mollifier] = None,
) -> float:
    """
    Diagonal part of the shell variance.

    (2 d^((n-1)/2)/(eps pi^2)) sum_{p <= K^(2+zeta)} sin^2(pi eps
    sqrt(p/d)) |r(p)|^2 p^(-(n+1)/2) |hat(sqrt(p)/(K sqrt(d)))|^2 with
    d = det M and r the adjugate series. Tends to n |E^M| as eps -> 0
    with eps K -> infinity.

    :raises TruncationExceedsSeries: If K^(2+zeta) > p_max.
    :raises NonpositiveEps: If eps <= 0.
    """
    sp = SpectralEvaluator.for_form(ctx, adj_series, K, zeta, mollifier)
    if not eps > 0:
        raise NonpositiveEps(f"eps must be positive, got {eps}")
    n, d = ctx.n, float(ctx.detM)
    p, terms = _sin2_terms(ctx, adj_series, eps, sp.p_cut)
    hat = np.asarray(sp.mollifier.hat(np.sqrt(p) / (sp.K * math.sqrt(d))))
    total = float(np.sum(terms * hat * hat))
    return 2.0 * d ** ((n - 1) / 2.0) * total / (eps * math.pi**2)


def truncated_shell_diagonal(
    ctx: QuadFormCtx, adj_series: ExpSumSeries, eps: float, N: float
) -> Tuple[float, float]:
    """
    Unsmoothed diagonal shell sum over p < N/eps^2 and its limit.

    The target is (n |E^M| / pi^2) int_{s0}^{s1} sin^2(pi sqrt(s))
    s^(-3/2) ds with s0 = eps^2/d and s1 = N/d.

    :return: (value, target).
    :rtype: Tuple[float, float]
    :raises TruncationExceedsSeries: If N/eps^2 exceeds the series.
    """
    if ctx.adjM != adj_series.M:
        raise SeriesMismatch(
            f"Shell sum needs the series of {ctx.adjM}, got {adj_series.M}"
        )
    if not eps > 0 or not N > 0:
        raise ValidationError(f"eps and N must be positive: {eps}, {N}")
    p_hi = int(math.ceil(N / eps**2)) - 1
    if p_hi > adj_series.p_max:
        raise TruncationExceedsSeries(
            f"N/eps^2 = {N / eps ** 2:g} exceeds the series length "
            f"{adj_series.p_max}"
        )
    n, d = ctx.n, float(ctx.detM)
    _, terms = _sin2_terms(ctx, adj_series, eps, max(p_hi, 0))
    pref = 2.0 * d ** ((n - 1) / 2.0) / (eps * math.pi**2)
    value = pref * float(np.sum(terms))
    s0, s1 = eps**2 / d, N / d
    if s1 <= s0:
        return value, 0.0
    integral, _ = integrate.quad(
        lambda s: math.sin(math.pi * math.sqrt(s)) ** 2 * s**-1.5,
        s0,
        s1,
        limit=400,
    )
    target = ctx.n * ctx.volume * integral / math.pi**2
    return value, target


def shell_block_sum(
    series: ExpSumSeries, eps: float, N1: float, N2: float
) -> Tuple[float, float]:
    """
    sum_{N1 <= eps^2 p < N2} eps^n |r(p)|^2 next to |E^M|(N2^(n/2) -
    N1^(n/2)).

    :return: (value, target).
    :rtype: Tuple[float, float]
    :raises TruncationExceedsSeries: If N2/eps^2 exceeds the series.
    """
    if not eps > 0 or not 0 <= N1 < N2:
        raise ValidationError(
            f"Need eps > 0 and 0 <= N1 < N2, got {eps}, {N1}, {N2}"
        )
    p_lo = max(1, int(math.ceil(N1 / eps**2)))
    p_hi = int(math.ceil(N2 / eps**2)) - 1
    if p_hi > series.p_max:
        raise TruncationExceedsSeries(
            f"N2/eps^2 = {N2 / eps ** 2:g} exceeds the series length "
            f"{series.p_max}"
        )
    n = series.n
    block = float(np.sum(series.abs2[p_lo : p_hi + 1]))
    value = eps**n * block
    target = series.volume * (N2 ** (n / 2.0) - N1 ** (n / 2.0))
    return value, target


def spectral_error(
    rm: RadiiMultiset,
    sp: SpectralEvaluator,
    T: float,
    kernel: Optional[AveragingKernel] = None,
    samples: int = 2000,
) -> AverageResult:
    """
    <|F - F_K0|^2>_T by kernel-weighted midpoint sampling.

    :raises SupportExceedsRadii: If the support leaves the radii.
    """
    kernel = kernel or default_kernel()
    check_support(kernel, T, rm.R_max)
    ev = DeviationEvaluator(rm)

    def sq_err(t: np.ndarray) -> np.ndarray:
        diff = np.asarray(ev.F(t)) - np.asarray(sp.F_K0(t))
        return diff * diff

    return average_sampled(sq_err, T, kernel, samples=samples)


def fit_trend(
    K_list: Sequence[float], values: Sequence[float], T: float, n: int
) -> TrendFit:
    """
    Fit values ~ C T^(n-1)/K.

    :param K_list: Smoothing parameters.
    :type K_list: Sequence[float]
    :param values: Measured errors, one per K (> 0).
    :type values: Sequence[float]
    :param T: Scale.
    :type T: float
    :param n: Dimension.
    :type n: int
    :return: Constant and worst factor.
    :rtype: TrendFit
    """
    K = np.asarray(K_list, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if K.size == 0 or K.size != v.size:
        raise ValidationError("K_list and values must be nonempty and match")
    if np.any(v <= 0) or np.any(K <= 0):
        raise ValidationError("Trend fit needs positive K and values")
    scaled = v * K / T ** (n - 1)
    C = float(np.exp(np.mean(np.log(scaled))))
    factors = v / (C * T ** (n - 1) / K)
    worst = float(np.max(np.maximum(factors, 1.0 / factors)))
    return TrendFit(C=C, max_factor=worst)
