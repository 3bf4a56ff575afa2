"""
Normalized lattice point deviations and their truncated spectral
approximation.

F(t) = (N(t) - |E| t^n) / t^((n-1)/2) and
S(t, eps) = (N(t+eps) - N(t) - |E|((t+eps)^n - t^n)) / (sqrt(eps)
t^((n-1)/2)) are read off a radii multiset. F_K0 is the leading term of
the Poisson/Bessel expansion of the mollified count, a cosine sum over
the shells of the adjugate form weighted by the adjugate series.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple, Union

import numpy as np

from ellipsum.arith.quadform import QuadFormCtx
from ellipsum.errors import (
    NonpositiveEps,
    RadiusOutOfRange,
    SeriesMismatch,
    TruncationExceedsSeries,
    ValidationError,
)
from ellipsum.lattice.radii import RadiiMultiset, count_upto
from ellipsum.spectral.expsums import ExpSumSeries
from ellipsum.spectral.mollifier import GaussianMollifier, Mollifier
from ellipsum.utils.logging import logger

ArrayLike = Union[float, np.ndarray]

IMAG_RESIDUE_TOL = 1e-9
_T_CHUNK = 64


def _out(values: np.ndarray, scalar: bool) -> ArrayLike:
    return float(values) if scalar else values


class DeviationEvaluator:
    """
    F and S of a radii multiset.

    :ivar rm (RadiiMultiset): Radii.
    :ivar volume (float): |E^M|.
    :ivar n (int): Dimension.
    :ivar T_max (float): Largest usable t (R_max minus shell allowance).
    """

    def __init__(self, rm: RadiiMultiset, shell_allowance: float = 0.0):
        """
        :param rm: Radii multiset.
        :type rm: RadiiMultiset
        :param shell_allowance: Headroom kept for t + eps queries.
        :type shell_allowance: float
        """
        self.rm = rm
        self.volume = rm.volume
        self.n = rm.n
        self.T_max = rm.R_max - shell_allowance

    def _check(self, t: np.ndarray, limit: float):
        if t.size and (np.any(t <= 0) or np.any(t > limit)):
            raise RadiusOutOfRange(
                f"t must lie in (0, {limit:g}], got "
                f"[{float(t.min()):g}, {float(t.max()):g}]"
            )

    def N(self, t: ArrayLike) -> ArrayLike:
        """Lattice point count in the closed ball of radius t."""
        arr = np.asarray(t, dtype=np.float64)
        return count_upto(self.rm, arr)

    def F(self, t: ArrayLike) -> ArrayLike:
        """
        Normalized deviation F(t).

        :param t: Radius or radii in (0, R_max].
        :type t: float | np.ndarray
        :return: F(t).
        :rtype: float | np.ndarray
        :raises RadiusOutOfRange: Outside (0, R_max].
        """
        arr = np.asarray(t, dtype=np.float64)
        self._check(arr, self.rm.R_max)
        n = self.n
        counts = np.asarray(count_upto(self.rm, arr), dtype=np.float64)
        values = (counts - self.volume * arr**n) / arr ** ((n - 1) / 2.0)
        return _out(values, arr.ndim == 0)

    def S(self, t: ArrayLike, eps: float) -> ArrayLike:
        """
        Normalized shell deviation S(t, eps).

        :param t: Radius or radii, t > 0 and t + eps <= R_max.
        :type t: float | np.ndarray
        :param eps: Shell width (> 0).
        :type eps: float
        :return: S(t, eps).
        :rtype: float | np.ndarray
        :raises NonpositiveEps: If eps <= 0.
        :raises RadiusOutOfRange: If the shell leaves the radii.
        """
        if not eps > 0:
            raise NonpositiveEps(f"eps must be positive, got {eps}")
        arr = np.asarray(t, dtype=np.float64)
        self._check(arr, self.rm.R_max - eps)
        n = self.n
        inner = np.asarray(count_upto(self.rm, arr), dtype=np.float64)
        outer = np.asarray(count_upto(self.rm, arr + eps), dtype=np.float64)
        smooth = self.volume * ((arr + eps) ** n - arr**n)
        values = (outer - inner - smooth) / (
            math.sqrt(eps) * arr ** ((n - 1) / 2.0)
        )
        return _out(values, arr.ndim == 0)

    def P(self, t: ArrayLike, eps: float) -> ArrayLike:
        """
        Correction term of S = (F(t+eps) - F(t))/sqrt(eps) + P.

        P = (((t+eps)/t)^((n-1)/2) - 1) F(t+eps) / sqrt(eps).
        """
        if not eps > 0:
            raise NonpositiveEps(f"eps must be positive, got {eps}")
        arr = np.asarray(t, dtype=np.float64)
        self._check(arr, self.rm.R_max - eps)
        ratio = ((arr + eps) / arr) ** ((self.n - 1) / 2.0)
        values = (ratio - 1.0) * np.asarray(self.F(arr + eps)) / (
            math.sqrt(eps)
        )
        return _out(values, arr.ndim == 0)

    def decomposition(
        self, t: ArrayLike, eps: float
    ) -> Tuple[ArrayLike, ArrayLike]:
        """
        Split S into the difference quotient of F and the correction P.

        :return: ((F(t+eps) - F(t))/sqrt(eps), P(t, eps)).
        :rtype: Tuple[float | np.ndarray, float | np.ndarray]
        """
        arr = np.asarray(t, dtype=np.float64)
        diff = (
            np.asarray(self.F(arr + eps)) - np.asarray(self.F(arr))
        ) / math.sqrt(eps)
        return _out(diff, arr.ndim == 0), self.P(t, eps)


def F(ev: DeviationEvaluator, t: ArrayLike) -> ArrayLike:
    """F_M(t); see :meth:`DeviationEvaluator.F`."""
    return ev.F(t)


def S(ev: DeviationEvaluator, t: ArrayLike, eps: float) -> ArrayLike:
    """S_M(t, eps); see :meth:`DeviationEvaluator.S`."""
    return ev.S(t, eps)


class SpectralEvaluator:
    """
    Truncated leading spectral term F_K0 of the normalized deviation.

    F_K0(t) = (1/pi) d^((n-1)/4) sum_{p <= K^(2+zeta)} cos(2 pi t sqrt(p/d)
    - (n+1) pi/4) p^(-(n+1)/4) hat(sqrt(p)/(K sqrt(d))) Re r_adj(p),
    with d = det M and r_adj the series of the adjugate form. The series
    is real up to rounding because its m and -m terms are conjugate; the
    imaginary residue is checked on every evaluation.

    :ivar K (float): Smoothing parameter.
    :ivar zeta (float): Truncation exponent.
    :ivar p_cut (int): floor(K^(2+zeta)).
    """

    def __init__(
        self,
        adj_series: ExpSumSeries,
        detM: int,
        K: float,
        zeta: float = 0.5,
        mollifier: Optional[Mollifier] = None,
    ):
        """
        :param adj_series: Series of the adjugate form.
        :type adj_series: ExpSumSeries
        :param detM: det M of the original form.
        :type detM: int
        :param K: Smoothing parameter (>= 1).
        :type K: float
        :param zeta: Truncation exponent in (0, 2].
        :type zeta: float
        :param mollifier: Profile; Gaussian by default.
        :type mollifier: Optional[Mollifier]
        :raises TruncationExceedsSeries: If K^(2+zeta) > p_max.
        """
        if K < 1:
            raise ValidationError(f"K must be >= 1, got {K}")
        if not 0 < zeta <= 2:
            raise ValidationError(f"zeta must lie in (0, 2], got {zeta}")
        self.series = adj_series
        self.n = adj_series.n
        self.detM = int(detM)
        self.K = float(K)
        self.zeta = float(zeta)
        self.mollifier = mollifier or GaussianMollifier()
        self.p_cut = int(math.floor(self.K ** (2.0 + self.zeta) + 1e-9))
        if self.p_cut > adj_series.p_max:
            raise TruncationExceedsSeries(
                f"K^(2+zeta) = {self.p_cut} exceeds the series length "
                f"{adj_series.p_max}"
            )
        if abs(self.mollifier.hat(0.0) - 1.0) > 1e-12:
            raise ValidationError("Mollifier transform must be 1 at 0")

        n, d = self.n, float(self.detM)
        p_all = np.arange(1, self.p_cut + 1)
        r = adj_series.r[1 : self.p_cut + 1]
        keep = r != 0
        p = p_all[keep].astype(np.float64)
        damp = p ** (-(n + 1) / 4.0) * np.asarray(
            self.mollifier.hat(np.sqrt(p) / (self.K * math.sqrt(d)))
        )
        self._freq = 2.0 * math.pi * np.sqrt(p / d)
        self._coef_re = damp * r[keep].real
        self._coef_im = damp * r[keep].imag
        self._scale = float(np.sum(np.abs(damp * np.abs(r[keep]))))
        self._pref = d ** ((n - 1) / 4.0) / math.pi
        self._phase0 = -(n + 1) * math.pi / 4.0
        self.last_imag_residue = 0.0
        logger.debug(
            f"Spectral evaluator K={self.K:g} zeta={self.zeta:g}: "
            f"{int(keep.sum())} of {self.p_cut} shells active"
        )

    @classmethod
    def for_form(
        cls,
        ctx: QuadFormCtx,
        adj_series: ExpSumSeries,
        K: float,
        zeta: float = 0.5,
        mollifier: Optional[Mollifier] = None,
    ) -> "SpectralEvaluator":
        """
        Evaluator for the form ``ctx``, checking the series matches adj M.

        :raises SeriesMismatch: If the series belongs to another matrix.
        """
        if adj_series.M != ctx.adjM:
            raise SeriesMismatch(
                f"Series built for {adj_series.M}, expected adj(M) = "
                f"{ctx.adjM}"
            )
        return cls(adj_series, ctx.detM, K, zeta=zeta, mollifier=mollifier)

    def F_K0(self, t: ArrayLike) -> ArrayLike:
        """
        Truncated spectral sum at t > 0.

        :param t: Radius or radii.
        :type t: float | np.ndarray
        :return: F_K0(t).
        :rtype: float | np.ndarray
        :raises ArithmeticError: If the imaginary residue exceeds 1e-9
            relative to the coefficient mass.
        """
        arr = np.asarray(t, dtype=np.float64)
        if arr.size and np.any(arr <= 0):
            raise RadiusOutOfRange("F_K0 needs t > 0")
        flat = np.atleast_1d(arr).ravel()
        re = np.empty_like(flat)
        residue = 0.0
        for start in range(0, flat.size, _T_CHUNK):
            tc = flat[start : start + _T_CHUNK]
            cos = np.cos(tc[:, None] * self._freq[None, :] + self._phase0)
            block = np.sum(cos * self._coef_re, axis=1)
            re[start : start + _T_CHUNK] = block
            im = np.sum(cos * self._coef_im, axis=1)
            if im.size:
                residue = max(residue, float(np.max(np.abs(im))))
        self.last_imag_residue = self._pref * residue
        if residue > IMAG_RESIDUE_TOL * max(1.0, self._scale):
            raise ArithmeticError(
                f"Imaginary residue {residue:.3g} in F_K0; the series is "
                "not conjugate symmetric"
            )
        values = self._pref * re.reshape(arr.shape)
        return _out(values, arr.ndim == 0)

    def S_K0(self, t: ArrayLike, eps: float) -> ArrayLike:
        """
        Spectral shell counterpart (F_K0(t+eps) - F_K0(t))/sqrt(eps).

        :raises NonpositiveEps: If eps <= 0.
        """
        if not eps > 0:
            raise NonpositiveEps(f"eps must be positive, got {eps}")
        arr = np.asarray(t, dtype=np.float64)
        values = (
            np.asarray(self.F_K0(arr + eps)) - np.asarray(self.F_K0(arr))
        ) / math.sqrt(eps)
        return _out(values, arr.ndim == 0)


def F_K0(sp: SpectralEvaluator, t: ArrayLike) -> ArrayLike:
    """F_K0(t); see :meth:`SpectralEvaluator.F_K0`."""
    return sp.F_K0(t)
