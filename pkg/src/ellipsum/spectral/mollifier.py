"""
Radial mollifiers and their Fourier transforms.

Both profiles integrate to 1, so hat(0) = 1. The Gaussian has a closed
form; the compactly supported bump is transformed by a Hankel integral
evaluated with composite Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

ArrayLike = Union[float, np.ndarray]

BUMP_PANELS = 128
BUMP_ORDER = 16
_HANKEL_CHUNK = 256


class GaussianMollifier:
    """phi(x) = exp(-pi |x|^2), hat(s) = exp(-pi s^2) in every dimension."""

    name = "gaussian"

    def hat(self, s: ArrayLike) -> ArrayLike:
        """
        Radial Fourier transform.

        :param s: Frequency norm(s) >= 0.
        :type s: float | np.ndarray
        :return: exp(-pi s^2).
        :rtype: float | np.ndarray
        """
        s = np.asarray(s, dtype=np.float64)
        out = np.exp(-math.pi * s * s)
        return float(out) if out.ndim == 0 else out

    def __repr__(self) -> str:
        return "GaussianMollifier()"


def _composite_nodes(
    panels: int, order: int
) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


class BumpMollifier:
    """
    phi(x) = c exp(-1/(1 - |x|^2)) on the unit ball of R^n, with c chosen
    so that the integral is 1.
    """

    name = "bump"

    def __init__(
        self, n: int, panels: int = BUMP_PANELS, order: int = BUMP_ORDER
    ):
        """
        :param n: Dimension.
        :type n: int
        :param panels: Gauss-Legendre panels on [0, 1].
        :type panels: int
        :param order: Nodes per panel.
        :type order: int
        """
        if n < 1:
            raise ValueError(f"Dimension must be >= 1, got {n}")
        self.n = n
        self._r, self._w = _composite_nodes(panels, order)
        r = self._r
        self._profile = np.exp(-1.0 / (1.0 - r * r))
        sphere = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
        mass = sphere * float(np.sum(self._w * self._profile * r ** (n - 1)))
        self.c = 1.0 / mass
        self._hat_cached = lru_cache(maxsize=1 << 16)(self._hat_scalar)

    def profile(self, r: ArrayLike) -> ArrayLike:
        """phi at radius r (zero outside the unit ball)."""
        r = np.asarray(r, dtype=np.float64)
        inside = r < 1.0
        out = np.zeros_like(r)
        ri = r[inside]
        out[inside] = self.c * np.exp(-1.0 / (1.0 - ri * ri))
        return float(out) if out.ndim == 0 else out

    def _hankel(self, s: np.ndarray) -> np.ndarray:
        n = self.n
        nu = n / 2.0 - 1.0
        r, w, prof = self._r, self._w, self._profile
        out = np.empty_like(s)
        for start in range(0, s.size, _HANKEL_CHUNK):
            sc = s[start : start + _HANKEL_CHUNK]
            kern = special.jv(nu, 2.0 * math.pi * sc[:, None] * r[None, :])
            integral = kern @ (w * prof * r ** (n / 2.0))
            out[start : start + _HANKEL_CHUNK] = (
                2.0 * math.pi * sc ** (1.0 - n / 2.0) * integral
            )
        return self.c * out

    def _hat_scalar(self, s: float) -> float:
        if s == 0.0:
            return 1.0
        return float(self._hankel(np.array([s]))[0])

    def hat(self, s: ArrayLike) -> ArrayLike:
        """
        Radial Fourier transform by Hankel quadrature.

        hat(s) = 2 pi s^(1 - n/2) int_0^1 phi(r) J_{n/2-1}(2 pi s r)
        r^(n/2) dr, with hat(0) = 1. Scalars are memoized.

        :param s: Frequency norm(s) >= 0.
        :type s: float | np.ndarray
        :return: Transform values.
        :rtype: float | np.ndarray
        """
        arr = np.asarray(s, dtype=np.float64)
        if arr.ndim == 0:
            return self._hat_cached(float(arr))
        out = np.ones_like(arr)
        nz = arr > 0
        if np.any(nz):
            out[nz] = self._hankel(arr[nz])
        return out

    def __repr__(self) -> str:
        return f"BumpMollifier(n={self.n})"


Mollifier = Union[GaussianMollifier, BumpMollifier]


def make_mollifier(kind: str, n: int) -> Mollifier:
    """
    Mollifier by name.

    :param kind: ``gaussian`` or ``bump``.
    :type kind: str
    :param n: Dimension (used by the bump).
    :type n: int
    :return: Mollifier.
    :rtype: Mollifier
    :raises ValueError: On an unknown name.
    """
    if kind == "gaussian":
        return GaussianMollifier()
    if kind == "bump":
        return BumpMollifier(n)
    raise ValueError(f"Unknown mollifier {kind!r} (gaussian or bump)")


def mollifier_hat(
    s: ArrayLike, mollifier: Optional[Mollifier] = None
) -> ArrayLike:
    """
    hat(s) of the given mollifier, Gaussian by default.

    :param s: Frequency norm(s) >= 0.
    :type s: float | np.ndarray
    :param mollifier: Profile.
    :type mollifier: Mollifier
    :return: Transform values.
    :rtype: float | np.ndarray
    """
    return (mollifier or GaussianMollifier()).hat(s)
