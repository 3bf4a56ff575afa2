"""
Smooth averaging kernels mu with support [c0, c1] and integral 1.

<f>_T = int f(t) mu_T(t) dt with mu_T(t) = mu(t/T)/T.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import PchipInterpolator

from ellipsum.errors import ValidationError
from ellipsum.utils.logging import logger

ArrayLike = Union[float, np.ndarray]
Density = Callable[[np.ndarray], np.ndarray]

CDF_GRID = 4096
CELL_ORDER = 8
NORMALIZATION_TOL = 1e-10


def bump_density(c0: float, c1: float) -> Density:
    """
    exp(-1/(1 - s^2)) with s mapping [c0, c1] onto [-1, 1], unnormalized.

    :param c0: Left end of the support.
    :type c0: float
    :param c1: Right end of the support.
    :type c1: float
    :return: Vectorized density, zero outside (c0, c1).
    :rtype: Density
    """
    mid, half = 0.5 * (c0 + c1), 0.5 * (c1 - c0)

    def density(t: np.ndarray) -> np.ndarray:
        s = (np.asarray(t, dtype=np.float64) - mid) / half
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        out[inside] = np.exp(-1.0 / (1.0 - si * si))
        return out

    return density


def _cells(
    edges: np.ndarray, order: int
) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes, weights


class AveragingKernel:
    """
    Normalized density on [c0, c1] with a cached CDF and moments.

    The CDF is the cumulative sum of Gauss-Legendre cell integrals on a
    uniform grid, interpolated by a monotone cubic (PCHIP). The total of
    the same cells is the normalization, so cdf(c0) = 0 and cdf(c1) = 1
    hold exactly.

    :ivar c0 (float): Left end of the support.
    :ivar c1 (float): Right end of the support.
    :ivar Z (float): Integral of the raw density.
    :ivar cdf_error (float): Largest interpolation error of the CDF at the
        cell midpoints.
    """

    def __init__(
        self,
        c0: float = 1.0,
        c1: float = 2.0,
        density: Optional[Density] = None,
        grid: int = CDF_GRID,
    ):
        """
        :param c0: Left end of the support (> 0).
        :type c0: float
        :param c1: Right end of the support (> c0).
        :type c1: float
        :param density: Nonnegative raw density; the bump by default.
        :type density: Optional[Density]
        :param grid: CDF grid points.
        :type grid: int
        :raises ValidationError: On a bad support or a vanishing density.
        """
        if not 0 < c0 < c1:
            raise ValidationError(
                f"Kernel support must satisfy 0 < c0 < c1, got [{c0}, {c1}]"
            )
        if grid < 16:
            raise ValidationError(f"CDF grid too small: {grid}")
        self.c0 = float(c0)
        self.c1 = float(c1)
        self.name = "bump" if density is None else "custom"
        self._raw = density or bump_density(self.c0, self.c1)
        self._moments: Dict[int, float] = {}

        self._grid = np.linspace(self.c0, self.c1, grid)
        nodes, weights = _cells(self._grid, CELL_ORDER)
        values = self._raw_inside(nodes)
        if np.any(values < 0):
            raise ValidationError("Kernel density must be nonnegative")
        cells = np.sum(weights * values, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(cells)])
        self.Z = float(cum[-1])
        if not self.Z > 0:
            raise ValidationError("Kernel density integrates to zero")
        self._nodes, self._weights = nodes.ravel(), weights.ravel()
        self._node_mu = values.ravel() / self.Z
        cum /= self.Z
        cum[-1] = 1.0
        self._cdf = PchipInterpolator(self._grid, cum, extrapolate=False)

        mids = 0.5 * (self._grid[1:] + self._grid[:-1])
        left = np.column_stack([self._grid[:-1], mids])
        half_nodes, half_weights = _cells(left.ravel(), CELL_ORDER)
        half_cells = np.sum(
            half_weights * self._raw_inside(half_nodes), axis=1
        )[::2]
        direct = cum[:-1] + half_cells / self.Z
        self.cdf_error = float(np.max(np.abs(self._cdf(mids) - direct)))
        logger.debug(
            f"Kernel {self.name} on [{self.c0:g}, {self.c1:g}]: "
            f"Z={self.Z:.12g}, cdf error {self.cdf_error:.2e}"
        )

    def _raw_inside(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        inside = (t > self.c0) & (t < self.c1)
        return np.where(inside, self._raw(t), 0.0)

    @property
    def support(self) -> Tuple[float, float]:
        """(c0, c1)."""
        return self.c0, self.c1

    def support_T(self, T: float) -> Tuple[float, float]:
        """Support of mu_T."""
        return self.c0 * T, self.c1 * T

    def mu(self, t: ArrayLike) -> ArrayLike:
        """Normalized density at t."""
        arr = np.asarray(t, dtype=np.float64)
        out = self._raw_inside(arr) / self.Z
        return float(out) if out.ndim == 0 else out

    def mu_T(self, t: ArrayLike, T: float) -> ArrayLike:
        """
        mu_T(t) = mu(t/T)/T.

        :param t: Point(s).
        :type t: float | np.ndarray
        :param T: Scale (> 0).
        :type T: float
        :return: Density values.
        :rtype: float | np.ndarray
        """
        arr = np.asarray(t, dtype=np.float64)
        out = np.asarray(self.mu(arr / T)) / T
        return float(out) if out.ndim == 0 else out

    def cdf(self, s: ArrayLike) -> ArrayLike:
        """int_{-inf}^s mu, 0 below c0 and 1 above c1."""
        arr = np.asarray(s, dtype=np.float64)
        inner = self._cdf(np.clip(arr, self.c0, self.c1))
        out = np.where(
            arr <= self.c0, 0.0, np.where(arr >= self.c1, 1.0, inner)
        )
        return float(out) if out.ndim == 0 else out

    def cdf_T(self, t: ArrayLike, T: float) -> ArrayLike:
        """CDF of mu_T."""
        return self.cdf(np.asarray(t, dtype=np.float64) / T)

    def moment(self, k: int) -> float:
        """
        int t^k mu(t) dt, cached per k.

        :param k: Order (>= 0).
        :type k: int
        :return: Moment.
        :rtype: float
        """
        if k not in self._moments:
            self._moments[k] = float(
                np.sum(self._weights * self._node_mu * self._nodes**k)
            )
        return self._moments[k]

    def normalization_defect(self) -> float:
        """|int mu - 1| from the cell rule, a self check."""
        return abs(self.moment(0) - 1.0)

    def __repr__(self) -> str:
        return (
            f"AveragingKernel({self.name}, [{self.c0:g}, {self.c1:g}], "
            f"grid={self._grid.size})"
        )


def default_kernel() -> AveragingKernel:
    """The bump on [1, 2]."""
    return AveragingKernel(1.0, 2.0)


def check_normalized(kernel: AveragingKernel) -> None:
    """
    :raises ArithmeticError: If the kernel integral differs from 1 by more
        than NORMALIZATION_TOL.
    """
    defect = kernel.normalization_defect()
    if defect > NORMALIZATION_TOL or math.isnan(defect):
        raise ArithmeticError(f"Kernel integral off by {defect:.3g}")
