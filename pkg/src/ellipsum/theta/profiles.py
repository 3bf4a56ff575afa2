"""
Test profiles f for theta sums and their metaplectic rotations.

Only the Gaussian has a closed-form rotated profile f_phi. It is the
Gaussian integral of the rotation kernel, normalized with the integer
sigma(phi) so that f_phi is continuous in phi and f_0 = f. The closed
form can be checked against direct quadrature of the kernel with
``validate_rotation``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from ellipsum.errors import ValidationError
from ellipsum.utils.logging import logger

ROTATION_PANELS = 400
ROTATION_ORDER = 20
TAIL_WIDTH = 8.0
FACTOR_TOL = 1e-8
# squared radii within this of 1 count as inside the indicator
EDGE_TOL = 1e-12


class Gaussian:
    """f(w) = exp(-pi s |w|^2)."""

    kind = "gaussian"
    support_sq: Optional[float] = None

    def __init__(self, scale: float = 1.0):
        if not scale > 0:
            raise ValidationError(f"Gaussian scale must be > 0, got {scale}")
        self.scale = float(scale)

    @property
    def decay(self) -> float:
        """Length on which the profile drops by e^-pi."""
        return 1.0 / math.sqrt(self.scale)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.atleast_2d(np.asarray(w, dtype=np.float64))
        return np.exp(-math.pi * self.scale * np.sum(w * w, axis=1))

    def __repr__(self) -> str:
        return f"Gaussian(scale={self.scale:g})"


def _smooth_step(x: np.ndarray) -> np.ndarray:
    # 0 for x <= 0, 1 for x >= 1, C-infinity in between
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1 - x, 1.0)), 0.0)
    return a / (a + b)


class RadialIndicatorApprox:
    """
    f(w) = psi(|w|^2) with psi = 1 on [0, 1], 0 beyond 1 + 1/sharpness
    and smooth in between.
    """

    kind = "radial"

    def __init__(self, sharpness: float = 20.0):
        if not sharpness > 0:
            raise ValidationError(f"Sharpness must be > 0, got {sharpness}")
        self.sharpness = float(sharpness)
        self.support_sq = 1.0 + 1.0 / self.sharpness

    def psi(self, r: Union[float, np.ndarray]) -> np.ndarray:
        """
        Radial cutoff in the squared radius.

        :param r: Squared radius (>= 0).
        :type r: float | np.ndarray
        :return: psi(r) in [0, 1].
        :rtype: np.ndarray
        """
        r = np.asarray(r, dtype=np.float64)
        return 1.0 - _smooth_step((r - 1.0) * self.sharpness)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.atleast_2d(np.asarray(w, dtype=np.float64))
        return self.psi(np.sum(w * w, axis=1))

    def __repr__(self) -> str:
        return f"RadialIndicatorApprox(sharpness={self.sharpness:g})"


class ExactIndicator:
    """f(w) = 1 for |w|^2 <= 1, else 0. Theta sums are finite."""

    kind = "indicator"
    support_sq = 1.0 + EDGE_TOL

    def psi(self, r: Union[float, np.ndarray]) -> np.ndarray:
        """Indicator of [0, 1] in the squared radius, up to ``EDGE_TOL``."""
        r = np.asarray(r, dtype=np.float64)
        return (r <= self.support_sq).astype(np.float64)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.atleast_2d(np.asarray(w, dtype=np.float64))
        return self.psi(np.sum(w * w, axis=1))

    def __repr__(self) -> str:
        return "ExactIndicator()"


ThetaProfile = Union[Gaussian, RadialIndicatorApprox, ExactIndicator]


def sigma(phi: float) -> int:
    """
    Integer normalization of the rotation by phi.

    2 nu when phi = nu pi, 2 nu + 1 when nu pi < phi < (nu + 1) pi.

    :param phi: Angle.
    :type phi: float
    :return: sigma(phi).
    :rtype: int
    """
    nu = math.floor(phi / math.pi)
    if phi == nu * math.pi:
        return 2 * nu
    if phi < nu * math.pi:
        nu -= 1
    return 2 * nu + 1


def _is_singular(phi: float) -> bool:
    return phi == math.floor(phi / math.pi) * math.pi


@dataclass(frozen=True)
class RotatedGaussian:
    """
    f_phi(w) = prod_k A_k exp(-pi s_k w_k^2), the rotated Gaussian.

    :ivar phi (Tuple[float, ...]): Angles.
    :ivar amplitude (Tuple[complex, ...]): A_k.
    :ivar exponent (Tuple[complex, ...]): s_k, with Re s_k > 0.
    """

    phi: Tuple[float, ...]
    amplitude: Tuple[complex, ...]
    exponent: Tuple[complex, ...]

    @property
    def decay(self) -> float:
        """Largest decay length over the coordinates."""
        return max(1.0 / math.sqrt(s.real) for s in self.exponent)

    def coordinate(self, k: int, w: np.ndarray) -> np.ndarray:
        """One factor A_k exp(-pi s_k w^2) on a 1-d array."""
        w = np.asarray(w, dtype=np.float64)
        return self.amplitude[k] * np.exp(-math.pi * self.exponent[k] * w * w)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.atleast_2d(np.asarray(w, dtype=np.float64))
        out = np.ones(w.shape[0], dtype=np.complex128)
        for k in range(w.shape[1]):
            out *= self.coordinate(k, w[:, k])
        return out


def _rotate_1d(s: float, phi: float) -> Tuple[complex, complex]:
    sig = sigma(phi)
    norm = cmath.exp(-0.25j * math.pi * sig)
    if _is_singular(phi):
        # A = +-I, C = 0: f((-1)^nu w) = f(w) for the even Gaussian
        return norm, complex(s)
    c, sn = math.cos(phi), math.sin(phi)
    cot = c / sn
    amp = norm / math.sqrt(abs(sn)) / cmath.sqrt(complex(s, -cot))
    expo = complex(s * c, sn) / complex(c, s * sn)
    return amp, expo


def gaussian_rotation(
    profile: Gaussian, phi: Sequence[float]
) -> RotatedGaussian:
    """
    Closed form of f_phi for a Gaussian profile.

    :param profile: Gaussian.
    :type profile: Gaussian
    :param phi: One angle per coordinate.
    :type phi: Sequence[float]
    :return: Rotated profile.
    :rtype: RotatedGaussian
    """
    if not isinstance(profile, Gaussian):
        raise ValidationError(f"{profile!r} has no closed-form rotation")
    pairs = [_rotate_1d(profile.scale, float(p)) for p in phi]
    return RotatedGaussian(
        phi=tuple(float(p) for p in phi),
        amplitude=tuple(a for a, _ in pairs),
        exponent=tuple(e for _, e in pairs),
    )


def _line_nodes(
    half_width: float,
    panels: int = ROTATION_PANELS,
    order: int = ROTATION_ORDER,
) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    edges = np.linspace(-half_width, half_width, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def rotate_by_quadrature(
    profile: Gaussian, phi: float, w: np.ndarray
) -> np.ndarray:
    """
    f_phi(w) in one dimension from the rotation kernel itself.

    e^{-i pi sigma/4} |sin phi|^{-1/2} times the integral over w' of
    exp(i pi (cot phi (w'^2 + w^2) - 2 w w' / sin phi)) f(w').

    :param profile: Gaussian.
    :type profile: Gaussian
    :param phi: Angle off the multiples of pi.
    :type phi: float
    :param w: Evaluation points.
    :type w: np.ndarray
    :return: f_phi(w).
    :rtype: np.ndarray
    :raises ValidationError: At a multiple of pi.
    """
    if _is_singular(phi):
        raise ValidationError(f"phi={phi} has no kernel (sin phi = 0)")
    c, sn = math.cos(phi), math.sin(phi)
    cot = c / sn
    nodes, weights = _line_nodes(TAIL_WIDTH * profile.decay)
    base = weights * np.exp(
        -math.pi * profile.scale * nodes**2 + 1j * math.pi * cot * nodes**2
    )
    w = np.atleast_1d(np.asarray(w, dtype=np.float64))
    kernel = np.exp(
        1j * math.pi * cot * w[:, None] ** 2
        - 2j * math.pi * w[:, None] * nodes[None, :] / sn
    )
    norm = cmath.exp(-0.25j * math.pi * sigma(phi)) / math.sqrt(abs(sn))
    return norm * (kernel @ base)


@dataclass(frozen=True)
class ValidationReport:
    """
    Closed-form rotation against quadrature.

    :ivar angles (Tuple[float, ...]): Angles checked.
    :ivar max_abs_error (float): Largest |closed - quadrature|.
    :ivar ratios (Tuple[complex, ...]): Mean closed/quadrature per angle.
    :ivar factor (Optional[complex]): Constant unimodular factor shared by
        all angles when the two sides differ by one, else None.
    """

    angles: Tuple[float, ...]
    max_abs_error: float
    ratios: Tuple[complex, ...]
    factor: Optional[complex]

    @property
    def ok(self) -> bool:
        """Whether the two sides agree without a correction factor."""
        return self.factor is None and self.max_abs_error < FACTOR_TOL


def validate_rotation(
    profile: Gaussian,
    angles: Sequence[float],
    w_points: Optional[Sequence[float]] = None,
) -> ValidationReport:
    """
    Compare gaussian_rotation with direct quadrature of the kernel.

    :param profile: Gaussian.
    :type profile: Gaussian
    :param angles: Angles, none a multiple of pi.
    :type angles: Sequence[float]
    :param w_points: Evaluation points (default -2..2 in steps of 0.5).
    :type w_points: Optional[Sequence[float]]
    :return: Report.
    :rtype: ValidationReport
    """
    if w_points is None:
        w = np.linspace(-2.0, 2.0, 9)
    else:
        w = np.asarray(w_points, dtype=np.float64)
    worst = 0.0
    ratios: List[complex] = []
    for phi in angles:
        closed = gaussian_rotation(profile, [phi]).coordinate(0, w)
        quad = rotate_by_quadrature(profile, phi, w)
        worst = max(worst, float(np.max(np.abs(closed - quad))))
        ratios.append(complex(np.mean(closed / quad)))
    factor: Optional[complex] = None
    if worst >= FACTOR_TOL and ratios:
        first = ratios[0]
        shared = all(abs(r - first) < FACTOR_TOL for r in ratios)
        if shared and abs(abs(first) - 1.0) < FACTOR_TOL:
            factor = first
            logger.warning(
                f"Rotation closed form differs from quadrature by a "
                f"constant factor {first:.12g}"
            )
    return ValidationReport(
        angles=tuple(float(a) for a in angles),
        max_abs_error=worst,
        ratios=tuple(ratios),
        factor=factor,
    )


def rotation_l2_norm(
    profile: Gaussian, phi: Sequence[float]
) -> Tuple[float, float]:
    """
    L2 norms of f and f_phi by quadrature, coordinate by coordinate.

    :param profile: Gaussian.
    :type profile: Gaussian
    :param phi: One angle per coordinate.
    :type phi: Sequence[float]
    :return: (|f|, |f_phi|).
    :rtype: Tuple[float, float]
    """
    rotated = gaussian_rotation(profile, phi)
    norm_f = 1.0
    norm_r = 1.0
    for k in range(len(phi)):
        half = TAIL_WIDTH * max(profile.decay, rotated.decay)
        nodes, weights = _line_nodes(half)
        f = np.exp(-math.pi * profile.scale * nodes**2)
        g = rotated.coordinate(k, nodes)
        norm_f *= float(np.sum(weights * f * f))
        norm_r *= float(np.sum(weights * np.abs(g) ** 2))
    return math.sqrt(norm_f), math.sqrt(norm_r)
