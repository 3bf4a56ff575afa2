"""
Jacobi theta sums, generator phases and the mean-square bridge to
twisted representation numbers.
"""

from __future__ import annotations

from .bridge import (
    BridgeRow,
    MeanSquareIdentity,
    bridge_check,
    diagonal_ctx,
    msq_integral_u,
    radial_target,
    theta_period_mean,
)
from .group import Generator, GroupPoint, apply_generator
from .profiles import (
    ExactIndicator,
    Gaussian,
    RadialIndicatorApprox,
    RotatedGaussian,
    ThetaProfile,
    ValidationReport,
    gaussian_rotation,
    rotate_by_quadrature,
    rotation_l2_norm,
    sigma,
    validate_rotation,
)
from .sums import PhaseCheck, phase_check, theta_sum

__all__ = [
    "BridgeRow",
    "ExactIndicator",
    "Gaussian",
    "Generator",
    "GroupPoint",
    "MeanSquareIdentity",
    "PhaseCheck",
    "RadialIndicatorApprox",
    "RotatedGaussian",
    "ThetaProfile",
    "ValidationReport",
    "apply_generator",
    "bridge_check",
    "diagonal_ctx",
    "gaussian_rotation",
    "msq_integral_u",
    "phase_check",
    "radial_target",
    "rotate_by_quadrature",
    "rotation_l2_norm",
    "sigma",
    "theta_period_mean",
    "theta_sum",
    "validate_rotation",
]
