"""
Smooth averages <f>_T and the averaged-statistics experiments.
"""

from __future__ import annotations

from .experiments import (
    EpsRule,
    ShellReport,
    StabilityReport,
    TrendFit,
    VarianceReport,
    diag_shell_variance,
    diag_variance,
    fit_trend,
    is_decaying,
    mean_F,
    mean_S,
    shell_block_sum,
    shell_stability,
    spectral_error,
    truncated_shell_diagonal,
    var_F,
    var_S,
)
from .integrate import (
    AverageResult,
    average_piecewise,
    average_sampled,
    average_step,
)
from .kernel import AveragingKernel, bump_density, default_kernel

__all__ = [
    "AverageResult",
    "AveragingKernel",
    "EpsRule",
    "ShellReport",
    "StabilityReport",
    "TrendFit",
    "VarianceReport",
    "average_piecewise",
    "average_sampled",
    "average_step",
    "bump_density",
    "default_kernel",
    "diag_shell_variance",
    "diag_variance",
    "fit_trend",
    "is_decaying",
    "mean_F",
    "mean_S",
    "shell_block_sum",
    "shell_stability",
    "spectral_error",
    "truncated_shell_diagonal",
    "var_F",
    "var_S",
]
