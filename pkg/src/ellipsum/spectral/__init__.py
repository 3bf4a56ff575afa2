"""
Exponential-sum series, mollifiers and the deviation functionals built on
them.
"""

from __future__ import annotations

from .counting import F, F_K0, S, DeviationEvaluator, SpectralEvaluator
from .expsums import (
    AbelReport,
    ExpSumSeries,
    TraceRow,
    VarianceSeries,
    abel_block_check,
    boundedness_check,
    mean_square_trace,
    rep_sums,
    variance_series,
)
from .mollifier import (
    BumpMollifier,
    GaussianMollifier,
    make_mollifier,
    mollifier_hat,
)

__all__ = [
    "AbelReport",
    "BumpMollifier",
    "DeviationEvaluator",
    "ExpSumSeries",
    "F",
    "F_K0",
    "GaussianMollifier",
    "S",
    "SpectralEvaluator",
    "TraceRow",
    "VarianceSeries",
    "abel_block_check",
    "boundedness_check",
    "make_mollifier",
    "mean_square_trace",
    "mollifier_hat",
    "rep_sums",
    "variance_series",
]
