"""
Exact and extended-precision arithmetic: quadratic forms, shift vectors,
double-double kernels.
"""

from __future__ import annotations

from .diophantine import (
    DioReport,
    RelationReport,
    ShiftVector,
    estimate_type,
    independence_scan,
    parse_shift,
)
from .quadform import (
    QuadFormCtx,
    Rationalized,
    ball_volume,
    build_ctx,
    dual_norm_sq,
    parse_matrix,
    qform_value,
    rationalize,
)

__all__ = [
    "DioReport",
    "QuadFormCtx",
    "Rationalized",
    "RelationReport",
    "ShiftVector",
    "ball_volume",
    "build_ctx",
    "dual_norm_sq",
    "estimate_type",
    "independence_scan",
    "parse_matrix",
    "parse_shift",
    "qform_value",
    "rationalize",
]
