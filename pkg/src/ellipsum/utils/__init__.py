"""
ellipsum utilities package
"""

from __future__ import annotations

from .logging import bind_run, configure_logging, logger
from .profiler import StageTimer
from .workers import ShardPool

__all__ = [
    "logger",
    "bind_run",
    "configure_logging",
    "StageTimer",
    "ShardPool",
]
