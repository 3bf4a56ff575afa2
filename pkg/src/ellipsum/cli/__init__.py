"""
Command-line front end: configuration, commands, manifests and output.
"""

from __future__ import annotations

from ellipsum.cli.commands import COMMAND_TABLE, RunOutcome, RunSession, run
from ellipsum.cli.config import (
    RunConfig,
    build_kernel,
    load_config,
    parse_config_text,
)
from ellipsum.cli.manifest import RunManifest

__all__ = [
    "COMMAND_TABLE",
    "RunConfig",
    "RunManifest",
    "RunOutcome",
    "RunSession",
    "build_kernel",
    "load_config",
    "parse_config_text",
    "run",
]
