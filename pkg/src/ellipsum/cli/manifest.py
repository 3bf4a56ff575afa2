"""
Run manifest written next to the outputs of every command.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from ellipsum.cli.emit import json_text, write_text

MANIFEST_NAME = "manifest.json"
MANIFEST_SCHEMA = "ellipsum-manifest-1"


@dataclass
class RunManifest:
    """
    What produced a set of outputs.

    :ivar tool_version (str): Installed ellipsum version.
    :ivar command (str): Subcommand.
    :ivar config_text (str): Canonical config text.
    :ivar cache_digests (Dict[str, str]): sha256 of each cache file read
        or written, by file name.
    :ivar outputs (Dict[str, str]): sha256 of each output, by file name.
    :ivar est_errors (Dict[str, float]): Integration error estimate per
        result.
    :ivar wall_seconds (float): Wall time of the run.
    :ivar stages (Dict[str, float]): Seconds per stage.
    :ivar exit_code (int): Exit status.
    :ivar error (Optional[str]): Error message of a failed run.
    """

    tool_version: str
    command: str
    config_text: str
    cache_digests: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    est_errors: Dict[str, float] = field(default_factory=dict)
    wall_seconds: float = 0.0
    stages: Dict[str, float] = field(default_factory=dict)
    exit_code: int = 0
    error: Optional[str] = None

    @property
    def config_sha256(self) -> str:
        """Digest of the canonical config text."""
        return hashlib.sha256(self.config_text.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        """JSON-ready mapping."""
        return {
            "schema": MANIFEST_SCHEMA,
            "tool": "ellipsum",
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config_text.splitlines(),
            "config_sha256": self.config_sha256,
            "cache_digests": dict(sorted(self.cache_digests.items())),
            "outputs": dict(sorted(self.outputs.items())),
            "est_errors": dict(sorted(self.est_errors.items())),
            "wall_seconds": self.wall_seconds,
            "stages": self.stages,
            "exit_code": self.exit_code,
            "error": self.error,
        }

    def write(self, directory: Path) -> Path:
        """
        Write ``manifest.json`` into ``directory``.

        :param directory: Output directory.
        :type directory: Path
        :return: Manifest path.
        :rtype: Path
        """
        path = Path(directory) / MANIFEST_NAME
        write_text(path, json_text(self.to_dict()))
        return path
