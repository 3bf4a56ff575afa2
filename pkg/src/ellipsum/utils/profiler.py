"""
Stage timing for experiment runs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from time import perf_counter
from typing import Dict

from ellipsum.utils.logging import PERF_LOGGER_NAME

perf_logger = logging.getLogger(PERF_LOGGER_NAME)


@dataclass(frozen=True)
class StageReport:
    """
    Wall time per stage of a run.

    :ivar stages_s (Dict[str, float]): Seconds per "start->end" pair.
    :ivar total_s (float): Seconds from the first to the last mark.
    """

    stages_s: Dict[str, float]
    total_s: float

    def format(self) -> str:
        """
        Render the report as aligned text lines.

        :return: Multi-line report.
        :rtype: str
        """
        if not self.stages_s:
            return "  (no stages)"
        width = max(len(k) for k in self.stages_s)
        lines = [
            f"  {k:<{width}}  {v:10.3f}s" for k, v in self.stages_s.items()
        ]
        lines.append(f"  {'total':<{width}}  {self.total_s:10.3f}s")
        return "\n".join(lines)


@dataclass
class StageTimer:
    """
    Marks named instants and reports the differences between
    consecutive marks.

    :ivar enabled (bool): Whether marks are recorded.
    :ivar marks (Dict[str, float]): Recorded instants, insertion ordered.
    """

    enabled: bool = True
    marks: Dict[str, float] = field(default_factory=dict)

    def mark(self, name: str):
        """
        Record an instant under the given name.

        :param name: Name of the mark.
        :type name: str
        """
        if not self.enabled:
            return
        self.marks[name] = perf_counter()

    def report(self) -> StageReport:
        """
        Differences between consecutive marks.

        :return: Stage report.
        :rtype: StageReport
        """
        keys = list(self.marks.keys())
        stages: Dict[str, float] = {}
        for a, b in zip(keys, keys[1:]):
            stages[f"{a}->{b}"] = self.marks[b] - self.marks[a]
        total = 0.0
        if len(keys) > 1:
            total = self.marks[keys[-1]] - self.marks[keys[0]]
        return StageReport(stages_s=stages, total_s=total)

    def emit(self) -> StageReport:
        """
        Send the current report to the perf logger and return it.

        :return: Stage report.
        :rtype: StageReport
        """
        report = self.report()
        if self.enabled:
            perf_logger.info(report.format())
        return report
