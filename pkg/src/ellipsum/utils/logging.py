"""
Logging for ellipsum.

Records go to stderr so that tables and JSON summaries on stdout stay
machine-readable. Every record carries a ``run`` label naming the
experiment it belongs to (``command@config-digest``, ``-`` outside a run).
Stage timing reports travel on their own logger, ``ellipsum.perf``, and
get their own handler and layout.
"""

from __future__ import annotations

import logging
import sys
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator, Optional, TextIO

PERF_LOGGER_NAME = "ellipsum.perf"
NO_RUN = "-"

LOGGER_FORMAT = (
    "%(asctime)s [%(levelname)-8.8s] [%(run)s] "
    "%(module)s.%(funcName)s: %(message)s (%(filename)s:%(lineno)d)"
)

_CONSOLE_TAG = "_ellipsum_console_handler"
_PERF_TAG = "_ellipsum_perf_handler"
_current_run: ContextVar[str] = ContextVar("ellipsum_run", default=NO_RUN)


@contextmanager
def bind_run(label: str) -> Iterator[str]:
    """
    Label every record emitted inside the block with ``label``.

    :param label: Run label, e.g. ``"meansq@3f2a9c1b"``.
    :type label: str
    """
    token = _current_run.set(label)
    try:
        yield label
    finally:
        _current_run.reset(token)


def current_run() -> str:
    """Label of the run in progress, ``-`` when there is none."""
    return _current_run.get()


def _install_run_factory():
    """
    Make every LogRecord carry ``run`` so that formatters never fail,
    including for records of third-party loggers. Installed once.
    """
    previous = logging.getLogRecordFactory()
    if getattr(previous, "_ellipsum_run", False):
        return

    def factory(*args, **kwargs):
        record = previous(*args, **kwargs)
        if not hasattr(record, "run"):
            record.run = _current_run.get()
        return record

    setattr(factory, "_ellipsum_run", True)
    logging.setLogRecordFactory(factory)


class ConsoleColorFormatter(logging.Formatter):
    """
    Wraps each line in an ANSI color by level, when the stream is a
    terminal.
    """

    COLORS = {
        logging.DEBUG: "\033[96m",
        logging.INFO: "\033[92m",
        logging.WARNING: "\033[93m",
        logging.ERROR: "\033[91m",
        logging.CRITICAL: "\033[95m",
    }
    RESET = "\033[0m"

    def __init__(self, fmt: str, use_color: bool = True):
        super().__init__(fmt)
        self.use_color = use_color

    def format(self, record: logging.LogRecord) -> str:
        msg = super().format(record)
        color = self.COLORS.get(record.levelno)
        if not self.use_color or color is None:
            return msg
        return f"{color}{msg}{self.RESET}"


class OnlyPerf(logging.Filter):
    """Accept only stage timing records."""

    def filter(self, record: logging.LogRecord) -> bool:
        return record.name.startswith(PERF_LOGGER_NAME)


class ExcludePerf(logging.Filter):
    """Drop stage timing records."""

    def filter(self, record: logging.LogRecord) -> bool:
        return not record.name.startswith(PERF_LOGGER_NAME)


class PerfFormatter(logging.Formatter):
    """Header line with the run label, then the stage table verbatim."""

    def format(self, record: logging.LogRecord) -> str:
        ts = self.formatTime(record, "%Y-%m-%d %H:%M:%S")
        run = getattr(record, "run", NO_RUN)
        return f"{ts} [stages] [{run}]\n{record.getMessage()}"


def _tagged(root: logging.Logger, tag: str) -> Optional[logging.Handler]:
    for handler in root.handlers:
        if getattr(handler, tag, False):
            return handler
    return None


def _add_handler(
    root: logging.Logger,
    tag: str,
    stream: TextIO,
    formatter: logging.Formatter,
    keep: logging.Filter,
):
    handler = logging.StreamHandler(stream=stream)
    setattr(handler, tag, True)
    handler.setFormatter(formatter)
    handler.addFilter(keep)
    root.addHandler(handler)


def configure_logging(
    level: int = logging.WARNING, stream: Optional[TextIO] = None
):
    """
    Configure the root logger once for the whole process. Later calls
    only change the level.

    :param level: Root log level.
    :type level: int
    :param stream: Destination of new handlers, stderr by default.
    :type stream: Optional[TextIO]
    """
    _install_run_factory()
    root = logging.getLogger()
    root.setLevel(level)
    out = stream if stream is not None else sys.stderr
    use_color = bool(getattr(out, "isatty", lambda: False)())

    if _tagged(root, _CONSOLE_TAG) is None:
        _add_handler(
            root,
            _CONSOLE_TAG,
            out,
            ConsoleColorFormatter(LOGGER_FORMAT, use_color=use_color),
            ExcludePerf(),
        )
    if _tagged(root, _PERF_TAG) is None:
        _add_handler(root, _PERF_TAG, out, PerfFormatter(), OnlyPerf())


configure_logging()
logger = logging.getLogger("ellipsum")
