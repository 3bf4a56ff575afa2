"""
CSV and JSON writers. Floats are written with 17 significant digits so
that every value reads back bit-identically.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def format_float(value: float) -> str:
    """``value`` with 17 significant digits."""
    return f"{float(value):.17g}"


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if value is None:
        return ""
    return str(value)


def jsonable(value: Any) -> Any:
    """
    Plain JSON value: numpy scalars unwrapped, tuples as lists, non-finite
    floats as None.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        as_float = float(value)
        return as_float if math.isfinite(as_float) else None
    if isinstance(value, complex):
        return [jsonable(value.real), jsonable(value.imag)]
    if isinstance(value, Path):
        return str(value)
    return value


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """
    Render a table as CSV text with ``\\n`` line endings.

    :param header: Column names.
    :type header: Sequence[str]
    :param rows: Rows of cells.
    :type rows: Iterable[Sequence[Any]]
    :return: CSV text.
    :rtype: str
    :raises ValueError: If a row length differs from the header.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(
                f"Row has {len(row)} cells, header has {len(header)}"
            )
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def json_text(payload: Any) -> str:
    """Sorted, indented JSON with a trailing newline."""
    # json writes floats with repr, which already round-trips exactly
    return json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n"


def write_text(path: Path, text: str) -> str:
    """
    Write ``text`` atomically and return its sha256.

    :param path: Destination.
    :type path: Path
    :param text: Contents.
    :type text: str
    :return: Hex digest of the UTF-8 bytes.
    :rtype: str
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    return hashlib.sha256(data).hexdigest()
