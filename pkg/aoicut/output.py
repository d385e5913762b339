import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from aoicut import util

logger = logging.getLogger(__name__)

format_options = ["csv", "json"]


def plain(value: Any) -> Any:
    """ Converts numpy scalars to the matching Python type; other values pass through. """
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _json_value(value: Any) -> Any:
    value = plain(value)
    if isinstance(value, float) and not math.isfinite(value):
        return util.format_number(value)
    return value


def _csv_value(value: Any) -> Any:
    value = plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return util.format_number(value)


def render_csv(rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    """ Render rows as CSV with a header line.

        Parameters:
            rows (Sequence[Dict[str, Any]]): Rows to render.
            columns (Optional[List[str]]): Column order, the keys of the first row by default.

        Returns:
            str: CSV text; every row ends with a newline.
    """
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _csv_value(row.get(key)) for key in columns})
    return buffer.getvalue()


def render_json(rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    """ Render rows as a JSON array of objects; infinities become the strings ``inf`` and ``-inf``. """
    data = []
    for row in rows:
        keys = columns if columns is not None else list(row.keys())
        data.append({key: _json_value(row.get(key)) for key in keys})
    return json.dumps(data, indent=2) + "\n"


def render(rows: Sequence[Dict[str, Any]], output_format: str = "csv", columns: Optional[List[str]] = None) -> str:
    """ Render rows in ``csv`` or ``json``.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When the format is not one of ``csv`` or ``json``.
    """
    output_format = util.validate_options("Format", output_format, format_options)
    if output_format == "json":
        return render_json(rows, columns)
    return render_csv(rows, columns)


def write(text: str, path: Optional[Union[str, Path]] = None) -> None:
    """ Write UTF-8 text to ``path``, or to standard output when ``path`` is None or ``-``. """
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {path}")
