"""Reading and writing delimiter-separated point files."""

import math
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DataError


class PointFile(NamedTuple):
    path: str
    points: np.ndarray

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]


def _fields(line, comma):
    return [f.strip() for f in line.split(",")] if comma else line.split()


def _numeric(fields):
    try:
        [float(f) for f in fields]
    except ValueError:
        return False
    return True


def parse_points(path):
    """Parse one point per row; comma or whitespace separated.

    The delimiter is taken from the first non-blank line, which is skipped
    as a header if it is not numeric. Blank lines are ignored. Errors name
    the 1-based line (and column) at fault.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    lines = [(i, ln.strip()) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise DataError(f"{path}: no data")
    comma = "," in lines[0][1]
    if not _numeric(_fields(lines[0][1], comma)):
        lines = lines[1:]
        if not lines:
            raise DataError(f"{path}: no data")
    d = len(_fields(lines[0][1], comma))
    rows = []
    for lineno, line in lines:
        fields = _fields(line, comma)
        if len(fields) != d:
            raise DataError(f"{path}: line {lineno}: expected {d} fields, got {len(fields)}")
        row = []
        for col, tok in enumerate(fields, start=1):
            try:
                v = float(tok)
            except ValueError:
                raise DataError(f"{path}: line {lineno}, column {col}: not a number: {tok!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: line {lineno}, column {col}: non-finite value {tok!r}")
            row.append(v)
        rows.append(row)
    return np.array(rows, dtype=np.float64)


def read_point_file(path):
    return PointFile(str(path), parse_points(path))


def format_point(x):
    """Comma-joined shortest round-trip representation of each coordinate."""
    return ",".join(repr(float(v)) for v in np.atleast_1d(x))


def write_points(stream, points):
    for row in np.asarray(points, dtype=np.float64).reshape(len(points), -1):
        stream.write(format_point(row) + "\n")
