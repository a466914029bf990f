"""CSV and JSON formats used by the command-line tools.

Compositions: one per row, columns ``x1..xp``, optional header row.
ilr coordinates: columns ``xs1..xs(p-1)``.  Floats are written with
``repr`` so values round-trip exactly.
"""

import csv
import io
import json

import numpy as np

from .errors import DomainError


def _open_text(source):
    if hasattr(source, "read"):
        return source, False
    return open(source, newline="", encoding="utf-8"), True


def read_numeric_csv(source, positive=False):
    """Parse a numeric CSV; returns ``(matrix, header)``.

    ``header`` is None when the first row is numeric.  Raises DomainError
    naming the 1-based line number for malformed rows, mixed widths and (if
    ``positive``) every row with a nonpositive entry.
    """
    fh, close = _open_text(source)
    try:
        rows = [(k, row) for k, row in enumerate(csv.reader(fh), start=1)
                if row and any(cell.strip() for cell in row)]
    finally:
        if close:
            fh.close()
    header = None
    if rows:
        try:
            [float(c) for c in rows[0][1]]
        except ValueError:
            header = [c.strip() for c in rows[0][1]]
            rows = rows[1:]
    width = len(header) if header else (len(rows[0][1]) if rows else 0)
    data, bad = [], []
    for line, row in rows:
        if len(row) != width:
            raise DomainError(f"line {line}: expected {width} columns, found {len(row)}",
                              line=line, expected=width, found=len(row))
        try:
            values = [float(c) for c in row]
        except ValueError:
            raise DomainError(f"line {line}: non-numeric value", line=line) from None
        if not all(np.isfinite(values)):
            raise DomainError(f"line {line}: non-finite value", line=line)
        if positive and min(values) <= 0:
            bad.append(line)
        data.append(values)
    if bad:
        raise DomainError(f"{len(bad)} row(s) with nonpositive parts: lines {bad}", lines=bad)
    matrix = np.array(data, dtype=float).reshape(len(data), width)
    return matrix, header


def read_compositions(source):
    """Read compositions and close each row to sum 1."""
    X, header = read_numeric_csv(source, positive=True)
    if X.size:
        if X.shape[1] < 2:
            raise DomainError("compositions need at least two parts")
        X = X / X.sum(axis=1, keepdims=True)
    return X, header


def composition_header(p):
    return [f"x{k}" for k in range(1, p + 1)]


def coord_header(p):
    return [f"xs{k}" for k in range(1, p)]


def format_csv(header, matrix):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(header)
    for row in matrix:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """Deterministic JSON with full-precision floats."""
    return json.dumps(obj, indent=indent, sort_keys=True, default=_plain, allow_nan=False)


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path}: invalid JSON ({exc.msg})", line=exc.lineno) from None
