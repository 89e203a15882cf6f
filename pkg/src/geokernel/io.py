"""
Point-cloud CSV files.

One format serves clouds and values on clouds: a header ``x1,...,xd`` with an
optional trailing ``y`` column, full-precision decimals, and ``#`` comment
lines anywhere.
"""
from __future__ import annotations

import io

import numpy as np


def format_cloud(X, y=None, comments=()) -> str:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    header = [f"x{i + 1}" for i in range(X.shape[1])]
    if y is not None:
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{y.shape[0]} values for {X.shape[0]} points")
        header.append("y")
    buf.write(",".join(header) + "\n")
    for k, row in enumerate(X):
        vals = [repr(float(v)) for v in row]
        if y is not None:
            vals.append(repr(float(y[k])))
        buf.write(",".join(vals) + "\n")
    return buf.getvalue()


def parse_cloud(text: str):
    """Parse the CSV format.

    Returns
    -------
    X : ndarray, shape (m, d)
    y : ndarray, shape (m,) or None
    """
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise ValueError("no header line")
    header = [h.strip() for h in rows[0].split(",")]
    has_y = header[-1] == "y"
    coords = header[:-1] if has_y else header
    if not coords or coords != [f"x{i + 1}" for i in range(len(coords))]:
        raise ValueError(f"header must read x1,...,xd[,y], got {rows[0]!r}")
    data = []
    for n, ln in enumerate(rows[1:], start=2):
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ValueError(f"data row {n} has {len(parts)} fields, expected {len(header)}")
        try:
            data.append([float(p) for p in parts])
        except ValueError:
            raise ValueError(f"non-numeric entry in data row {n}") from None
    A = np.array(data, dtype=float).reshape(-1, len(header))
    if has_y:
        return A[:, :-1], A[:, -1]
    return A, None


def read_cloud(path):
    with open(path, encoding="utf-8") as fh:
        return parse_cloud(fh.read())


def write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_cloud(path, X, y=None, comments=()):
    write_text(path, format_cloud(X, y, comments))
