"""CSV matrices and edge lists.

Matrices are stored with one row per node and one column per sample.  Edge
lists are ``i,j,weight`` lines with 1-based node indices.  Floats are written
with 17 significant digits so values round-trip exactly.
"""
import csv
import io
import math

import numpy as np

from .core import Graph
from .errors import InputFormatError

FLOAT_FMT = "{:.17g}"


def fmt(x):
    return FLOAT_FMT.format(float(x))


def read_matrix(path, header=False, allow_missing=False):
    """Read a numeric CSV.

    With ``allow_missing`` empty cells become NaN (the JISG unobserved marker);
    otherwise empty or non-finite cells are rejected.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        width = None
        for lineno, rec in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not rec:
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise InputFormatError(f"row length mismatch at line {lineno}: "
                                       f"expected {width} fields, got {len(rec)}")
            vals = []
            for c in rec:
                c = c.strip()
                if c == "":
                    if not allow_missing:
                        raise InputFormatError(f"empty cell at line {lineno}")
                    vals.append(math.nan)
                    continue
                try:
                    v = float(c)
                except ValueError:
                    raise InputFormatError(f"non-numeric value {c!r} at line {lineno}") from None
                if not math.isfinite(v):
                    raise InputFormatError(f"non-finite value {c!r} at line {lineno}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def matrix_to_csv(mat, missing=None):
    buf = io.StringIO()
    for row in np.atleast_2d(mat):
        cells = ["" if (missing is not None and not np.isfinite(v)) else fmt(v) for v in row]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def write_matrix(path, mat, missing=None):
    with open(path, "w", newline="") as fh:
        fh.write(matrix_to_csv(mat, missing))


def edges_to_csv(g, weight_tol=0.0):
    buf = io.StringIO()
    for i, j, w in g.edges(weight_tol):
        buf.write(f"{i + 1},{j + 1},{fmt(w)}\n")
    return buf.getvalue()


def write_edges(path, g, weight_tol=0.0):
    text = edges_to_csv(g, weight_tol)
    if path is None or path == "-":
        return text
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return text


def read_edges(path, n_nodes=None, directed=False):
    """Parse an ``i,j,weight`` edge list into a Graph."""
    triples = []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec:
                continue
            if len(rec) != 3:
                raise InputFormatError(f"edge list line {lineno}: expected i,j,weight")
            try:
                i, j, w = int(rec[0]), int(rec[1]), float(rec[2])
            except ValueError:
                raise InputFormatError(f"edge list line {lineno}: malformed entry") from None
            if i < 1 or j < 1:
                raise InputFormatError(f"edge list line {lineno}: indices are 1-based")
            triples.append((i - 1, j - 1, w))
    n = n_nodes or (max(max(i, j) for i, j, _ in triples) + 1 if triples else 0)
    if n < 2:
        raise InputFormatError("cannot infer the node count from the edge list; pass it explicitly")
    mat = np.zeros((n, n))
    for i, j, w in triples:
        mat[i, j] = w
        if not directed:
            mat[j, i] = w
    return Graph(mat, directed=directed, signed=bool(np.any(mat < 0)) and not directed)
