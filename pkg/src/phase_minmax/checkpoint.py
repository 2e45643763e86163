"""Field checkpoints: CSV with header ``index,theta,value``.

Floats are written with 17 significant digits, which round-trips every
IEEE double exactly.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .errors import FieldParseError, GridError, ShapeError
from .manifold import Field, SymmetricSphereGrid, values_of

HEADER = ("index", "theta", "value")


def fmt(x):
    """Float at 17 significant digits."""
    return format(float(x), ".17g")


def dump_field(path, u, grid=None):
    """Write a field to ``path``; returns the path."""
    if isinstance(u, Field):
        grid = u.grid
    if grid is None:
        raise GridError("dump_field needs a Field or an explicit grid")
    v = grid.check(values_of(u))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for i, (th, x) in enumerate(zip(grid.theta, v)):
            w.writerow((i, fmt(th), fmt(x)))
    return os.fspath(path)


def _parse_float(text, line, what):
    try:
        x = float(text)
    except ValueError:
        raise FieldParseError(f"{what} is not a number: {text!r}", line) from None
    if not np.isfinite(x):
        raise FieldParseError(f"{what} is not finite: {text!r}", line)
    return x


def load_field(path, grid=None, ambient_dim=2):
    """Read a checkpoint written by :func:`dump_field`.

    Parameters
    ----------
    grid : SymmetricSphereGrid, optional
        Target grid.  When omitted a grid with the file's node count is built
        on S^``ambient_dim``.

    Raises
    ------
    FieldParseError
        Bad header, wrong column count, non-numeric or out-of-order rows.
        The message carries the 1-based line number.
    ShapeError
        Row count differs from the target grid's K.
    """
    thetas, vals = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        rows = csv.reader(fh)
        try:
            head = next(rows)
        except StopIteration:
            raise FieldParseError("empty file, expected header index,theta,value", 1) from None
        if tuple(c.strip() for c in head) != HEADER:
            raise FieldParseError(f"header must be index,theta,value, got {','.join(head)}", 1)
        for row in rows:
            line = rows.line_num
            if not row:
                raise FieldParseError("blank line", line)
            if len(row) != 3:
                raise FieldParseError(f"expected 3 columns, got {len(row)}", line)
            try:
                idx = int(row[0])
            except ValueError:
                raise FieldParseError(f"index is not an integer: {row[0]!r}", line) from None
            if idx != len(vals):
                raise FieldParseError(f"index {idx} out of order, expected {len(vals)}", line)
            thetas.append(_parse_float(row[1], line, "theta"))
            vals.append(_parse_float(row[2], line, "value"))
    if grid is None:
        grid = SymmetricSphereGrid(ambient_dim, len(vals))
    if len(vals) != grid.K:
        raise ShapeError(f"checkpoint has {len(vals)} nodes, grid has K={grid.K}")
    if not np.allclose(thetas, grid.theta, rtol=0.0, atol=1e-9):
        raise ShapeError("checkpoint node angles do not match the grid")
    return Field(grid, np.array(vals))
