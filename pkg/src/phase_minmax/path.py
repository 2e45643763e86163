"""Discrete paths of fields and equal-arclength reparametrization."""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .manifold import SymmetricSphereGrid


class PathOfFields:
    """P fields on a common grid, stored as a (P, K) array.

    The first and last rows are the endpoints.
    """

    def __init__(self, grid: SymmetricSphereGrid, nodes):
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 2:
            raise ShapeError("a path is a (P, K) array")
        grid.check(nodes)
        self.grid = grid
        self.nodes = nodes

    def __len__(self):
        return self.nodes.shape[0]

    def copy(self):
        return PathOfFields(self.grid, self.nodes.copy())

    def segment_lengths(self):
        return segment_lengths(self.grid, self.nodes)

    def reparametrized(self, P=None):
        return PathOfFields(self.grid, reparametrize(self.grid, self.nodes, P or len(self)))


def segment_lengths(grid, nodes):
    d = np.diff(nodes, axis=0)
    return np.sqrt(grid.integrate(d * d))


def reparametrize(grid, nodes, P):
    """Resample a polyline of fields at P points of equal L^2 arclength.

    Endpoints are copied bitwise.  Zero-length segments are harmless.
    """
    seg = segment_lengths(grid, nodes)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    out = np.empty((P, nodes.shape[1]))
    out[0] = nodes[0]
    out[-1] = nodes[-1]
    if total == 0.0:
        out[1:-1] = nodes[0]
        return out
    targets = np.linspace(0.0, total, P)[1:-1]
    j = np.searchsorted(s, targets, side="right") - 1
    j = np.clip(j, 0, len(seg) - 1)
    # skip zero-length segments: searchsorted(side=right) already lands past them
    frac = np.where(seg[j] > 0, (targets - s[j]) / np.where(seg[j] > 0, seg[j], 1.0), 0.0)
    frac = np.clip(frac, 0.0, 1.0)[:, None]
    out[1:-1] = (1.0 - frac) * nodes[j] + frac * nodes[j + 1]
    return out
