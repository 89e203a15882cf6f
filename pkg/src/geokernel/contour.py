"""
Level-set extraction for planar fields by marching squares.

Crossings are placed by linear interpolation along cell edges.  In saddle
cells (diagonally opposite corners on the same side of the level) the average
of the four corner values decides which pair of corners is connected.
Segments are stitched through shared edge crossings into polylines; a
polyline that returns to its start is closed and repeats its first vertex.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import interpolant
from .interpolant import Model


@dataclass(frozen=True, eq=False)
class Grid:
    """Regular sampling of a function on a box."""

    axes: tuple
    values: np.ndarray

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([c.ravel() for c in mesh])


def default_box(X, inflate: float = 0.25) -> np.ndarray:
    """Bounding box of ``X`` grown by ``inflate`` times its extent on every side.

    Returns an array of shape (d, 2) with rows ``(low, high)``.
    """
    X = np.asarray(X, dtype=float)
    lo, hi = X.min(axis=0), X.max(axis=0)
    pad = inflate * np.where(hi > lo, hi - lo, 1.0)
    return np.column_stack([lo - pad, hi + pad])


def check_box(box, dim: int) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    if box.shape != (dim, 2):
        raise ValueError(f"box must have shape ({dim}, 2), got {box.shape}")
    if not np.all(np.isfinite(box)) or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError("box needs finite bounds with low < high on every axis")
    return box


def sample_grid(model: Model, box, resolution: int) -> Grid:
    """Evaluate ``model`` on ``resolution`` points per axis of ``box``."""
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    box = check_box(box, model.dim)
    axes = tuple(np.linspace(lo, hi, resolution) for lo, hi in box)
    grid = Grid(axes, np.empty(()))
    u = interpolant.predict(model, grid.points())
    return Grid(axes, u.reshape((resolution,) * model.dim))


# corner order: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1); edge k joins corner k and k+1
_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))


def _cell_segments(inside, avg_inside):
    """Edge pairs crossed in one cell, given which corners lie above the level."""
    crossed = [k for k, (a, b) in enumerate(_EDGES) if inside[a] != inside[b]]
    if len(crossed) == 2:
        return [tuple(crossed)]
    if len(crossed) == 4:
        # saddle: if the centre sides with corners 0 and 2, those are joined
        # through the cell and the segments cut off corners 1 and 3
        if avg_inside == inside[0]:
            return [(0, 1), (2, 3)]
        return [(3, 0), (1, 2)]
    return []


def marching_squares(x, y, values, level: float) -> list[np.ndarray]:
    """Polylines of ``{values == level}`` on the grid ``x`` by ``y``.

    Parameters
    ----------
    x, y : ndarray
        Increasing grid coordinates; ``values[i, j]`` is the sample at
        ``(x[i], y[j])``.
    values : ndarray, shape (len(x), len(y))
    level : float

    Returns
    -------
    list of ndarray
        Each polyline has shape (k, 2); closed ones end with their first vertex.
    """
    V = np.asarray(values, dtype=float)
    nx, ny = V.shape
    above = V >= level

    def corner(i, j, c):
        return ((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1))[c]

    def edge_key(i, j, k):
        a, b = (corner(i, j, c) for c in _EDGES[k])
        return (a, b) if a < b else (b, a)

    def crossing(key):
        (i0, j0), (i1, j1) = key
        v0, v1 = V[i0, j0], V[i1, j1]
        t = (level - v0) / (v1 - v0)
        return np.array([x[i0] + t * (x[i1] - x[i0]), y[j0] + t * (y[j1] - y[j0])])

    adjacency: dict = {}
    for i in range(nx - 1):
        for j in range(ny - 1):
            inside = [above[corner(i, j, c)] for c in range(4)]
            if all(inside) or not any(inside):
                continue
            avg = 0.25 * (V[i, j] + V[i + 1, j] + V[i + 1, j + 1] + V[i, j + 1])
            for ka, kb in _cell_segments(inside, avg >= level):
                a, b = edge_key(i, j, ka), edge_key(i, j, kb)
                adjacency.setdefault(a, []).append(b)
                adjacency.setdefault(b, []).append(a)

    lines = []
    unvisited = set(adjacency)
    # open chains start at edge crossings with a single neighbour (box boundary)
    starts = sorted(k for k in adjacency if len(adjacency[k]) == 1)
    for start in starts + sorted(adjacency):
        if start not in unvisited:
            continue
        chain = [start]
        unvisited.discard(start)
        prev, cur = None, start
        while True:
            nxt = [k for k in adjacency[cur] if k != prev and k in unvisited]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            chain.append(cur)
            unvisited.discard(cur)
        pts = np.array([crossing(k) for k in chain])
        # a level through a grid node yields the same vertex on two edges
        keep = np.r_[True, np.any(pts[1:] != pts[:-1], axis=1)]
        pts = pts[keep]
        if len(chain) > 2 and start in adjacency[cur]:
            if np.array_equal(pts[0], pts[-1]):
                pts = pts[:-1]
            pts = np.vstack([pts, pts[:1]])
        lines.append(pts)
    return lines


def is_closed(line: np.ndarray) -> bool:
    return len(line) > 3 and np.array_equal(line[0], line[-1])


def contour(model: Model, level: float, box=None, resolution: int = 200):
    """Grid samples of a planar model and the polylines of one level.

    Returns
    -------
    grid : Grid
    lines : list of ndarray
    """
    if model.dim != 2:
        raise ValueError("polyline extraction needs a planar model")
    box = default_box(model.centers) if box is None else box
    grid = sample_grid(model, box, resolution)
    return grid, marching_squares(grid.axes[0], grid.axes[1], grid.values, level)
