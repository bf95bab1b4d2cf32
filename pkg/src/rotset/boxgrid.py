"""Uniform box covering of the plane at resolution k.

Box ``(i, j)`` at resolution ``k`` is the closed square
``[i/k, (i+1)/k] x [j/k, (j+1)/k]``. Neighbouring boxes share their edges.
All distances are Euclidean.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class BoxIndex(NamedTuple):
    i: int
    j: int


def box_diameter(k: int) -> float:
    return math.sqrt(2.0) / k


def default_test_grid(lipschitz: float) -> int:
    """Points per side so that L * sqrt(2)/(k(m-1)) <= sqrt(2)/k."""
    return int(math.ceil(lipschitz)) + 1


def test_grid_density(k: int, m: int) -> float:
    """eta: every point of a box is this close to one of its m*m test points."""
    return math.sqrt(2.0) / (k * (m - 1))


def box_of(p, k: int) -> BoxIndex:
    x, y = float(p[0]), float(p[1])
    return BoxIndex(math.floor(k * x), math.floor(k * y))


def _grid_offsets(k: int, m: int) -> np.ndarray:
    if m < 2:
        raise ValueError(f"test grid needs m >= 2, got {m}")
    return np.arange(m) / (k * (m - 1))


def test_points(box, k: int, m: int) -> np.ndarray:
    """The m*m grid points of ``box``, corners included, row-major (y outer)."""
    off = _grid_offsets(k, m)
    xs = box[0] / k + off
    ys = box[1] / k + off
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def _axis_gap(lo, hi, p):
    return np.maximum(np.maximum(lo - p, 0.0), p - hi)


def point_box_distance(p, box, k: int) -> float:
    i, j = box
    dx = _axis_gap(i / k, (i + 1) / k, float(p[0]))
    dy = _axis_gap(j / k, (j + 1) / k, float(p[1]))
    return float(math.hypot(dx, dy))


def point_box_distances(pts: np.ndarray, ii: np.ndarray, jj: np.ndarray, k: int) -> np.ndarray:
    """Vectorised point_box_distance; arrays broadcast against each other."""
    dx = _axis_gap(ii / k, (ii + 1) / k, pts[..., 0])
    dy = _axis_gap(jj / k, (jj + 1) / k, pts[..., 1])
    return np.hypot(dx, dy)


def boxes_near(p, R: float, k: int) -> list[BoxIndex]:
    """All boxes whose (closed) distance to ``p`` is at most ``R``."""
    if not math.isfinite(R) or R < 0:
        raise ValueError(f"reach radius must be finite and >= 0, got {R}")
    x, y = float(p[0]), float(p[1])
    i0, i1 = math.floor(k * (x - R)), math.floor(k * (x + R))
    j0, j1 = math.floor(k * (y - R)), math.floor(k * (y + R))
    out = []
    # one extra index on each side: edges at distance exactly R are included
    for i in range(i0 - 1, i1 + 2):
        for j in range(j0 - 1, j1 + 2):
            if point_box_distance((x, y), (i, j), k) <= R:
                out.append(BoxIndex(i, j))
    return out


def boxes_near_many(pts: np.ndarray, R: float, k: int) -> np.ndarray:
    """Unique boxes within ``R`` of any of ``pts``, as an ``(N, 2)`` int array.

    Same closed-distance test as :func:`boxes_near`, applied to a whole batch.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    w = int(math.ceil(k * R)) + 1
    base = np.floor(k * pts).astype(np.int64)
    d = np.arange(-w - 1, w + 1)
    di, dj = np.meshgrid(d, d, indexing="ij")
    di = di.ravel()
    dj = dj.ravel()
    ii = base[:, 0:1] + di[None, :]
    jj = base[:, 1:2] + dj[None, :]
    dist = point_box_distances(pts[:, None, :], ii, jj, k)
    keep = dist <= R
    hits = np.stack([ii[keep], jj[keep]], axis=1)
    return np.unique(hits, axis=0)
