"""Compiled inner loops (numba)."""
import math

import numba as nb
import numpy as np


@nb.njit(cache=True)
def mark_boxes_near(pts, R, k, ilo, jlo, mask):
    """Set ``mask[i - ilo, j - jlo]`` for every box (i, j) within ``R`` of a point.

    ``mask`` must be large enough to hold all candidates; the scan range per
    point is one index wider than the closed-distance condition needs.
    """
    for p in range(pts.shape[0]):
        x = pts[p, 0]
        y = pts[p, 1]
        i0 = math.floor(k * (x - R)) - 1
        i1 = math.floor(k * (x + R)) + 1
        j0 = math.floor(k * (y - R)) - 1
        j1 = math.floor(k * (y + R)) + 1
        for i in range(i0, i1 + 1):
            lo = i / k
            hi = (i + 1) / k
            dx = max(max(lo - x, 0.0), x - hi)
            if dx > R:
                continue
            for j in range(j0, j1 + 1):
                lo2 = j / k
                hi2 = (j + 1) / k
                dy = max(max(lo2 - y, 0.0), y - hi2)
                if math.hypot(dx, dy) <= R:
                    mask[i - ilo, j - jlo] = True


@nb.njit(cache=True, parallel=True)
def stamp(src, oi, oj, k, offsets, rel, out, ci, cj):
    """OR every occupied cell's target stamp into ``out``.

    ``src[a, b]`` is the absolute box ``(oi + a, oj + b)``; the target
    ``(oi + a + di, oj + b + dj)`` is written to ``out[a + di + ci, b + dj + cj]``
    where ``(ci, cj)`` is the origin difference between the two windows. Every
    write stores True, so the result does not depend on scheduling.
    """
    nx, ny = src.shape
    for a in nb.prange(nx):
        ri = ((oi + a) % k) * k
        for b in range(ny):
            if not src[a, b]:
                continue
            base = ri + (oj + b) % k
            for q in range(offsets[base], offsets[base + 1]):
                out[a + rel[q, 0] + ci, b + rel[q, 1] + cj] = True


HSHEAR = 0
VSHEAR = 1
TRANSLATE = 2
_TWO_PI = 2.0 * math.pi
_SCALE = 2.0 ** 40
_QUANTUM = 2.0 ** -40


@nb.njit(cache=True, inline="always")
def _q(v):
    return np.rint(v * _SCALE) * _QUANTUM


@nb.njit(cache=True, parallel=True)
def apply_chain(pts, kinds, p1, p2, n_iter):
    """Apply a factor chain ``n_iter`` times to every row of ``pts`` in place.

    Shears add ``amp * sin(2 pi freq * frac(coord))`` rounded to 2**-40;
    translations add their pre-rounded components.
    """
    nf = kinds.shape[0]
    for p in nb.prange(pts.shape[0]):
        x = pts[p, 0]
        y = pts[p, 1]
        for _ in range(n_iter):
            for f in range(nf):
                kind = kinds[f]
                if kind == 0:
                    x = x + _q(p1[f] * math.sin(_TWO_PI * p2[f] * (y - math.floor(y))))
                elif kind == 1:
                    y = y + _q(p1[f] * math.sin(_TWO_PI * p2[f] * (x - math.floor(x))))
                else:
                    x = x + p1[f]
                    y = y + p2[f]
        pts[p, 0] = x
        pts[p, 1] = y
