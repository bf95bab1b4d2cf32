"""Convex hulls, distances to polygons and box unions, Hausdorff distances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .dynamics import DomainError
from .evolve import RotationApprox, extreme_corners

SLACK = 1e-12


@dataclass(frozen=True)
class Polygon:
    """Counter-clockwise vertex cycle of a convex polygon.

    Fewer than three vertices means a degenerate hull (a point or a segment).
    """

    vertices: np.ndarray

    @property
    def degenerate(self) -> bool:
        return len(self.vertices) < 3

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertices
        if len(v) == 1:
            return v, v
        if len(v) == 2:
            return v[:1], v[1:]
        return v, np.roll(v, -1, axis=0)

    def __eq__(self, other):
        if not isinstance(other, Polygon):
            return NotImplemented
        return self.vertices.shape == other.vertices.shape and np.array_equal(self.vertices, other.vertices)


def rectangle(x0: float, x1: float, y0: float, y1: float) -> Polygon:
    return convex_hull([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> Polygon:
    """Andrew's monotone chain. Collinear points on edges are dropped."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise DomainError("convex hull of an empty point set")
    pts = np.unique(pts, axis=0)           # sorted lexicographically
    if len(pts) <= 2:
        return Polygon(pts)

    def half(seq):
        chain: list[np.ndarray] = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 2:
        hull = np.array([pts[0], pts[-1]])
    return Polygon(hull)


def _segment_distance(pts, a, b):
    # distance from every point to every segment a[e]-b[e], then min over e
    ab = b - a
    ap = pts[:, None, :] - a[None, :, :]
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.where(denom > 0, np.einsum("pij,ij->pi", ap, ab) / np.where(denom > 0, denom, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    d = np.hypot(pts[:, None, 0] - closest[..., 0], pts[:, None, 1] - closest[..., 1])
    return d.min(axis=1)


def distance_to_polygon(points, P: Polygon) -> np.ndarray:
    """Euclidean distance from each point to the closed polygon (0 inside)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    a, b = P.edges()
    d = np.empty(len(pts))
    for start in range(0, len(pts), 4096):
        d[start:start + 4096] = _segment_distance(pts[start:start + 4096], a, b)
    if not P.degenerate:
        ab = b - a
        cr = ab[None, :, 0] * (pts[:, None, 1] - a[None, :, 1]) - ab[None, :, 1] * (pts[:, None, 0] - a[None, :, 0])
        d[np.all(cr >= 0, axis=1)] = 0.0
    return d


def hausdorff_points(A, B) -> float:
    """Hausdorff distance between two finite point sets."""
    A = np.asarray(A, dtype=float).reshape(-1, 2)
    B = np.asarray(B, dtype=float).reshape(-1, 2)
    if len(A) == 0 or len(B) == 0:
        raise DomainError("Hausdorff distance needs two non-empty sets")
    ab = cKDTree(B).query(A)[0].max()
    ba = cKDTree(A).query(B)[0].max()
    return float(max(ab, ba))


def boundary_samples(P: Polygon, step: float) -> np.ndarray:
    """Points on the polygon boundary no more than ``step`` apart (vertices included)."""
    if step <= 0:
        raise DomainError(f"sampling step must be > 0, got {step}")
    a, b = P.edges()
    out = []
    for p, q in zip(a, b):
        cnt = max(1, int(math.ceil(math.hypot(*(q - p)) / step)))
        t = np.arange(cnt)[:, None] / cnt
        out.append(p + t * (q - p))
    if len(P.vertices) == 2:
        out.append(P.vertices[1:])
    return np.concatenate(out)


class BoxUnion:
    """Exact point distances to a union of closed axis-parallel squares.

    The boxes are ``[i s, (i+1) s] x [j s, (j+1) s]`` for the occupied cells
    of a box set, with side ``s``.
    """

    def __init__(self, boxset, side: float):
        self.set = boxset
        self.side = side
        occ = boxset.occ
        pad = np.pad(occ, 1)
        interior = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
        edge = occ & ~interior
        a, b = np.nonzero(edge)
        self._edge = np.stack([a + boxset.origin[0], b + boxset.origin[1]], axis=1)
        self._tree = cKDTree((self._edge + 0.5) * side) if len(self._edge) else None

    def _inside(self, pts):
        u = pts / self.side
        lo = np.floor(u).astype(np.int64)
        inside = np.zeros(len(pts), dtype=bool)
        for di in (0, -1):
            for dj in (0, -1):
                cand = lo + np.array([di, dj])
                # the closed box cand contains p iff cand <= u <= cand + 1
                ok = (cand[:, 0] + 1 >= u[:, 0]) & (cand[:, 1] + 1 >= u[:, 1])
                inside |= ok & self.set.contains(cand)
        return inside

    def distance(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        d = np.zeros(len(pts))
        if self._tree is None:
            d[:] = np.inf
            return d
        out = ~self._inside(pts)
        if not out.any():
            return d
        q = pts[out]
        d0, _ = self._tree.query(q)
        # the nearest box has its centre within d0 + half a diagonal
        half = self.side * math.sqrt(0.5)
        best = np.empty(len(q))
        for idx, (p, r) in enumerate(zip(q, d0)):
            cand = self._edge[self._tree.query_ball_point(p, r + half + SLACK)]
            lo = cand * self.side
            hi = (cand + 1) * self.side
            gx = np.maximum(np.maximum(lo[:, 0] - p[0], 0.0), p[0] - hi[:, 0])
            gy = np.maximum(np.maximum(lo[:, 1] - p[1], 0.0), p[1] - hi[:, 1])
            best[idx] = np.hypot(gx, gy).min()
        d[out] = best
        return d


def approx_union(approx: RotationApprox) -> BoxUnion:
    return BoxUnion(approx.boxes, approx.scale)


def distance_to_approx(points, approx: RotationApprox) -> np.ndarray:
    return approx_union(approx).distance(points)


def covered_by_neighborhood(points, approx: RotationApprox, delta: float,
                            slack: float = SLACK) -> bool:
    """True iff every point lies within ``delta`` of some box of Q_n*."""
    if delta < 0:
        raise DomainError(f"neighbourhood radius must be >= 0, got {delta}")
    return bool(np.all(distance_to_approx(points, approx) <= delta + slack))


def hausdorff_to_polygon(approx: RotationApprox, P: Polygon, step: float = 1e-3) -> float:
    """Hausdorff distance between Q_n* and ``P``, up to an additive ``step``.

    The Q_n* -> P part is exact (distance to a convex set is convex, so its
    maximum over Q_n* sits at an extreme column corner). The P -> Q_n* part
    is sampled along the boundary of ``P`` at spacing ``step``.
    """
    q_to_p = distance_to_polygon(extreme_corners(approx), P).max()
    p_to_q = distance_to_approx(boundary_samples(P, step), approx).max()
    return float(max(q_to_p, p_to_q))


def hausdorff_polygons(P: Polygon, Q: Polygon) -> float:
    """Exact Hausdorff distance between two convex polygons.

    The distance to a convex set is a convex function, so each directed
    part is attained at a vertex.
    """
    return float(max(distance_to_polygon(P.vertices, Q).max(),
                     distance_to_polygon(Q.vertices, P).max()))


def _box_samples(approx: RotationApprox) -> np.ndarray:
    # corners and centres: every point of the union is within side/2 of one
    b = approx.boxes.boxes()
    corners = np.unique(np.concatenate([b, b + (1, 0), b + (0, 1), b + (1, 1)]), axis=0)
    return np.concatenate([corners, b + 0.5]) * approx.scale


def hausdorff_boxes(A: RotationApprox, B: RotationApprox) -> tuple[float, float]:
    """Hausdorff distance between two box unions, with its sampling error bound."""
    ab = approx_union(B).distance(_box_samples(A)).max()
    ba = approx_union(A).distance(_box_samples(B)).max()
    return float(max(ab, ba)), 0.5 * max(A.scale, B.scale)
