"""Layered box iteration: B_{j+1} is the union of the images of the boxes in B_j.

Layers are dense occupancy windows over box-index space. The iteration is
taken literally: a layer holds only the images of the previous layer, so
boxes can drop out between layers.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ._kernels import stamp
from .boxgrid import box_diameter, point_box_distances, test_points
from .dynamics import MapSpec, evaluate
from .transition import TransitionTable, build_table

log = logging.getLogger(__name__)

MAX_WINDOW_CELLS = 2 ** 33
MAX_INDEX = 2 ** 40


@dataclass(frozen=True)
class BoxSet:
    """Boxes ``(origin[0] + a, origin[1] + b)`` for every ``occ[a, b]`` set."""

    k: int
    origin: tuple[int, int]
    occ: np.ndarray

    @classmethod
    def from_boxes(cls, boxes, k: int) -> "BoxSet":
        boxes = np.asarray(boxes, dtype=np.int64).reshape(-1, 2)
        if len(boxes) == 0:
            return cls(k, (0, 0), np.zeros((0, 0), dtype=np.bool_))
        lo = boxes.min(axis=0)
        hi = boxes.max(axis=0)
        occ = np.zeros(tuple(hi - lo + 1), dtype=np.bool_)
        occ[boxes[:, 0] - lo[0], boxes[:, 1] - lo[1]] = True
        return cls(k, (int(lo[0]), int(lo[1])), occ)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.occ))

    @property
    def window(self) -> tuple[int, int, int, int]:
        """Inclusive index bounds ``(imin, imax, jmin, jmax)`` of the window."""
        oi, oj = self.origin
        return oi, oi + self.occ.shape[0] - 1, oj, oj + self.occ.shape[1] - 1

    def boxes(self) -> np.ndarray:
        a, b = np.nonzero(self.occ)
        return np.stack([a + self.origin[0], b + self.origin[1]], axis=1).astype(np.int64)

    def contains(self, boxes) -> np.ndarray:
        boxes = np.asarray(boxes, dtype=np.int64).reshape(-1, 2)
        a = boxes[:, 0] - self.origin[0]
        b = boxes[:, 1] - self.origin[1]
        inside = (a >= 0) & (b >= 0) & (a < self.occ.shape[0]) & (b < self.occ.shape[1])
        out = np.zeros(len(boxes), dtype=bool)
        out[inside] = self.occ[a[inside], b[inside]]
        return out

    def trimmed(self) -> "BoxSet":
        rows = np.flatnonzero(self.occ.any(axis=1))
        if rows.size == 0:
            return BoxSet(self.k, (0, 0), np.zeros((0, 0), dtype=np.bool_))
        cols = np.flatnonzero(self.occ.any(axis=0))
        occ = self.occ[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
        return BoxSet(self.k, (self.origin[0] + int(rows[0]), self.origin[1] + int(cols[0])),
                      np.ascontiguousarray(occ))

    def shifted(self, di: int, dj: int) -> "BoxSet":
        return BoxSet(self.k, (self.origin[0] + di, self.origin[1] + dj), self.occ)

    def issubset(self, other: "BoxSet") -> bool:
        return bool(np.all(other.contains(self.boxes())))

    def __eq__(self, other):
        if not isinstance(other, BoxSet):
            return NotImplemented
        a, b = self.trimmed(), other.trimmed()
        return a.k == b.k and a.origin == b.origin and np.array_equal(a.occ, b.occ)

    def __len__(self):
        return self.count


def initial_set(k: int) -> BoxSet:
    """The k*k boxes tiling the unit square."""
    if k < 1:
        raise ValueError(f"resolution k must be >= 1, got {k}")
    return BoxSet(k, (0, 0), np.ones((k, k), dtype=np.bool_))


def advance(table: TransitionTable, S: BoxSet, layer: int | None = None) -> BoxSet:
    """Union of the box images of all boxes in ``S``."""
    if table.k != S.k:
        raise ValueError(f"table resolution {table.k} != box set resolution {S.k}")
    if S.count == 0:
        return S
    rel = table.relative_offsets()
    dmin = rel.min(axis=0)
    dmax = rel.max(axis=0)
    shape = (S.occ.shape[0] + int(dmax[0] - dmin[0]), S.occ.shape[1] + int(dmax[1] - dmin[1]))
    origin = (S.origin[0] + int(dmin[0]), S.origin[1] + int(dmin[1]))
    where = "" if layer is None else f" at layer {layer}"
    if shape[0] * shape[1] > MAX_WINDOW_CELLS:
        raise OverflowError(f"box window {shape[0]}x{shape[1]} too large{where}")
    if max(abs(origin[0]), abs(origin[1]), abs(origin[0] + shape[0]),
           abs(origin[1] + shape[1])) > MAX_INDEX:
        raise OverflowError(f"box index magnitude exceeds {MAX_INDEX}{where}")
    out = np.zeros(shape, dtype=np.bool_)
    stamp(S.occ, S.origin[0], S.origin[1], table.k, table.offsets, rel, out,
          -int(dmin[0]), -int(dmin[1]))
    return BoxSet(S.k, origin, out).trimmed()


@dataclass(frozen=True)
class RotationApprox:
    """Q_n at resolution k; the normalised set Q_n* = Q_n / n has box side 1/(n k)."""

    label: str
    k: int
    n: int
    R: float
    m: int
    L: float
    sound: bool
    boxes: BoxSet
    layer_counts: tuple[int, ...] = ()
    layer_seconds: tuple[float, ...] = ()
    layers: tuple[BoxSet, ...] | None = field(default=None, repr=False)

    @property
    def scale(self) -> float:
        """Side length of a box of Q_n*."""
        return 1.0 / (self.n * self.k)

    def normalised_boxes(self) -> np.ndarray:
        """Lower-left corners of the boxes of Q_n*, ``(N, 2)`` floats."""
        return self.boxes.boxes() * self.scale


def run(f: MapSpec, k: int, n: int, *, R: float | None = None, m: int | None = None,
        L: float | None = None, allow_unsound: bool = False, threads: int = 1,
        keep_layers: bool = False, table: TransitionTable | None = None,
        progress=None) -> RotationApprox:
    """n box-image steps starting from the unit square."""
    if n < 1:
        raise ValueError(f"number of iterations must be >= 1, got {n}")
    if table is None:
        table = build_table(f, k, m, R, L, allow_unsound=allow_unsound, threads=threads)
    elif table.k != k:
        raise ValueError(f"table built for k={table.k}, run requested k={k}")
    _set_threads(threads)
    S = initial_set(k)
    layers = [S] if keep_layers else None
    counts, seconds = [], []
    for j in range(1, n + 1):
        t0 = time.perf_counter()
        S = advance(table, S, layer=j)
        seconds.append(time.perf_counter() - t0)
        counts.append(S.count)
        if layers is not None:
            layers.append(S)
        log.debug("layer %d: %d boxes (%.3fs)", j, counts[-1], seconds[-1])
        if progress is not None:
            progress(j, counts[-1], seconds[-1])
    return RotationApprox(f.label, k, n, table.R, table.m, table.lipschitz, table.sound,
                          S, tuple(counts), tuple(seconds),
                          tuple(layers) if layers is not None else None)


def _set_threads(threads: int) -> None:
    import numba
    numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def window_bound(k: int, n: int, M: float, eps: float) -> tuple[float, float]:
    """Index range that layer n can never leave when R = eps = sqrt(2)/k."""
    spread = k * n * (M + 2 * eps)
    return -spread - 1, k * (1 + n * (M + 2 * eps)) + 1


def extreme_corners(approx: RotationApprox) -> np.ndarray:
    """Corners of the lowest and highest box in every occupied column of Q_n*.

    The convex hull of these points is the convex hull of Q_n*.
    """
    occ = approx.boxes.occ
    cols = np.flatnonzero(occ.any(axis=1))
    if cols.size == 0:
        raise ValueError("empty approximation")
    sub = occ[cols]
    low = np.argmax(sub, axis=1)
    high = sub.shape[1] - 1 - np.argmax(sub[:, ::-1], axis=1)
    i = cols + approx.boxes.origin[0]
    jl = low + approx.boxes.origin[1]
    jh = high + approx.boxes.origin[1]
    x0, x1 = i, i + 1
    pts = np.concatenate([
        np.stack([x0, jl], 1), np.stack([x1, jl], 1), np.stack([x0, jl + 1], 1), np.stack([x1, jl + 1], 1),
        np.stack([x0, jh], 1), np.stack([x1, jh], 1), np.stack([x0, jh + 1], 1), np.stack([x1, jh + 1], 1),
    ])
    return pts * approx.scale


def back_chain(table: TransitionTable, layers, box) -> list[tuple[int, int]]:
    """Boxes B_0, ..., B_n with B_{j+1} in I(B_j), B_j in layer j, ending at ``box``.

    Picks the lexicographically smallest admissible predecessor at every step.
    """
    k = table.k
    rel = table.relative_offsets()
    src_res = np.repeat(np.arange(k * k), np.diff(table.offsets))
    chain = [(int(box[0]), int(box[1]))]
    if not layers[-1].contains([box])[0]:
        raise ValueError(f"box {tuple(box)} is not in the last layer")
    for layer in reversed(layers[:-1]):
        cand = np.array(chain[-1], dtype=np.int64) - rel
        res = np.mod(cand[:, 0], k) * k + np.mod(cand[:, 1], k)
        ok = (res == src_res) & layer.contains(cand)
        if not ok.any():
            raise RuntimeError(f"no predecessor for box {chain[-1]}")
        hits = cand[ok]
        first = hits[np.lexsort(hits.T[::-1])[0]]
        chain.append((int(first[0]), int(first[1])))
    return chain[::-1]


def witness_pseudo_orbit(f: MapSpec, table: TransitionTable, chain) -> np.ndarray:
    """Test points xi_j in B_j with d(F(xi_j), B_{j+1}) <= R; the last is B_n's centre.

    Consecutive points satisfy d(F(xi_j), xi_{j+1}) <= R + diameter.
    """
    k, m, R = table.k, table.m, table.R
    pts = []
    for cur, nxt in zip(chain[:-1], chain[1:]):
        tp = test_points(cur, k, m)
        d = point_box_distances(evaluate(f, tp), np.int64(nxt[0]), np.int64(nxt[1]), k)
        idx = int(np.argmax(d <= R))
        if d[idx] > R:
            raise RuntimeError(f"box {nxt} is not reached from {cur}")
        pts.append(tp[idx])
    last = chain[-1]
    pts.append(((last[0] + 0.5) / k, (last[1] + 0.5) / k))
    return np.array(pts)


def pseudo_orbit_tolerance(table: TransitionTable) -> float:
    return table.R + box_diameter(table.k)
