"""Box images I(B) for the base boxes of the unit square.

The image of a base box ``(i, j)`` collects every box within distance ``R``
of the image of one of its test points. Targets are stored relative to the
unit square: ``(i', j', s, t)`` with ``0 <= i', j' < k`` stands for the
lifted box ``(i' + k s, j' + k t)``. Images of translated boxes are read off
by shifting, since the lift commutes with integer translations.
"""
from __future__ import annotations

import logging
import math
import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import mark_boxes_near
from .boxgrid import (box_diameter, default_test_grid, test_grid_density,
                      test_points)
from .dynamics import MapSpec, evaluate, lipschitz_bound

log = logging.getLogger(__name__)

MAX_EVALUATIONS = 2 ** 31
CACHE_MAGIC = b"RSTT"
CACHE_VERSION = 1


class UnsoundParameters(ValueError):
    """R < L * eta: box images may miss parts of the true image."""


@dataclass(frozen=True)
class TransitionTable:
    k: int
    m: int
    R: float
    offsets: np.ndarray              # (k*k + 1,) CSR pointer per base box b = i*k + j
    targets: np.ndarray              # (count, 4) int64 rows (i', j', s, t)
    lipschitz: float = math.nan
    label: str = ""
    sound: bool = True
    _relative: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def count(self) -> int:
        return int(self.targets.shape[0])

    def targets_of(self, i0: int, j0: int) -> np.ndarray:
        b = i0 * self.k + j0
        return self.targets[self.offsets[b]:self.offsets[b + 1]]

    def relative_offsets(self) -> np.ndarray:
        """Target minus source index for every stored target, ``(count, 2)``."""
        if self._relative is None:
            k = self.k
            src = np.repeat(np.arange(k * k), np.diff(self.offsets))
            rel = np.empty((self.count, 2), dtype=np.int64)
            rel[:, 0] = self.targets[:, 0] + k * self.targets[:, 2] - src // k
            rel[:, 1] = self.targets[:, 1] + k * self.targets[:, 3] - src % k
            object.__setattr__(self, "_relative", rel)
        return self._relative

    def __eq__(self, other):
        if not isinstance(other, TransitionTable):
            return NotImplemented
        return (self.k == other.k and self.m == other.m and self.R == other.R
                and np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.targets, other.targets))


def check_soundness(L: float, k: int, m: int, R: float) -> bool:
    """True iff R >= L * eta (with 1e-12 relative slack for rounding)."""
    return R >= L * test_grid_density(k, m) * (1.0 - 1e-12)


def _split(boxes: np.ndarray, k: int) -> np.ndarray:
    base = np.mod(boxes, k)
    shift = np.floor_divide(boxes, k)
    return np.concatenate([base, shift], axis=1)


def _image_targets(f: MapSpec, box, k: int, m: int, R: float) -> np.ndarray:
    img = evaluate(f, test_points(box, k, m))
    ilo = int(np.floor(k * (img[:, 0].min() - R))) - 1
    jlo = int(np.floor(k * (img[:, 1].min() - R))) - 1
    ihi = int(np.floor(k * (img[:, 0].max() + R))) + 1
    jhi = int(np.floor(k * (img[:, 1].max() + R))) + 1
    mask = np.zeros((ihi - ilo + 1, jhi - jlo + 1), dtype=np.bool_)
    mark_boxes_near(img, float(R), k, ilo, jlo, mask)
    ii, jj = np.nonzero(mask)              # row-major: already lexicographic
    hits = np.stack([ii + ilo, jj + jlo], axis=1).astype(np.int64)
    return _split(hits, k)


def build_table(f: MapSpec, k: int, m: int | None = None, R: float | None = None,
                L: float | None = None, *, allow_unsound: bool = False,
                threads: int = 1) -> TransitionTable:
    """Compute the box image of every base box ``(i, j)`` in ``[0, k)^2``.

    ``m`` defaults to ``ceil(L) + 1`` and ``R`` to the box diameter, which
    together give ``R >= L * eta``. With ``allow_unsound`` a violation only
    warns; the table is then flagged ``sound=False``.
    """
    if k < 1:
        raise ValueError(f"resolution k must be >= 1, got {k}")
    L = lipschitz_bound(f) if L is None else float(L)
    m = default_test_grid(L) if m is None else int(m)
    R = box_diameter(k) if R is None else float(R)
    if m < 2:
        raise ValueError(f"test grid needs m >= 2, got {m}")
    if R < 0 or not math.isfinite(R):
        raise ValueError(f"reach radius must be finite and >= 0, got {R}")
    if k * k * m * m > MAX_EVALUATIONS:
        raise OverflowError(f"k^2 m^2 = {k * k * m * m} map evaluations exceeds {MAX_EVALUATIONS}")
    sound = check_soundness(L, k, m, R)
    if not sound:
        msg = (f"R = {R:.6g} < L*eta = {L * test_grid_density(k, m):.6g} "
               f"(L={L:.6g}, k={k}, m={m}); box images may be underestimated")
        if not allow_unsound:
            raise UnsoundParameters(msg)
        warnings.warn(msg, stacklevel=2)

    boxes = [(i, j) for i in range(k) for j in range(k)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda b: _image_targets(f, b, k, m, R), boxes))
    else:
        parts = [_image_targets(f, b, k, m, R) for b in boxes]

    offsets = np.zeros(k * k + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(p) for p in parts])
    targets = np.concatenate(parts).astype(np.int64)
    log.debug("table k=%d m=%d R=%g: %d targets", k, m, R, len(targets))
    return TransitionTable(k, m, R, offsets, targets, L, f.label, sound)


def image_of(table: TransitionTable, box) -> np.ndarray:
    """Lifted boxes of I(box) as an ``(N, 2)`` int array."""
    k = table.k
    i, j = int(box[0]), int(box[1])
    s, i0 = divmod(i, k)
    t, j0 = divmod(j, k)
    tg = table.targets_of(i0, j0)
    out = np.empty((len(tg), 2), dtype=np.int64)
    out[:, 0] = tg[:, 0] + k * (tg[:, 2] + s)
    out[:, 1] = tg[:, 1] + k * (tg[:, 3] + t)
    return out


# -- binary cache ------------------------------------------------------------

_HEADER = struct.Struct("<4sIIIdQI")


def save_table(table: TransitionTable, path) -> None:
    """Write the table: header, label, then (b, i', j', s, t) int32 records."""
    path = Path(path)
    label = table.label.encode("utf-8")
    src = np.repeat(np.arange(table.k * table.k), np.diff(table.offsets))
    rec = np.column_stack([src, table.targets]).astype("<i4")
    tmp = path.with_suffix(path.suffix + ".part")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, table.k, table.m,
                              table.R, table.count, len(label)))
        fh.write(label)
        fh.write(rec.tobytes())
    tmp.replace(path)


def load_table(path, *, lipschitz: float = math.nan) -> TransitionTable:
    """Read a cached table. Soundness is re-checked when ``lipschitz`` is given."""
    raw = Path(path).read_bytes()
    magic, version, k, m, R, count, nlabel = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC or version != CACHE_VERSION:
        raise ValueError(f"{path}: not a transition table cache (magic={magic!r}, version={version})")
    pos = _HEADER.size
    label = raw[pos:pos + nlabel].decode("utf-8")
    pos += nlabel
    rec = np.frombuffer(raw, dtype="<i4", count=count * 5, offset=pos).reshape(count, 5)
    offsets = np.zeros(k * k + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(np.bincount(rec[:, 0], minlength=k * k))
    sound = check_soundness(lipschitz, k, m, R) if math.isfinite(lipschitz) else True
    return TransitionTable(k, m, R, offsets, rec[:, 1:].astype(np.int64), lipschitz, label, sound)


def cache_key(label: str, k: int, m: int, R: float) -> str:
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in label)
    return f"{safe}_k{k}_m{m}_R{R.hex()}.tbl"
