"""Text and raster formats: box CSV, point/polygon CSV, PGM, key=value reports.

Every writer goes through :func:`atomic_write`, so a failed write leaves no
partial file behind.
"""
from __future__ import annotations

import math
import os
import re
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .dynamics import DomainError
from .evolve import BoxSet, RotationApprox
from .geometry import Polygon, convex_hull


class FormatError(DomainError):
    """A file that does not parse; the message names the offending line."""


@contextmanager
def atomic_write(path, mode: str = "w"):
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    try:
        with open(tmp, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# -- box CSV ----------------------------------------------------------------

META_KEYS = ("k", "n", "R", "m", "L", "sound", "map")


def approx_meta(approx: RotationApprox) -> dict:
    return {"k": approx.k, "n": approx.n, "R": approx.R, "m": approx.m,
            "L": approx.L, "sound": approx.sound, "map": approx.label}


def write_boxes(path, approx: RotationApprox, extra: dict | None = None) -> None:
    """Rows ``i,j`` of Q_n with a one-line ``# key=value, ...`` header.

    ``map`` is always the last key, so labels containing commas survive.
    """
    meta = approx_meta(approx)
    label = meta.pop("map")
    meta.update(extra or {})
    head = ", ".join(f"{k}={_fmt(v)}" for k, v in meta.items()) + f", map={label}"
    boxes = approx.boxes.boxes()
    with atomic_write(path) as fh:
        fh.write(f"# {head}\n")
        np.savetxt(fh, boxes, fmt="%d", delimiter=",")


_HEAD = re.compile(r"(\w+)=(.*?)(?=, \w+=|$)")


def parse_header(line: str) -> dict:
    body = line.lstrip("#").strip()
    if "map=" in body:
        pre, label = body.split("map=", 1)
        out = dict(_HEAD.findall(pre.rstrip(", ")))
        out["map"] = label
        return out
    return dict(_HEAD.findall(body))


def _read_rows(path, kind) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    header, rows = [], []
    with open(path) as fh:
        for no, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                header.append(s)
                continue
            parts = s.split(",")
            try:
                if len(parts) != 2:
                    raise ValueError
                rows.append((kind(parts[0]), kind(parts[1])))
            except ValueError:
                raise FormatError(f"{path}:{no}: expected two {kind.__name__} fields, got {s!r}") from None
    return header, np.array(rows, dtype=float if kind is float else np.int64).reshape(-1, 2)


def read_boxes(path) -> RotationApprox:
    header, boxes = _read_rows(path, int)
    meta = {}
    for h in header:
        meta.update(parse_header(h))
    try:
        k, n = int(meta["k"]), int(meta["n"])
        R = float(meta.get("R", "nan"))
        m = int(meta.get("m", 0))
        L = float(meta.get("L", "nan"))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}:1: box CSV header lacks a valid k or n ({exc})") from None
    sound = meta.get("sound", "True") == "True"
    return RotationApprox(meta.get("map", ""), k, n, R, m, L, sound,
                          BoxSet.from_boxes(boxes, k))


def is_box_csv(path) -> bool:
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if not s:
                continue
            if not s.startswith("#"):
                return False
            h = parse_header(s)
            if "k" in h and "n" in h:
                return True
    return False


# -- points and polygons ----------------------------------------------------

def write_points(path, pts, header: str | None = None) -> None:
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    with atomic_write(path) as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        np.savetxt(fh, pts, fmt="%.17g", delimiter=",")


def read_points(path) -> np.ndarray:
    return _read_rows(path, float)[1]


def write_polygon(path, P: Polygon, header: str | None = None) -> None:
    head = "polygon vertices, counter-clockwise"
    write_points(path, P.vertices, head if header is None else f"{head}\n{header}")


def read_polygon(path) -> Polygon:
    pts = read_points(path)
    if len(pts) == 0:
        raise FormatError(f"{path}: no vertices")
    return convex_hull(pts)


def parse_rect(text: str) -> Polygon:
    """``rect:x0:x1:y0:y1``."""
    parts = text.split(":")
    if len(parts) != 5 or parts[0] != "rect":
        raise DomainError(f"rectangle spec must be rect:x0:x1:y0:y1, got {text!r}")
    try:
        x0, x1, y0, y1 = (float(p) for p in parts[1:])
    except ValueError:
        raise DomainError(f"non-numeric rectangle spec {text!r}") from None
    if not (x0 <= x1 and y0 <= y1):
        raise DomainError(f"empty rectangle {text!r}")
    return convex_hull([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


# -- PGM --------------------------------------------------------------------

def raster(boxes: BoxSet) -> np.ndarray:
    """Image rows top to bottom = j descending, columns = i ascending; 0 = occupied."""
    img = np.where(boxes.occ.T[::-1], 0, 255).astype(np.uint8)
    return np.ascontiguousarray(img)


def write_pgm(path, approx: RotationApprox) -> None:
    b = approx.boxes.trimmed()
    img = raster(b)
    h, w = img.shape
    s = approx.scale
    i0, _, j0, j1 = b.window
    notes = [
        f"map={approx.label} k={approx.k} n={approx.n}",
        f"pixel (col,row) covers box i={i0}+col, j={j1}-row",
        f"x = (i0 + col) * {s!r}, y = (j1 - row) * {s!r}, i0={i0}, j1={j1}",
        f"box side {s!r}",
    ]
    with atomic_write(path, "wb") as fh:
        fh.write(b"P5\n")
        for c in notes:
            fh.write(f"# {c}\n".encode())
        fh.write(f"{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    w, h, _ = (int(t) for t in tokens[1:])
    pos += 1
    return np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w)


# -- key=value --------------------------------------------------------------

def format_report(d: dict) -> str:
    lines = []
    for k, v in d.items():
        if isinstance(v, float) and math.isinf(v):
            v = "inf"
        lines.append(f"{k}={_fmt(v)}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
