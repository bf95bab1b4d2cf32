"""Lifts of torus maps built from shears and translations.

A lift is stored as an ordered chain of primitive factors, applied left to
right. Every factor commutes with integer translations of the plane.

Floating point equivariance
---------------------------
Each trigonometric term is evaluated on the fractional part of the relevant
coordinate, and every displacement a factor adds is rounded to the dyadic
lattice ``2**-40``. For inputs on that lattice with coordinates below
``2**12`` in magnitude all additions are exact, so

    evaluate(f, p + t) == evaluate(f, p) + t

holds bit for bit for integer ``t``. Off the lattice the identity holds up
to ordinary rounding. The rounding of displacements perturbs the map by at
most ``2**-41`` per factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from . import _kernels

QUANTUM_EXP = 40
QUANTUM = 2.0 ** -QUANTUM_EXP
LIPSCHITZ_FLOOR = 1e-6

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Raised on inputs outside an operation's domain."""


def quantize(v):
    """Round to the nearest multiple of ``QUANTUM`` (ties to even)."""
    return np.rint(np.asarray(v, dtype=float) * 2.0 ** QUANTUM_EXP) * QUANTUM


def _quantize_up(v: float) -> float:
    # upper bound for |quantize(s * v)| over all |s| <= 1
    return float(quantize(abs(v)))


@dataclass(frozen=True)
class HorizontalShear:
    """(x, y) -> (x + amplitude * sin(2 pi frequency y), y)."""

    amplitude: float
    frequency: int = 1

    def __post_init__(self):
        _check_shear(self.amplitude, self.frequency)

    def apply(self, pts: np.ndarray) -> np.ndarray:
        y = pts[..., 1]
        frac = y - np.floor(y)
        out = pts.copy()
        out[..., 0] = pts[..., 0] + quantize(
            self.amplitude * np.sin(TWO_PI * self.frequency * frac))
        return out

    def lipschitz(self) -> float:
        return 1.0 + TWO_PI * self.frequency * abs(self.amplitude)

    def reach(self) -> tuple[float, float]:
        return _quantize_up(self.amplitude), 0.0

    def text(self) -> str:
        return f"hshear:{self.amplitude!r}:{self.frequency}"


@dataclass(frozen=True)
class VerticalShear:
    """(x, y) -> (x, y + amplitude * sin(2 pi frequency x))."""

    amplitude: float
    frequency: int = 1

    def __post_init__(self):
        _check_shear(self.amplitude, self.frequency)

    def apply(self, pts: np.ndarray) -> np.ndarray:
        x = pts[..., 0]
        frac = x - np.floor(x)
        out = pts.copy()
        out[..., 1] = pts[..., 1] + quantize(
            self.amplitude * np.sin(TWO_PI * self.frequency * frac))
        return out

    def lipschitz(self) -> float:
        return 1.0 + TWO_PI * self.frequency * abs(self.amplitude)

    def reach(self) -> tuple[float, float]:
        return 0.0, _quantize_up(self.amplitude)

    def text(self) -> str:
        return f"vshear:{self.amplitude!r}:{self.frequency}"


@dataclass(frozen=True)
class Translation:
    """(x, y) -> (x + r1, y + r2)."""

    r1: float
    r2: float

    def __post_init__(self):
        if not (math.isfinite(self.r1) and math.isfinite(self.r2)):
            raise DomainError("translation components must be finite")

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return pts + quantize([self.r1, self.r2])

    def lipschitz(self) -> float:
        return 1.0

    def reach(self) -> tuple[float, float]:
        return abs(float(quantize(self.r1))), abs(float(quantize(self.r2)))

    def text(self) -> str:
        return f"trans:{self.r1!r}:{self.r2!r}"


Factor = Union[HorizontalShear, VerticalShear, Translation]


def _check_shear(amplitude, frequency):
    if not math.isfinite(amplitude):
        raise DomainError(f"shear amplitude must be finite, got {amplitude}")
    if int(frequency) != frequency or frequency < 1:
        raise DomainError(f"shear frequency must be a positive integer, got {frequency}")


@dataclass(frozen=True)
class MapSpec:
    """A lift F: R^2 -> R^2 given as a chain of factors (first applied first)."""

    factors: tuple[Factor, ...] = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.label:
            object.__setattr__(self, "label", to_text(self) or "identity")

    def __call__(self, p):
        return evaluate(self, p)

    def then(self, *factors: Factor, label: str | None = None) -> "MapSpec":
        """Post-compose with further factors."""
        chain = self.factors + tuple(factors)
        return MapSpec(chain, label or "")


def _encode(f: MapSpec):
    kinds = np.empty(len(f.factors), dtype=np.int64)
    p1 = np.empty(len(f.factors))
    p2 = np.empty(len(f.factors))
    for idx, factor in enumerate(f.factors):
        if isinstance(factor, Translation):
            kinds[idx] = _kernels.TRANSLATE
            p1[idx], p2[idx] = quantize([factor.r1, factor.r2])
        else:
            kinds[idx] = _kernels.HSHEAR if isinstance(factor, HorizontalShear) else _kernels.VSHEAR
            p1[idx] = factor.amplitude
            p2[idx] = factor.frequency
    return kinds, p1, p2


def _run_chain(f: MapSpec, p, n: int) -> np.ndarray:
    pts = np.array(p, dtype=float)
    if pts.shape[-1:] != (2,):
        raise DomainError(f"points must have a trailing axis of length 2, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DomainError("cannot evaluate a map at non-finite points")
    flat = np.ascontiguousarray(pts.reshape(-1, 2))
    if f.factors and flat.size:
        _kernels.apply_chain(flat, *_encode(f), n)
    return flat.reshape(pts.shape)


def evaluate(f: MapSpec, p) -> np.ndarray:
    """Apply ``f`` to one point ``(2,)`` or an array of points ``(..., 2)``."""
    return _run_chain(f, p, 1)


def iterate(f: MapSpec, p, n: int) -> np.ndarray:
    """n-fold composition of ``f`` applied to ``p``."""
    if n < 1:
        raise DomainError(f"iteration count must be >= 1, got {n}")
    return _run_chain(f, p, n)


def evaluate_reference(f: MapSpec, p) -> np.ndarray:
    """Factor-by-factor numpy evaluation; an independent check on :func:`evaluate`."""
    pts = np.array(p, dtype=float)
    for factor in f.factors:
        pts = factor.apply(pts)
    return pts


def displacement_bound(f: MapSpec) -> float:
    """Upper bound for ``max ||F(x) - x||`` over the unit square.

    Adds up the largest horizontal and vertical step of every factor and
    returns the Euclidean norm of the two totals.
    """
    ax = ay = 0.0
    for factor in f.factors:
        dx, dy = factor.reach()
        ax += dx
        ay += dy
    return math.hypot(ax, ay)


def lipschitz_bound(f: MapSpec) -> float:
    """Product of per-factor operator norm bounds, kept strictly above 1."""
    prod = 1.0
    for factor in f.factors:
        prod *= factor.lipschitz()
    return max(1.0 + LIPSCHITZ_FLOOR, prod)


# -- presets and text form -------------------------------------------------

def standard_family(alpha: float, beta: float) -> MapSpec:
    """F_{alpha,beta}: the vertical skew shift followed by the horizontal one."""
    return MapSpec((VerticalShear(beta, 1), HorizontalShear(alpha, 1)),
                   f"fab:{alpha!r}:{beta!r}")


def high_period_map() -> MapSpec:
    """The map G whose rotation set [-3/5,1/5] x [1/8,3/8] has period-40 vertices."""
    return MapSpec((VerticalShear(0.125, 5), HorizontalShear(0.4, 8),
                    Translation(-0.2, 0.25)), "g")


def identity_map() -> MapSpec:
    return MapSpec((), "identity")


def _number(tok: str) -> float:
    tok = tok.strip()
    try:
        return float(Fraction(tok))
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"not a number: {tok!r}") from exc


def _integer(tok: str) -> int:
    try:
        return int(tok.strip())
    except ValueError as exc:
        raise DomainError(f"not an integer: {tok!r}") from exc


def parse_map(text: str) -> MapSpec:
    """Parse a factor chain or preset.

    Accepted forms: ``"hshear:a:f;vshear:b:g;trans:r1:r2"``, ``"fab:a:b"``,
    ``"fab(a,b)"``, ``"g"`` and ``"identity"``. Numbers may be fractions
    such as ``1/2``.
    """
    text = text.strip()
    low = text.lower()
    if low in ("g", "identity", "id"):
        return high_period_map() if low == "g" else identity_map()
    if low.startswith("fab(") and low.endswith(")"):
        args = text[4:-1].split(",")
        if len(args) != 2:
            raise DomainError(f"fab(...) takes two arguments: {text!r}")
        return standard_family(_number(args[0]), _number(args[1]))
    factors: list[Factor] = []
    for part in filter(None, (s.strip() for s in text.split(";"))):
        name, *args = part.split(":")
        name = name.lower()
        if name == "fab" and len(args) == 2:
            factors.extend(standard_family(_number(args[0]), _number(args[1])).factors)
        elif name == "g" and not args:
            factors.extend(high_period_map().factors)
        elif name in ("hshear", "vshear") and len(args) in (1, 2):
            freq = _integer(args[1]) if len(args) == 2 else 1
            cls = HorizontalShear if name == "hshear" else VerticalShear
            factors.append(cls(_number(args[0]), freq))
        elif name in ("trans", "translation") and len(args) == 2:
            factors.append(Translation(_number(args[0]), _number(args[1])))
        else:
            raise DomainError(f"cannot parse map factor {part!r}")
    if len(factors) == 0:
        raise DomainError(f"empty map description {text!r}")
    return MapSpec(tuple(factors), text)


def to_text(f: MapSpec) -> str:
    return ";".join(factor.text() for factor in f.factors)


def perturbed(f: MapSpec, r1: float, r2: float) -> MapSpec:
    """R o F with R the translation by (r1, r2)."""
    return f.then(Translation(r1, r2), label=f"{f.label}+trans:{r1!r}:{r2!r}")


def as_points(p: Sequence[float] | np.ndarray) -> np.ndarray:
    return np.asarray(p, dtype=float).reshape(-1, 2)
