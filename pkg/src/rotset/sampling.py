"""Orbit and pseudo-orbit sampling.

Random streams are numpy ``PCG64`` generators seeded with
``SeedSequence([seed, index])``, one per start point, so every sampled
orbit depends only on ``(seed, index)`` and not on how work is scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DomainError, MapSpec, evaluate, iterate


def rng_for(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def torus_grid(N: int) -> np.ndarray:
    """The N*N points (a/N, b/N), a, b = 0..N-1, row-major in a.

    Points on the far edges of the unit square are integer translates of
    points already present and give the same displacement vectors.
    """
    if N < 2:
        raise DomainError(f"grid side must be >= 2, got {N}")
    a = np.arange(N) / N
    gx, gy = np.meshgrid(a, a, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def sample_Kn(f: MapSpec, n: int, N: int) -> np.ndarray:
    """Normalised displacements (F^n(x) - x)/n over the N*N torus grid.

    This is also the direct method for approximating the rotation set.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    x = torus_grid(N)
    return (iterate(f, x, n) - x) / n


@dataclass(frozen=True)
class PseudoOrbit:
    points: np.ndarray      # (n + 1, 2)
    eps: float
    defects: np.ndarray     # (n,) ||F(xi_j) - xi_{j+1}||

    @property
    def length(self) -> int:
        return len(self.points) - 1

    @property
    def max_defect(self) -> float:
        return float(self.defects.max()) if len(self.defects) else 0.0

    def rotation_vector(self) -> np.ndarray:
        return (self.points[-1] - self.points[0]) / self.length


def defects(f: MapSpec, seq) -> np.ndarray:
    seq = np.asarray(seq, dtype=float).reshape(-1, 2)
    step = evaluate(f, seq[:-1]) - seq[1:]
    return np.hypot(step[:, 0], step[:, 1])


def is_pseudo_orbit(f: MapSpec, seq, eps: float) -> tuple[bool, float]:
    """Whether every step misses F by at most ``eps``; also the largest miss."""
    seq = np.asarray(seq, dtype=float).reshape(-1, 2)
    if len(seq) < 2:
        raise DomainError("a pseudo-orbit needs at least two points")
    d = defects(f, seq)
    worst = float(d.max())
    return bool(worst <= eps), worst


def _disc(rng: np.random.Generator, eps: float) -> np.ndarray:
    theta = rng.uniform(0.0, 2.0 * np.pi)
    r = eps * np.sqrt(rng.uniform())
    return np.array([r * np.cos(theta), r * np.sin(theta)])


def _pseudo_orbit(f: MapSpec, x0, n: int, eps: float, rng: np.random.Generator) -> PseudoOrbit:
    if eps < 0:
        raise DomainError(f"eps must be >= 0, got {eps}")
    pts = np.empty((n + 1, 2))
    pts[0] = x0
    miss = np.empty(n)
    for j in range(n):
        fx = evaluate(f, pts[j])
        u = _disc(rng, eps)
        nxt = fx + u
        d = float(np.hypot(*(fx - nxt)))
        while d > eps:             # rounding pushed the jump past eps
            u *= 0.5
            nxt = fx + u
            d = float(np.hypot(*(fx - nxt)))
        pts[j + 1] = nxt
        miss[j] = d
    return PseudoOrbit(pts, eps, miss)


def random_pseudo_orbit(f: MapSpec, x0, n: int, eps: float, seed: int,
                        index: int = 0) -> PseudoOrbit:
    """xi_{j+1} = F(xi_j) + u_j with u_j uniform in the closed eps-disc."""
    return _pseudo_orbit(f, x0, n, eps, rng_for(seed, index))


def sample_Kn_eps(f: MapSpec, n: int, eps: float, count: int, seed: int,
                  starts=None, return_orbits: bool = False):
    """Vectors (xi_n - xi_0)/n of random eps-pseudo-orbits started in [0,1]^2.

    Every vector belongs to K_n^eps; the set is an inner sample, not an
    enclosure. Start points are uniform unless ``starts`` is given.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    if starts is not None:
        starts = np.asarray(starts, dtype=float).reshape(-1, 2)
        count = len(starts)
    out = np.empty((count, 2))
    orbits = []
    for idx in range(count):
        rng = rng_for(seed, idx)
        x0 = rng.uniform(0.0, 1.0, 2) if starts is None else starts[idx]
        orb = _pseudo_orbit(f, x0, n, eps, rng)
        out[idx] = orb.rotation_vector()
        if return_orbits:
            orbits.append(orb)
    return (out, orbits) if return_orbits else out


def segment_average_check(orbit: PseudoOrbit, n: int, tol: float = 1e-12) -> bool:
    """Check that the overall rotation vector is the mean of the n-step segment vectors.

    Also checks that every segment on its own is an eps-pseudo-orbit.
    """
    total = orbit.length
    if n < 1 or total % n:
        raise DomainError(f"orbit of length {total} does not split into segments of length {n}")
    k = total // n
    xi = orbit.points
    seg = (xi[n::n] - xi[:-n:n]) / n
    whole = (xi[-1] - xi[0]) / total
    same = np.all(np.abs(seg.mean(axis=0) - whole) <= tol * max(1.0, float(np.abs(whole).max())))
    parts_ok = all(orbit.defects[i * n:(i + 1) * n].max() <= orbit.eps for i in range(k))
    return bool(same and parts_ok)
