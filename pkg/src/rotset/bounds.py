"""A priori error budgets for the box approximation Q_n*.

All quantities are parametric in the bounded-deviation constant ``c``,
which has to be supplied by the caller; nothing here estimates it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .dynamics import DomainError

SQRT2 = math.sqrt(2.0)


def _check(eps: float, n: int, L: float) -> None:
    if not L > 1:
        raise DomainError(f"Lipschitz constant must exceed 1, got {L}")
    if n < 1 or int(n) != n:
        raise DomainError(f"n must be a positive integer, got {n}")
    if eps < 0:
        raise DomainError(f"epsilon must be >= 0, got {eps}")


def geometric_sum(L: float, n: int) -> float:
    """(L^n - 1)/(L - 1) = 1 + L + ... + L^(n-1); +inf on overflow."""
    if n == 1:
        return 1.0
    lm1 = L - 1.0
    try:
        return math.expm1(n * math.log1p(lm1)) / lm1
    except OverflowError:
        return math.inf


def kappa(eps: float, n: int, L: float) -> float:
    """Bound 2 eps (L^n - 1)/(n (L - 1)) on dH(K_n^{2 eps}, K_n)."""
    _check(eps, n, L)
    if eps == 0:
        return 0.0
    return 2.0 * eps * geometric_sum(L, n) / n


def bracket(k: int, eps: float, L: float, c: float) -> float:
    """(c + 2 eps (L^k - 1)/(L - 1)) / k, the quantity minimised over k."""
    if eps == 0:
        return c / k
    return (c + 2.0 * eps * geometric_sum(L, k)) / k


def gamma(eps: float, n: int, M: float, L: float, c: float) -> tuple[float, int, int]:
    """Return ``(gamma, k_n, r_n)``.

    ``k_n`` minimises :func:`bracket` over ``1..n`` (smallest on ties) and
    ``r_n = n mod k_n``.
    """
    _check(eps, n, L)
    if M < 0 or c < 0:
        raise DomainError(f"M and c must be >= 0, got M={M}, c={c}")
    best, k_n = math.inf, 1
    for k in range(1, n + 1):
        b = bracket(k, eps, L, c)
        if b < best:
            best, k_n = b, k
        elif b == math.inf:
            break               # brackets only grow once L^k overflows
    r_n = n % k_n
    frac = r_n / n
    g = 2.0 * frac * (M + eps) + (1.0 - frac) * best
    return g, k_n, r_n


def total_error(eps: float, n: int, M: float, L: float, c: float) -> float:
    g, _, _ = gamma(eps, n, M, L, c)
    return max(2.0 * SQRT2 / n, SQRT2 / n + g)


def shadowing_error(c: float, n: int) -> float:
    """(sqrt 2 + 1 + c)/n, the bound available under shadowing."""
    if c < 0:
        raise DomainError(f"c must be >= 0, got {c}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return (SQRT2 + 1.0 + c) / n


@dataclass(frozen=True)
class ErrorBudget:
    eps: float
    n: int
    M: float
    L: float
    c: Optional[float] = None

    def __post_init__(self):
        _check(self.eps, self.n, self.L)

    @property
    def kappa(self) -> float:
        return kappa(self.eps, self.n, self.L)

    @property
    def containment(self) -> float:
        """Radius of the neighbourhood of Q_n* guaranteed to hold the rotation set."""
        return 2.0 * SQRT2 / self.n

    def _gamma(self):
        if self.c is None:
            return None
        return gamma(self.eps, self.n, self.M, self.L, self.c)

    @property
    def gamma(self) -> Optional[float]:
        g = self._gamma()
        return None if g is None else g[0]

    @property
    def total(self) -> Optional[float]:
        return None if self.c is None else total_error(self.eps, self.n, self.M, self.L, self.c)

    @property
    def shadow(self) -> Optional[float]:
        return None if self.c is None else shadowing_error(self.c, self.n)

    def report(self) -> dict:
        """Flat key/value view; keys needing ``c`` are left out when it is absent."""
        out = {"eps": self.eps, "n": self.n, "M": self.M, "L": self.L,
               "kappa": self.kappa, "containment": self.containment}
        g = self._gamma()
        if g is not None:
            out.update(c=self.c, gamma=g[0], k_n=g[1], r_n=g[2],
                       total=self.total, shadow=self.shadow)
        return out
