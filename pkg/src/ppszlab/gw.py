"""Galton-Watson quantities for cut probabilities of complete (k-1)-ary trees."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .numerics import adaptive_simpson, vee


@dataclass(frozen=True)
class GwParams:
    k: int = 3
    tolerance: float = 1e-12

    def __post_init__(self):
        if self.k < 3:
            raise ValueError("k must be >= 3")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


def critical_r(k: int) -> float:
    return (k - 2) / (k - 1)


def _check_r(r: float) -> None:
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")


def q_iterative(k: int, r: float, tolerance: float = 1e-12, max_iter: int = 100_000) -> float:
    """Smallest fixed point of Q = (r + (1-r) Q)^(k-1), reached from Q = 0."""
    _check_r(r)
    if r >= critical_r(k):
        return 1.0
    e = k - 1
    Q = 0.0
    # plain iteration gets close from below, Newton finishes (the map minus
    # identity is convex, so Newton from the left never overshoots)
    for _ in range(200):
        Q = (r + (1 - r) * Q) ** e
    for _ in range(max_iter):
        base = r + (1 - r) * Q
        g = base**e - Q
        if abs(g) < tolerance * 1e-2:
            break
        dg = e * (1 - r) * base ** (e - 1) - 1.0
        if dg >= 0:
            Q = base**e
            continue
        Q_new = Q - g / dg
        if Q_new <= Q:
            break
        Q = min(Q_new, 1.0)
    return Q


def q(k: int, r: float, tolerance: float = 1e-12) -> float:
    _check_r(r)
    if k == 3:
        return (r / (1 - r)) ** 2 if r < 0.5 else 1.0
    return q_iterative(k, r, tolerance)


def p(k: int, r: float, tolerance: float = 1e-12) -> float:
    _check_r(r)
    if k == 3:
        return r / (1 - r) if r < 0.5 else 1.0
    return vee(r, q(k, r, tolerance))


@lru_cache(maxsize=64)
def s(k: int, tol: float = 1e-10) -> float:
    """Integral of Q_r over [0, 1]; Q has a kink at the critical r."""
    if k < 3:
        raise ValueError("k must be >= 3")
    rc = critical_r(k)
    left = adaptive_simpson(lambda r: q(k, r), 0.0, rc, tol)
    return left + (1.0 - rc)


def s3_closed() -> float:
    return 2 - 2 * math.log(2)


def q_prime(r: float) -> float:
    """dQ/dr for k = 3."""
    _check_r(r)
    return 2 * r / (1 - r) ** 3 if r < 0.5 else 0.0


def b_twocc(r: float) -> float:
    """Cut-probability multiplier for variables with two critical clauses."""
    _check_r(r)
    if r >= 0.5:
        return 1.0
    return 1 + (1 - 2 * r) ** 2 * (1 - 2 * r + 2 * r * r) / (1 - r) ** 2


def success_base(k: int) -> float:
    """Base c such that the PPSZ success probability is c^(-n)."""
    return 2.0 ** (1.0 - s(k))


def q_truncated(k: int, r: float, t: int) -> float:
    """Exact cut probability of the complete (k-1)-ary tree of height t (root unplaced)."""
    _check_r(r)
    if t < 1:
        raise ValueError("t must be >= 1")
    c = r
    for _ in range(t - 1):
        c = r + (1 - r) * c ** (k - 1)
    return c ** (k - 1)
