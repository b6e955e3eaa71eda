"""Small numerical helpers shared across modules."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4 * fm + fb) / 6

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) * (fa + 4 * flm + fm) / 6
        right = (b - m) * (fm + 4 * frm + fb) / 6
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15 * tol:
            return left + right + delta / 15
        return rec(a, m, fa, flm, fm, left, tol / 2, depth - 1) + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1)

    return rec(a, b, fa, fm, fb, whole, tol, max_depth)


def quad(f: Callable[[float], float], a: float, b: float, points: Sequence[float] = (), tol: float = 1e-13) -> float:
    """Adaptive Gauss-Kronrod quadrature split at the given interior points."""
    cuts = [a, *sorted(p for p in points if a < p < b), b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        val, _err = integrate.quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=200)
        total += val
    return total


def vee(a, b):
    """Probabilistic OR: a + b - ab."""
    return a + b - a * b


def grid(a: float, b: float, num: int = 10_000, open_ends: bool = False) -> np.ndarray:
    if open_ends:
        return np.linspace(a, b, num + 2)[1:-1]
    return np.linspace(a, b, num)


def ln2() -> float:
    return math.log(2.0)
