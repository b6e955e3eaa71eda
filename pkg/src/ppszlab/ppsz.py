"""The PPSZ loop, Forced statistics and success probabilities."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Protocol, Sequence

import numpy as np

from .formula import CnfFormula, restrict_clauses
from .implication import w_implies

Placement = Mapping[Hashable, float]


class PlacementSampler(Protocol):
    def sample(self, rng: np.random.Generator, labels: Sequence[Hashable]) -> dict: ...


class OutOfCoins(Exception):
    pass


@dataclass(frozen=True)
class PpszOutcome:
    assignment: tuple[int, ...] | None
    forced_mask: tuple[bool, ...]
    guessed_count: int

    @property
    def success(self) -> bool:
        return self.assignment is not None


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    trials: int
    forced_mean: float = float("nan")


def permutation_from_placement(pi: Placement, vars: Iterable[int]) -> tuple[int, ...]:
    vs = list(vars)
    missing = [v for v in vs if v not in pi]
    if missing:
        raise KeyError(f"placement has no value for {missing}")
    return tuple(sorted(vs, key=lambda v: (pi[v], v)))


def _coin_iter(coins) -> Iterator[int]:
    if callable(coins):
        while True:
            yield int(coins())
    yield from (int(c) for c in coins)


def run_fixed(F: CnfFormula, order: Sequence[int], w: int, coins, method: str = "guided") -> PpszOutcome:
    """One run of the fixed-order algorithm.

    ``coins`` is an iterable of bits or a zero-argument callable. Raises
    OutOfCoins if a finite coin stream is exhausted.
    """
    it = _coin_iter(coins)
    clauses = F.clauses
    beta: dict[int, int] = {}
    forced = [False] * F.n
    guessed = 0
    for x in order:
        if w_implies(clauses, w, x, 1, method=method, cap=None):
            b = 1
            forced[x - 1] = True
        elif w_implies(clauses, w, x, 0, method=method, cap=None):
            b = 0
            forced[x - 1] = True
        else:
            try:
                b = next(it)
            except StopIteration:
                raise OutOfCoins from None
            guessed += 1
        beta[x] = b
        clauses = restrict_clauses(clauses, {x: b})
    values = tuple(beta.get(i, 0) for i in range(1, F.n + 1))
    ok = F.evaluate(values)
    return PpszOutcome(values if ok else None, tuple(forced), guessed)


def _check_normalized(F: CnfFormula) -> None:
    if not F.evaluate((1,) * F.n):
        raise ValueError("formula is not normalized: all-ones does not satisfy it")


@lru_cache(maxsize=1 << 16)
def _forced_cached(F: CnfFormula, before: frozenset[int], w: int, x: int, method: str) -> bool:
    clauses = restrict_clauses(F.clauses, {v: 1 for v in before})
    return w_implies(clauses, w, x, 1, method=method, cap=None)


def forced(F: CnfFormula, order: Sequence[int], w: int, x: int, method: str = "guided") -> bool:
    """w-implication of x = 1 after setting every earlier variable to 1."""
    _check_normalized(F)
    idx = list(order).index(x)
    return _forced_cached(F, frozenset(order[:idx]), w, x, method)


def forced_vector(F: CnfFormula, order: Sequence[int], w: int, method: str = "guided") -> tuple[bool, ...]:
    _check_normalized(F)
    out = [False] * F.n
    for i, x in enumerate(order):
        out[x - 1] = _forced_cached(F, frozenset(order[:i]), w, x, method)
    return tuple(out)


def exact_success_probability(F: CnfFormula, order: Sequence[int], w: int) -> Fraction:
    nf = sum(forced_vector(F, order, w))
    return Fraction(1, 2 ** (F.n - nf))


def enumerate_success_probability(F: CnfFormula, order: Sequence[int], w: int) -> Fraction:
    """Exact success probability by walking every coin stream the run can consume."""
    total = Fraction(0)
    stack: list[tuple[int, ...]] = [()]
    while stack:
        prefix = stack.pop()
        try:
            out = run_fixed(F, order, w, prefix)
        except OutOfCoins:
            stack.append(prefix + (1,))
            stack.append(prefix + (0,))
            continue
        if len(prefix) != out.guessed_count:
            raise AssertionError("coin accounting mismatch")
        if out.success:
            total += Fraction(1, 2 ** len(prefix))
    return total


def trial_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, i]))


def _map_trials(fn: Callable[[int], tuple], trials: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fn, range(trials)))


def success_probability_mc(
    F: CnfFormula,
    w: int,
    dist: PlacementSampler,
    trials: int,
    seed: int,
    threads: int = 1,
) -> Estimate:
    """Average of 2^(-n + Forced(pi)) over sampled placements."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    _check_normalized(F)
    labels = list(range(1, F.n + 1))

    def one(i):
        pi = dist.sample(trial_rng(seed, i), labels)
        order = permutation_from_placement(pi, labels)
        nf = sum(forced_vector(F, order, w))
        return 2.0 ** (nf - F.n), nf

    res = np.array(_map_trials(one, trials, threads), dtype=float)
    vals = res[:, 0]
    se = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return Estimate(float(vals.mean()), se, trials, float(res[:, 1].mean()))


def success_probability_exhaustive(F: CnfFormula, w: int) -> Fraction:
    """Exact average over all n! orders (uniform placement)."""
    import itertools
    import math

    total = Fraction(0)
    for order in itertools.permutations(range(1, F.n + 1)):
        total += exact_success_probability(F, order, w)
    return total / math.factorial(F.n)
