"""Bounded-width implication: does some set of at most w clauses force x = b?"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable, Sequence

from .formula import Clause, CnfFormula

SUBSET_VAR_CAP = 20
DEFAULT_W_CAP = 4


def subset_implies(G: Sequence[Clause], x: int, b: int) -> bool:
    """Brute force: every assignment of vars(G) + {x} satisfying G sets x = b."""
    vs = sorted({abs(l) for c in G for l in c} | {x})
    if len(vs) > SUBSET_VAR_CAP:
        raise ValueError(f"subset has {len(vs)} variables, cap is {SUBSET_VAR_CAP}")
    m = len(vs)
    pos = {v: i for i, v in enumerate(vs)}
    full = (1 << (1 << m)) - 1
    # tables[i] has bit j set iff variable vs[i] is 1 in assignment j
    tables = []
    for i in range(m):
        block = (1 << (1 << i)) - 1
        period = 1 << (i + 1)
        t = 0
        for start in range(1 << i, 1 << m, period):
            t |= block << start
        tables.append(t)
    sat = full
    for c in G:
        cm = 0
        for l in c:
            t = tables[pos[abs(l)]]
            cm |= t if l > 0 else full ^ t
        sat &= cm
    tx = tables[pos[x]]
    wrong = (full ^ tx) if b == 1 else tx
    return sat & wrong == 0


def _model(clauses: Sequence[Clause], assume: dict[int, int]) -> dict[int, int] | None:
    """Tiny DPLL returning a model preferring value 1, or None if unsatisfiable."""
    asg = dict(assume)

    def solve(asg):
        changed = True
        while changed:
            changed = False
            for c in clauses:
                free = None
                nfree = 0
                sat = False
                for l in c:
                    v = asg.get(abs(l))
                    if v is None:
                        nfree += 1
                        free = l
                    elif (v == 1) == (l > 0):
                        sat = True
                        break
                if sat:
                    continue
                if nfree == 0:
                    return None
                if nfree == 1:
                    asg[abs(free)] = 1 if free > 0 else 0
                    changed = True
        for c in clauses:
            for l in c:
                if abs(l) not in asg:
                    for val in (1, 0):
                        trial = dict(asg)
                        trial[abs(l)] = val
                        res = solve(trial)
                        if res is not None:
                            return res
                    return None
        return asg

    return solve(asg)


def _falsified(c: Clause, sigma: dict[int, int]) -> bool:
    return all((sigma.get(abs(l), 1) == 1) != (l > 0) for l in c)


def _guided(clauses: tuple[Clause, ...], w: int, x: int, b: int) -> bool:
    # Any G with G + (x != b) unsatisfiable must contain a clause falsified by
    # every model of the current partial set, so branching on those is complete.
    seen: set[frozenset[int]] = set()
    unit = {x: 1 - b}

    def search(S: tuple[int, ...], limit: int) -> bool:
        key = frozenset(S)
        if key in seen:
            return False
        seen.add(key)
        sigma = _model([clauses[i] for i in S], unit)
        if sigma is None:
            return True
        if len(S) == limit:
            return False
        for i, c in enumerate(clauses):
            if i not in key and _falsified(c, sigma):
                if search(S + (i,), limit):
                    return True
        return False

    for limit in range(0, w + 1):
        seen.clear()
        if search((), limit):
            return True
    return False


def _connected(clauses: tuple[Clause, ...], w: int, x: int, b: int) -> bool:
    cvars = [frozenset(abs(l) for l in c) for c in clauses]
    for s in range(1, w + 1):
        # subsets connected to x
        frontier = {frozenset([i]) for i, vs in enumerate(cvars) if x in vs}
        # subsets connected among themselves (for unsatisfiable G)
        anyconn = {frozenset([i]) for i in range(len(clauses))}
        for _ in range(s - 1):
            frontier = _grow(frontier, cvars)
            anyconn = _grow(anyconn, cvars)
        for S in frontier | anyconn:
            if len(S) == s and subset_implies([clauses[i] for i in sorted(S)], x, b):
                return True
    return False


def _grow(sets: set[frozenset[int]], cvars: list[frozenset[int]]) -> set[frozenset[int]]:
    out = set()
    for S in sets:
        vs = frozenset().union(*(cvars[i] for i in S))
        for j, cv in enumerate(cvars):
            if j not in S and cv & vs:
                out.add(S | {j})
    return out


def _exhaustive(clauses: tuple[Clause, ...], w: int, x: int, b: int) -> bool:
    for s in range(1, w + 1):
        for G in itertools.combinations(clauses, s):
            if subset_implies(G, x, b):
                return True
    return False


_METHODS = {"guided": _guided, "connected": _connected, "exhaustive": _exhaustive}


@lru_cache(maxsize=1 << 18)
def _cached(clauses: tuple[Clause, ...], w: int, x: int, b: int, method: str) -> bool:
    return _METHODS[method](clauses, w, x, b)


def w_implies(
    F: CnfFormula | Iterable[Clause],
    w: int,
    x: int,
    b: int,
    method: str = "guided",
    cap: int | None = DEFAULT_W_CAP,
) -> bool:
    """True iff some subset of at most w clauses implies x = b.

    ``method`` selects the search: 'guided' (model-guided branching),
    'connected' (connected-growth plus unsatisfiable-core search) or
    'exhaustive' (all subsets). All three return the same answer.
    """
    if w < 1:
        raise ValueError("w must be >= 1")
    if cap is not None and w > cap:
        raise ValueError(f"w={w} exceeds cap {cap}")
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}")
    clauses = F.clauses if isinstance(F, CnfFormula) else tuple(F)
    # an empty clause is an unsatisfiable one-clause subset
    if any(len(c) == 0 for c in clauses):
        return True
    return _cached(tuple(clauses), w, x, b, method)
