"""CNF formulas, DIMACS I/O, brute-force semantics and instance generation.

Literals are signed integers in DIMACS style: ``+i`` is variable ``i`` and
``-i`` its negation. A clause is a tuple of literals sorted by variable index.
"""

from __future__ import annotations

import itertools
import json
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

Clause = tuple[int, ...]
Assignment = tuple[int, ...]  # values[i-1] is the value of variable i

ENUM_CAP = 24


@dataclass(frozen=True)
class Literal:
    var: int
    positive: bool

    def to_int(self) -> int:
        return self.var if self.positive else -self.var

    @staticmethod
    def from_int(lit: int) -> "Literal":
        return Literal(abs(lit), lit > 0)


def make_clause(lits: Iterable[int]) -> Clause:
    """Validate and canonicalise a clause (sorted by variable index)."""
    lits = list(lits)
    seen: dict[int, int] = {}
    for lit in lits:
        if lit == 0:
            raise ValueError("literal 0 is not allowed inside a clause")
        v = abs(lit)
        if v in seen:
            if seen[v] == lit:
                raise ValueError(f"duplicate literal {lit} in clause {lits}")
            raise ValueError(f"variable {v} occurs in both polarities in clause {lits}")
        seen[v] = lit
    return tuple(sorted(lits, key=abs))


def clause_key(c: Clause) -> tuple:
    """Lexicographic order: sorted variable indices, then polarities."""
    return (tuple(abs(l) for l in c), tuple(l > 0 for l in c))


def clause_vars(c: Clause) -> tuple[int, ...]:
    return tuple(abs(l) for l in c)


@dataclass(frozen=True)
class CnfFormula:
    n: int
    k: int
    clauses: tuple[Clause, ...]
    comments: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for c in self.clauses:
            for lit in c:
                if not 1 <= abs(lit) <= self.n:
                    raise ValueError(f"literal {lit} out of range for n={self.n}")
            if len(c) > self.k:
                raise ValueError(f"clause {c} wider than k={self.k}")

    @staticmethod
    def from_clauses(n: int, clauses: Iterable[Iterable[int]], k: int | None = None) -> "CnfFormula":
        cs = tuple(make_clause(c) for c in clauses)
        if k is None:
            k = max((len(c) for c in cs), default=0)
        return CnfFormula(n, k, cs)

    @property
    def m(self) -> int:
        return len(self.clauses)

    def has_empty_clause(self) -> bool:
        return any(len(c) == 0 for c in self.clauses)

    def evaluate(self, values: Sequence[int]) -> bool:
        return all(any((values[abs(l) - 1] == 1) == (l > 0) for l in c) for c in self.clauses)


def parse_dimacs(text: bytes | str) -> CnfFormula:
    if isinstance(text, bytes):
        text = text.decode()
    n = None
    comments = []
    tokens: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith("c"):
            comments.append(line[1:].strip())
            continue
        if line.startswith("p"):
            parts = line.split()
            if n is not None or len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"malformed header on line {lineno}: {raw!r}")
            try:
                n, _m = int(parts[2]), int(parts[3])
            except ValueError:
                raise ValueError(f"malformed header on line {lineno}: {raw!r}") from None
            if n < 0 or _m < 0:
                raise ValueError(f"malformed header on line {lineno}: {raw!r}")
            continue
        if n is None:
            raise ValueError(f"clause before header on line {lineno}")
        try:
            tokens.extend(int(t) for t in line.split())
        except ValueError:
            raise ValueError(f"non-integer token on line {lineno}: {raw!r}") from None
    if n is None:
        raise ValueError("missing 'p cnf' header")
    clauses = []
    cur: list[int] = []
    for t in tokens:
        if t == 0:
            clauses.append(make_clause(cur))
            cur = []
            continue
        if abs(t) > n:
            raise ValueError(f"literal {t} out of range for n={n}")
        cur.append(t)
    if cur:
        raise ValueError("last clause is missing its 0 terminator")
    k = max((len(c) for c in clauses), default=0)
    return CnfFormula(n, k, tuple(clauses), tuple(comments))


def write_dimacs(F: CnfFormula, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in (*F.comments, *comments)]
    lines.append(f"p cnf {F.n} {F.m}")
    lines.extend(" ".join(map(str, c)) + " 0" if c else "0" for c in F.clauses)
    return "\n".join(lines) + "\n"


def restrict_clauses(clauses: Iterable[Clause], rho: Mapping[int, int]) -> tuple[Clause, ...]:
    out = []
    for c in clauses:
        kept = []
        sat = False
        for lit in c:
            v = rho.get(abs(lit))
            if v is None:
                kept.append(lit)
            elif (v == 1) == (lit > 0):
                sat = True
                break
        if not sat:
            out.append(tuple(kept))
    return tuple(out)


def restrict(F: CnfFormula, rho: Mapping[int, int]) -> CnfFormula:
    """Apply a partial assignment; empty clauses are kept."""
    return CnfFormula(F.n, F.k, restrict_clauses(F.clauses, rho))


def _truth_tables(n: int) -> np.ndarray:
    # row j is the assignment with binary expansion of j, x1 most significant
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def satisfying_mask(F: CnfFormula) -> np.ndarray:
    if F.n > ENUM_CAP:
        raise ValueError(f"brute-force enumeration capped at n <= {ENUM_CAP}, got n={F.n}")
    N = 1 << F.n
    ok = np.ones(N, dtype=bool)
    idx = np.arange(N, dtype=np.int64)
    for c in F.clauses:
        sat = np.zeros(N, dtype=bool)
        for lit in c:
            bit = ((idx >> (F.n - abs(lit))) & 1).astype(bool)
            sat |= bit if lit > 0 else ~bit
        ok &= sat
    return ok


def all_satisfying(F: CnfFormula) -> list[Assignment]:
    """Every satisfying assignment in ascending binary order (x1 most significant)."""
    ok = satisfying_mask(F)
    rows = np.flatnonzero(ok)
    return [tuple(int(b) for b in format(int(j), f"0{F.n}b")) if F.n else () for j in rows]


def count_satisfying(F: CnfFormula, limit: int | None = None) -> int:
    return int(satisfying_mask(F).sum())


def normalize_all_ones(F: CnfFormula) -> CnfFormula:
    sols = all_satisfying(F)
    if len(sols) != 1:
        raise ValueError(f"formula is not uniquely satisfiable ({len(sols)} solutions)")
    sol = sols[0]
    flip = {i + 1 for i, b in enumerate(sol) if b == 0}
    clauses = tuple(tuple(-l if abs(l) in flip else l for l in c) for c in F.clauses)
    return CnfFormula(F.n, F.k, clauses, F.comments)


def is_critical(c: Clause, x: int) -> bool:
    return x in c and all(l < 0 for l in c if l != x)


def critical_clauses(F: CnfFormula, x: int) -> list[Clause]:
    return [c for c in F.clauses if is_critical(c, x)]


def canonical_critical_clause(F: CnfFormula, x: int) -> Clause:
    crit = critical_clauses(F, x)
    if not crit:
        raise ValueError(f"variable {x} has no critical clause; formula not normalized/unique")
    return min(crit, key=clause_key)


def _implies(premises: Sequence[Clause], target: Clause) -> bool:
    vs = sorted({abs(l) for c in (*premises, target) for l in c})
    pos = {v: i for i, v in enumerate(vs)}
    for bits in itertools.product((0, 1), repeat=len(vs)):
        def sat(c):
            return any((bits[pos[abs(l)]] == 1) == (l > 0) for l in c)
        if all(sat(c) for c in premises) and not sat(target):
            return False
    return True


@lru_cache(maxsize=512)
def f_tilde(F: CnfFormula) -> CnfFormula:
    """Add every 3-clause implied by a pair of 3-clauses of F."""
    if F.k != 3:
        raise ValueError("f_tilde is defined for k = 3 only")
    threes = [c for c in F.clauses if len(c) == 3]
    present = set(F.clauses)
    added: list[Clause] = []
    for a, b in itertools.combinations(threes, 2):
        vs = sorted({abs(l) for l in a + b})
        if len(vs) == 6:
            continue  # disjoint pair implies only clauses containing a or b, none of width 3
        # truth tables over the pair's variables as bitmasks indexed by assignment
        rows = 1 << len(vs)
        full = (1 << rows) - 1
        var_mask = {v: sum(1 << j for j in range(rows) if (j >> i) & 1) for i, v in enumerate(vs)}

        def lit_mask(l):
            m = var_mask[abs(l)]
            return m if l > 0 else full & ~m

        def clause_mask(c):
            m = 0
            for l in c:
                m |= lit_mask(l)
            return m

        prem = clause_mask(a) & clause_mask(b)
        for triple in itertools.combinations(vs, 3):
            for signs in itertools.product((1, -1), repeat=3):
                cand = tuple(s * v for s, v in zip(signs, triple))
                if cand not in present and not prem & ~clause_mask(cand) & full:
                    present.add(cand)
                    added.append(cand)
    return CnfFormula(F.n, F.k, F.clauses + tuple(added), F.comments)


@lru_cache(maxsize=512)
def twocc_set(F: CnfFormula, mode: str = "ftilde") -> frozenset[int]:
    """Variables with at least two critical clauses; mode 'ftilde' (k=3) or 'plain'."""
    if mode == "ftilde":
        G = f_tilde(F)
    elif mode == "plain":
        G = F
    else:
        raise ValueError(f"unknown mode {mode!r}")
    counts: dict[int, int] = {}
    for c in G.clauses:
        pos = [l for l in c if l > 0]
        if len(pos) == 1:
            counts[pos[0]] = counts.get(pos[0], 0) + 1
    return frozenset(v for v, cnt in counts.items() if cnt >= 2)


@dataclass(frozen=True)
class GeneratedInstance:
    formula: CnfFormula
    seed: int
    attempts: int

    def sidecar(self) -> str:
        F = self.formula
        return json.dumps({"n": F.n, "k": F.k, "seed": self.seed, "unique_solution": [1] * F.n})


def _random_clause(rng: np.random.Generator, n: int, width: int) -> Clause:
    vs = rng.choice(n, size=width, replace=False) + 1
    while True:
        signs = rng.integers(0, 2, size=width)
        if signs.any():
            break
    return make_clause(int(v) if s else -int(v) for v, s in zip(vs, signs))


def generate_unique_instance(
    n: int, k: int = 3, density: float = 5.0, seed: int = 0, max_attempts: int = 2000
) -> GeneratedInstance:
    """Random k-CNF whose unique satisfying assignment is all-ones."""
    if n < 1 or n > ENUM_CAP:
        raise ValueError(f"n must be in [1, {ENUM_CAP}], got {n}")
    if k < 1:
        raise ValueError("k must be positive")
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, k]))
    width = min(k, n)
    m_total = max(n, int(round(density * n)))
    for attempt in range(1, max_attempts + 1):
        clauses = []
        for x in range(1, n + 1):
            others = [v for v in range(1, n + 1) if v != x]
            comp = rng.choice(others, size=width - 1, replace=False) if width > 1 else []
            clauses.append(make_clause([x, *(-int(v) for v in comp)]))
        for _ in range(m_total - n):
            clauses.append(_random_clause(rng, n, width))
        clauses = list(dict.fromkeys(clauses))
        F = CnfFormula(n, k, tuple(clauses), (f"seed={seed}", f"attempt={attempt}"))
        sols = all_satisfying(F)
        if len(sols) == 1:
            return GeneratedInstance(F, seed, attempt)
    raise RuntimeError(f"no uniquely satisfiable instance within {max_attempts} attempts")
