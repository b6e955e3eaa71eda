"""Critical clause graph, sibling graph and the edge sets built on it."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .cct import build_cct, label_density, mark_canonical
from .formula import Clause, CnfFormula, canonical_critical_clause, clause_key, critical_clauses, twocc_set

THR_DEFAULT = 1 / 4678
MAX_COMPONENT_EDGES = 22


@dataclass(frozen=True)
class CriticalClauseGraph:
    n: int
    k: int
    arcs: tuple[tuple[int, int], ...]
    canonical: dict = field(compare=False, hash=False)

    def indeg(self) -> dict[int, int]:
        d = {v: 0 for v in range(1, self.n + 1)}
        for _, y in self.arcs:
            d[y] += 1
        return d

    def outdeg(self) -> dict[int, int]:
        d = {v: 0 for v in range(1, self.n + 1)}
        for x, _ in self.arcs:
            d[x] += 1
        return d


@dataclass(frozen=True)
class SibEdge:
    """Edge {y, z} contributed by the canonical critical clause of ``parent``."""

    parent: int
    y: int
    z: int

    @property
    def ends(self) -> tuple[int, int]:
        return (self.y, self.z)

    def other(self, v: int) -> int:
        return self.z if v == self.y else self.y


def build_ccg(F: CnfFormula) -> CriticalClauseGraph:
    arcs = []
    canon = {}
    for x in range(1, F.n + 1):
        C = canonical_critical_clause(F, x)
        canon[x] = C
        arcs.extend((x, -l) for l in C if l < 0)
    return CriticalClauseGraph(F.n, F.k, tuple(arcs), canon)


def sibling_graph(F: CnfFormula, ccg: CriticalClauseGraph | None = None) -> list[SibEdge]:
    """One edge per variable whose canonical critical clause has exactly two negative literals."""
    ccg = ccg or build_ccg(F)
    edges = []
    for x in range(1, F.n + 1):
        neg = sorted(-l for l in ccg.canonical[x] if l < 0)
        if len(neg) == 2:
            edges.append(SibEdge(x, neg[0], neg[1]))
    return edges


def heavy_set(ccg: CriticalClauseGraph, kprime: int) -> frozenset[int]:
    return frozenset(v for v, d in ccg.indeg().items() if d >= kprime)


def indeg_of(ccg: CriticalClauseGraph, S) -> int:
    ind = ccg.indeg()
    return sum(ind[v] for v in S)


def id_sets(ccg: CriticalClauseGraph) -> dict[str, frozenset[int]]:
    ind = ccg.indeg()
    id0 = frozenset(v for v, d in ind.items() if d == 0)
    id1 = frozenset(v for v, d in ind.items() if d == 1)
    return {"ID0": id0, "ID1": id1, "ID01": id0 | id1}


def _degrees(edges) -> Counter:
    deg = Counter()
    for e in edges:
        deg[e.y] += 1
        deg[e.z] += 1
    return deg


def extract_h(sg: list[SibEdge]) -> list[SibEdge]:
    """Subgraph of maximum degree 2: at each vertex of degree d >= 3 mark d - 2 incident edges."""
    deg = _degrees(sg)
    mult = Counter(e.ends for e in sg)
    incident = defaultdict(list)
    for e in sg:
        incident[e.y].append(e)
        incident[e.z].append(e)
    marked = set()
    for v in sorted(deg):
        if deg[v] >= 3:
            # multi-edges last, then lexicographic by endpoints and parent
            cands = sorted(incident[v], key=lambda e: (mult[e.ends], e.ends, e.parent))
            marked.update(cands[: deg[v] - 2])
    return [e for e in sg if e not in marked]


def h_free(H: list[SibEdge], twocc) -> list[SibEdge]:
    return [e for e in H if e.parent not in twocc and e.y not in twocc and e.z not in twocc]


def components(edges: list[SibEdge]) -> list[list[SibEdge]]:
    """Connected components, each ordered as a walk along the path or cycle."""
    incident = defaultdict(list)
    for e in edges:
        incident[e.y].append(e)
        incident[e.z].append(e)
    seen: set[SibEdge] = set()
    out = []
    # start paths at degree-1 vertices so the walk covers them in order
    starts = sorted(v for v in incident if len(incident[v]) == 1) + sorted(incident)
    for s in starts:
        for e0 in incident[s]:
            if e0 in seen:
                continue
            walk = []
            v, e = s, e0
            while e is not None and e not in seen:
                seen.add(e)
                walk.append(e)
                v = e.other(v)
                e = next((f for f in incident[v] if f not in seen), None)
            out.append(walk)
    return out


def _is_cycle(comp: list[SibEdge]) -> bool:
    deg = _degrees(comp)
    return all(d == 2 for d in deg.values())


def trim_component(comp: list[SibEdge], limit: int = MAX_COMPONENT_EDGES) -> tuple[list[SibEdge], list[SibEdge]]:
    """Keep at most ``limit`` edges per piece: a cycle loses its first edge,
    then edges numbered limit+1, 2(limit+1), ... along the path are removed."""
    if len(comp) <= limit:
        return list(comp), []
    removed = []
    path = list(comp)
    if _is_cycle(comp):
        removed.append(path[0])
        path = path[1:]
    kept = []
    for i, e in enumerate(path, 1):
        (removed if i % (limit + 1) == 0 else kept).append(e)
    return kept, removed


@dataclass
class HPartition:
    H: list[SibEdge]
    H_free: list[SibEdge]
    H_high: list[SibEdge]
    H_rest: list[SibEdge]
    H_low: list[SibEdge]
    components: list[list[SibEdge]]
    twocc: frozenset[int]
    densities: dict = field(default_factory=dict)

    def bound_holds(self) -> bool:
        return 12 * len(self.H_low) + 22 * len(self.H_high) + 33 * len(self.twocc) >= 11 * len(self.H)


def partition_high_low(
    H: list[SibEdge],
    F: CnfFormula,
    thr: float = THR_DEFAULT,
    twocc=None,
    height: int = 6,
) -> HPartition:
    """Split H_free into high-density, rest and low-density parts, trimming
    low-density components to at most 22 edges."""
    if twocc is None:
        twocc = twocc_set(F, "ftilde" if F.k == 3 else "plain")
    hf = h_free(H, twocc)
    trees = {}

    def tree(v):
        if v not in trees:
            trees[v] = mark_canonical(build_cct(F, v, height), F)
        return trees[v]

    dens = {}
    high, high_z = [], []
    for e in hf:
        if thr == float("inf"):
            break
        for y, z in ((e.y, e.z), (e.z, e.y)):
            dens[(z, y)] = label_density(z, tree(y))
        hit = [(y, z) for y, z in ((e.y, e.z), (e.z, e.y)) if dens[(z, y)] >= thr]
        if hit:
            high.append(e)
            high_z.append(hit[0][1])
    high_set = set(high)
    rest = []
    for e, z in zip(high, high_z):
        for f in hf:
            if f is not e and f not in high_set and f not in rest and z in f.ends:
                rest.append(f)
    rest_set = set(rest)
    hprime = [e for e in hf if e not in high_set and e not in rest_set]
    low, comps = [], []
    for comp in components(hprime):
        kept, _ = trim_component(comp)
        low.extend(kept)
        comps.extend(c for c in components(kept))
    part = HPartition(H, hf, high, rest, low, comps, frozenset(twocc), dens)
    if not part.bound_holds():
        raise AssertionError("(12/11)|H_low| + 2|H_high| + 3|TwoCC| >= |H| violated")
    return part


def low_graphs(part: HPartition) -> list:
    """Simple graphs of the H_low components, parallel edges merged, for D^G sampling."""
    from .dist import GraphShape

    out = []
    for comp in part.components:
        seen, edges, verts = set(), [], []
        for e in comp:
            for v in e.ends:
                if v not in verts:
                    verts.append(v)
            key = frozenset(e.ends)
            if key not in seen:
                seen.add(key)
                edges.append(e.ends)
        out.append(GraphShape(tuple(verts), tuple(edges)))
    return out


def privileged_set(F: CnfFormula) -> frozenset[int]:
    """Two critical clauses, a label at depth 1 and 2 of T_x, or fewer than (k-1)^2 nodes at depth 2."""
    out = set()
    for x in range(1, F.n + 1):
        if len(critical_clauses(F, x)) >= 2:
            out.add(x)
            continue
        T = build_cct(F, x, 2)
        d1 = {n.varlabel for n in T.nodes if n.depth == 1}
        d2 = [n.varlabel for n in T.nodes if n.depth == 2]
        if d1 & set(d2) or len(d2) < (F.k - 1) ** 2:
            out.add(x)
    return frozenset(out)


@dataclass
class MatchingResult:
    G: list[Clause]
    M_prime: list[tuple[int, int]]
    M: list[tuple[int, int]]
    parent_m: frozenset[int]
    bound: float


def matching_general_k(F: CnfFormula, kprime: int, privileged=None) -> MatchingResult:
    """Greedy variable-disjoint canonical critical clauses and the derived pair set."""
    ccg = build_ccg(F)
    heavy = heavy_set(ccg, kprime)
    if privileged is None:
        privileged = privileged_set(F)
    G, used = [], set()
    for C in sorted(set(ccg.canonical.values()), key=clause_key):
        vs = {abs(l) for l in C}
        if vs & used:
            continue
        G.append(C)
        used |= vs
    M_prime = []
    for C in G:
        neg = sorted(-l for l in C if l < 0)
        if len(neg) >= 2:
            M_prime.append((neg[0], neg[1]))
    parents = defaultdict(set)
    for x, C in ccg.canonical.items():
        negs = {-l for l in C if l < 0}
        for p in M_prime:
            if set(p) <= negs:
                parents[p].add(x)
    M = [p for p in M_prime if not ({*p} | parents[p]) & set(privileged)]
    parent_m = frozenset(x for p in M for x in parents[p])
    bound = (F.n - indeg_of(ccg, heavy)) / (F.k * kprime) - 2 * len(privileged)
    if len(M) < bound - 1e-12:
        raise AssertionError(f"|M| = {len(M)} below the guaranteed {bound}")
    return MatchingResult(G, M_prime, M, parent_m, bound)


@dataclass
class StructureReport:
    n: int
    indeg_histogram: dict[int, int]
    heavy: int
    id0: int
    id1: int
    twocc: int
    H: int
    H_free: int
    H_high: int
    H_rest: int
    H_low: int
    M: int
    M_bound: float
    components: list[int]
    checks: dict[str, bool]


def structure_report(F: CnfFormula, kprime: int = 3, thr: float = THR_DEFAULT, height: int = 6) -> StructureReport:
    ccg = build_ccg(F)
    ids = id_sets(ccg)
    sg = sibling_graph(F, ccg)
    H = extract_h(sg)
    two = twocc_set(F, "ftilde" if F.k == 3 else "plain")
    part = partition_high_low(H, F, thr, two, height)
    mres = matching_general_k(F, kprime)
    hist = Counter(ccg.indeg().values())
    checks = {
        "H_max_degree_2": all(d <= 2 for d in _degrees(H).values()),
        "H_size": len(H) >= F.n - len(ids["ID1"]) - 2 * len(ids["ID0"]),
        "H_free_size": len(part.H_free) >= len(H) - 3 * len(two),
        "H_partition": part.bound_holds(),
        "H_low_components": all(len(c) <= MAX_COMPONENT_EDGES for c in part.components),
        "M_size": len(mres.M) >= mres.bound - 1e-12,
    }
    return StructureReport(
        F.n,
        dict(sorted(hist.items())),
        len(heavy_set(ccg, kprime)),
        len(ids["ID0"]),
        len(ids["ID1"]),
        len(two),
        len(H),
        len(part.H_free),
        len(part.H_high),
        len(part.H_rest),
        len(part.H_low),
        len(mres.M),
        mres.bound,
        [len(c) for c in part.components],
        checks,
    )
