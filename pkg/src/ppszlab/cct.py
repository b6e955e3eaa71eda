"""Critical clause trees, labeled trees, cut events and label density."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Mapping, Sequence

import numpy as np

from .formula import Clause, CnfFormula, canonical_critical_clause, clause_key, twocc_set
from .numerics import quad
from .ppsz import Estimate

SAFE, UNSAFE, INTERNAL = "safe", "unsafe", "internal"


@dataclass(frozen=True, order=True)
class Fresh:
    """A label that is not a variable of any formula."""

    id: int

    def __repr__(self):
        return f"f{self.id}"


@dataclass
class Node:
    varlabel: Hashable
    depth: int
    parent: int | None
    children: list[int] = field(default_factory=list)
    canonical: bool = False
    leaf_kind: str = INTERNAL
    clauselabel: Clause | None = None


@dataclass
class LabeledTree:
    nodes: list[Node]
    root: int = 0

    def __len__(self):
        return len(self.nodes)

    @property
    def height(self) -> int:
        return max(n.depth for n in self.nodes)

    def labels(self) -> list[Hashable]:
        return list(dict.fromkeys(n.varlabel for n in self.nodes))

    def path_to(self, u: int) -> list[int]:
        out = []
        while u is not None:
            out.append(u)
            u = self.nodes[u].parent
        return out[::-1]

    def is_ancestor(self, u: int, v: int) -> bool:
        while v is not None:
            if v == u:
                return True
            v = self.nodes[v].parent
        return False

    def check_invariants(self, max_children: int | None = None) -> None:
        for i, nd in enumerate(self.nodes):
            labels = [self.nodes[j].varlabel for j in self.path_to(i)]
            if len(set(labels)) != len(labels):
                raise AssertionError(f"label repeated on the path to node {i}")
            if max_children is not None and len(nd.children) > max_children:
                raise AssertionError(f"node {i} has too many children")
            if not nd.canonical:
                for c in nd.children:
                    if self.nodes[c].canonical:
                        raise AssertionError("canonical child of a non-canonical node")

    def to_json(self) -> str:
        return json.dumps(
            [
                {
                    "id": i,
                    "varlabel": str(n.varlabel),
                    "depth": n.depth,
                    "parent": n.parent,
                    "children": n.children,
                    "canonical": n.canonical,
                    "leaf_kind": n.leaf_kind,
                    "clauselabel": list(n.clauselabel) if n.clauselabel is not None else None,
                }
                for i, n in enumerate(self.nodes)
            ]
        )

    def to_dot(self) -> str:
        lines = ["digraph T {"]
        for i, n in enumerate(self.nodes):
            shape = {SAFE: "box", UNSAFE: "diamond", INTERNAL: "ellipse"}[n.leaf_kind]
            clause = "" if n.clauselabel is None else "\\n" + " ".join(map(str, n.clauselabel))
            style = ",style=bold" if n.canonical else ""
            lines.append(f'  n{i} [label="{n.varlabel}{clause}",shape={shape}{style}];')
        for i, n in enumerate(self.nodes):
            for c in n.children:
                lines.append(f"  n{i} -> n{c};")
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass
class CriticalClauseTree(LabeledTree):
    h: int = 0
    x: int = 0


def _violated(c: Clause, flipped: set[int]) -> bool:
    # alpha is all-ones with the flipped variables set to 0
    return all((l > 0) == (abs(l) in flipped) for l in c)


def build_cct(F: CnfFormula, x: int, h: int) -> CriticalClauseTree:
    """Canonical critical clause tree of x truncated at height h.

    Nodes at depth h also record the clause the construction would pick,
    so canonicity is defined for them, but they get no children.
    """
    if h < 0:
        raise ValueError("h must be >= 0")
    ordered = sorted(F.clauses, key=clause_key)
    canon: dict[int, Clause | None] = {}

    def canonical_of(z):
        if z not in canon:
            try:
                canon[z] = canonical_critical_clause(F, z)
            except ValueError:
                canon[z] = None
        return canon[z]

    nodes = [Node(x, 0, None)]
    queue = deque([0])
    while queue:
        u = queue.popleft()
        nd = nodes[u]
        flipped = set()
        p = u
        while p is not None:
            flipped.add(nodes[p].varlabel)
            p = nodes[p].parent
        cc = canonical_of(nd.varlabel)
        if cc is not None and _violated(cc, flipped):
            C = cc
        else:
            C = next((c for c in ordered if _violated(c, flipped)), None)
            if C is None:
                raise ValueError(
                    f"no clause violated at node {u} (label {nd.varlabel}); formula not normalized/unique"
                )
        nd.clauselabel = C
        if nd.depth == h:
            nd.leaf_kind = SAFE
            continue
        for l in C:
            if l < 0:
                nodes.append(Node(-l, nd.depth + 1, u))
                nd.children.append(len(nodes) - 1)
                queue.append(len(nodes) - 1)
        nd.leaf_kind = INTERNAL if nd.children else UNSAFE
    T = CriticalClauseTree(nodes, 0, h=h, x=x)
    _check_cct(T, F)
    return T


def _check_cct(T: CriticalClauseTree, F: CnfFormula) -> None:
    T.check_invariants(max_children=max(F.k - 1, 0))
    for i, nd in enumerate(T.nodes):
        if nd.clauselabel is None:
            raise AssertionError(f"node {i} lacks a clause label")
        anc = {T.nodes[j].varlabel for j in T.path_to(i)}
        for l in nd.clauselabel:
            if l > 0 and l not in anc:
                raise AssertionError(f"positive literal {l} at node {i} is not an ancestor label")
        if nd.depth < T.h:
            kids = sorted(T.nodes[c].varlabel for c in nd.children)
            if kids != sorted(-l for l in nd.clauselabel if l < 0):
                raise AssertionError(f"children of node {i} do not match its clause label")


def mark_canonical(T: CriticalClauseTree, F: CnfFormula, mode: str | None = None) -> CriticalClauseTree:
    """Set canonical flags: every node on the root path has a single critical
    clause (not in TwoCC) and carries it as clause label."""
    if mode is None:
        mode = "ftilde" if F.k == 3 else "plain"
    two = twocc_set(F, mode)
    for nd in T.nodes:  # BFS order: parents first
        z = nd.varlabel
        ok = z not in two
        if ok:
            try:
                ok = nd.clauselabel == canonical_critical_clause(F, z)
            except ValueError:
                ok = False
        if nd.parent is not None:
            ok = ok and T.nodes[nd.parent].canonical
        nd.canonical = ok
    T.check_invariants()
    return T


def to_labeled(T: CriticalClauseTree) -> LabeledTree:
    nodes = [
        Node(n.varlabel, n.depth, n.parent, list(n.children), n.canonical, n.leaf_kind, None) for n in T.nodes
    ]
    return LabeledTree(nodes, T.root)


def complete_tree(k: int, depth: int) -> LabeledTree:
    """Complete (k-1)-ary tree of the given depth with distinct fresh labels."""
    if k < 2 or depth < 0:
        raise ValueError("need k >= 2 and depth >= 0")
    nodes = [Node(Fresh(0), 0, None)]
    frontier = [0]
    for d in range(1, depth + 1):
        nxt = []
        for u in frontier:
            for _ in range(k - 1):
                nodes.append(Node(Fresh(len(nodes)), d, u))
                nodes[u].children.append(len(nodes) - 1)
                nxt.append(len(nodes) - 1)
        frontier = nxt
    for n in nodes:
        n.leaf_kind = INTERNAL if n.children else SAFE
    return LabeledTree(nodes, 0)


def cut_event(T: LabeledTree, pi: Mapping[Hashable, float], r: float, weak: bool = False) -> bool:
    """Does every safe root-to-leaf path contain a dead node?"""

    def dead(u):
        nd = T.nodes[u]
        try:
            v = pi[nd.varlabel]
        except KeyError:
            raise KeyError(f"placement has no value for label {nd.varlabel!r}") from None
        if u == T.root and not weak:
            return False
        return v < r

    def blocked(u):
        if dead(u):
            return True
        nd = T.nodes[u]
        if nd.leaf_kind == SAFE:
            return False
        if nd.leaf_kind == UNSAFE:
            return True
        return all(blocked(c) for c in nd.children)

    return blocked(T.root)


@dataclass
class _Compiled:
    label_index: np.ndarray
    labels: list
    levels: list[np.ndarray]
    starts: list[np.ndarray]  # per level: child-segment starts (level-local) for internal nodes
    internal: list[np.ndarray]  # per level: mask of internal nodes
    safe: list[np.ndarray]


def _compile(T: LabeledTree) -> _Compiled:
    labels = T.labels()
    pos = {l: i for i, l in enumerate(labels)}
    order = sorted(range(len(T.nodes)), key=lambda u: (T.nodes[u].depth, u))
    by_depth: dict[int, list[int]] = {}
    for u in order:
        by_depth.setdefault(T.nodes[u].depth, []).append(u)
    levels, starts, internal, safe = [], [], [], []
    for d in range(max(by_depth) + 1):
        lev = by_depth.get(d, [])
        nxt = by_depth.get(d + 1, [])
        where = {u: i for i, u in enumerate(nxt)}
        st, im = [], []
        for u in lev:
            ch = T.nodes[u].children
            im.append(bool(ch))
            if ch:
                idx = [where[c] for c in ch]
                if idx != list(range(idx[0], idx[0] + len(idx))):
                    raise AssertionError("children not contiguous")
                st.append(idx[0])
        levels.append(np.array(lev, dtype=np.int64))
        starts.append(np.array(st, dtype=np.int64))
        internal.append(np.array(im, dtype=bool))
        safe.append(np.array([T.nodes[u].leaf_kind == SAFE for u in lev], dtype=bool))
    label_index = np.array([pos[n.varlabel] for n in T.nodes], dtype=np.int64)
    return _Compiled(label_index, labels, levels, starts, internal, safe)


def cut_events_batch(T: LabeledTree, pi: np.ndarray, labels: Sequence[Hashable], r, weak: bool = False,
                     compiled: _Compiled | None = None) -> np.ndarray:
    """Vectorised cut_event over rows of a placement matrix (columns = labels)."""
    comp = compiled or _compile(T)
    if list(labels) == comp.labels:
        node_cols = comp.label_index
    else:
        col = {l: i for i, l in enumerate(labels)}
        node_cols = np.array([col[l] for l in comp.labels])[comp.label_index]
    B = pi.shape[0]
    piT = np.ascontiguousarray(pi.T)  # node-major layout keeps the reductions contiguous
    r = np.broadcast_to(np.asarray(r, dtype=pi.dtype), (B,))[None, :]
    below = None
    for d in range(len(comp.levels) - 1, -1, -1):
        lev = comp.levels[d]
        if d == 0 and not weak:
            dead = np.zeros((len(lev), B), dtype=bool)
        else:
            dead = piT[node_cols[lev]] < r
        im = comp.internal[d]
        if im.all() and len(below) % len(lev) == 0 and np.array_equal(
            comp.starts[d], np.arange(len(lev)) * (len(below) // len(lev))
        ):
            allc = below.reshape(len(lev), len(below) // len(lev), B).all(axis=1)
            c = dead | allc
        else:
            c = np.where(comp.safe[d][:, None], dead, True)
            if im.any():
                allc = np.logical_and.reduceat(below, comp.starts[d], axis=0)
                c[im] = dead[im] | allc
        below = c
    return below[0]


def cut_probability_mc(
    T: LabeledTree,
    sampler,
    r: float | str,
    trials: int,
    seed: int,
    weak: bool = False,
    batch: int = 256,
) -> Estimate:
    """Monte Carlo estimate of Pr[Cut_r(T)]; r='root' uses r = pi(root).

    Trials are drawn in fixed blocks of ``batch`` and block b uses the seed
    sequence (seed, b), so results do not depend on scheduling.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    comp = _compile(T)
    labels = comp.labels
    root_col = labels.index(T.nodes[T.root].varlabel)
    hits = 0
    done = 0
    b = 0
    while done < trials:
        size = min(batch, trials - done)
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        pi = sampler.sample_matrix(rng, labels, size)
        rr = pi[:, root_col] if r == "root" else float(r)
        hits += int(cut_events_batch(T, pi, labels, rr, weak, comp).sum())
        done += size
        b += 1
    mean = hits / trials
    se = math.sqrt(max(mean * (1 - mean), 0.0) / max(trials - 1, 1))
    return Estimate(mean, se, trials)


def label_density_weight(d: int, r: float) -> float:
    if not 0 <= r < 0.5:
        return 0.0
    return (1 - 2 * r) ** 2 / (1 - r) ** 3 * r ** (d + 1)


@lru_cache(maxsize=512)
def label_density_weight_integrated(d: int) -> float:
    return quad(lambda r: label_density_weight(d, r), 0.0, 0.5)


def label_density(z: Hashable, T: LabeledTree, r: float | str = "integrated") -> float:
    """Depth-discounted count of canonical nodes labelled z."""
    depths = [n.depth for n in T.nodes if n.canonical and n.varlabel == z]
    if r == "integrated":
        return sum(label_density_weight_integrated(d) for d in depths)
    r = float(r)
    if not 0 <= r < 0.5:
        raise ValueError("pointwise label density needs 0 <= r < 1/2")
    return sum(label_density_weight(d, r) for d in depths)


@dataclass
class SimilarityReport:
    ok: bool
    checked: bool
    labels: list
    matched_path: list[int]
    reason: str = ""


def similarity_check(F: CnfFormula, T_x: CriticalClauseTree, u: int, v: int) -> SimilarityReport:
    """Check that the label sequence from u down to canonical v reappears from the root of T_a."""
    if not T_x.is_ancestor(u, v):
        return SimilarityReport(False, False, [], [], "v is not a descendant of u")
    if not T_x.nodes[v].canonical:
        return SimilarityReport(True, False, [], [], "precondition: v is not canonical")
    path = T_x.path_to(v)
    seq = [T_x.nodes[j].varlabel for j in path[path.index(u):]]
    a = seq[0]
    Ta = mark_canonical(build_cct(F, a, len(seq) - 1), F)
    cur = Ta.root
    matched = [cur]
    for lab in seq[1:]:
        nxt = [c for c in Ta.nodes[cur].children if Ta.nodes[c].varlabel == lab]
        if not nxt:
            return SimilarityReport(False, True, seq, matched, f"no child labelled {lab} in T_{a}")
        cur = nxt[0]
        matched.append(cur)
    if not Ta.nodes[cur].canonical:
        return SimilarityReport(False, True, seq, matched, "matched endpoint is not canonical")
    if Ta.nodes[cur].clauselabel != T_x.nodes[v].clauselabel:
        return SimilarityReport(False, True, seq, matched, "clause labels differ at the endpoint")
    return SimilarityReport(True, True, seq, matched)


def implying_clauses(T: CriticalClauseTree, pi: Mapping[Hashable, float]) -> list[Clause]:
    """Distinct clause labels of internal nodes reachable from the root without
    passing a dead node (dead = placed before the root)."""
    r = pi[T.nodes[T.root].varlabel]
    out: dict[Clause, None] = {}
    stack = [T.root]
    while stack:
        u = stack.pop()
        nd = T.nodes[u]
        if u != T.root and pi[nd.varlabel] < r:
            continue
        if nd.depth < T.h:
            out[nd.clauselabel] = None
            stack.extend(nd.children)
    return list(out)
