import pytest
from hypothesis import given, settings, strategies as st

from ppszlab.formula import CnfFormula, generate_unique_instance, twocc_set
from ppszlab.structure import (
    MAX_COMPONENT_EDGES,
    SibEdge,
    _degrees,
    build_ccg,
    components,
    extract_h,
    h_free,
    heavy_set,
    id_sets,
    low_graphs,
    matching_general_k,
    partition_high_low,
    privileged_set,
    sibling_graph,
    structure_report,
    trim_component,
)

from conftest import unique_instances

# canonical criticals (x y' z'), (y x' z'), (z x' y') plus clauses with two positives for uniqueness
TRIANGLE = CnfFormula.from_clauses(
    3, [(1, -2, -3), (-1, 2, -3), (-1, -2, 3), (1, 2, 3), (1, 2, -3), (1, -2, 3), (-1, 2, 3)]
)


def path_edges(t, start=100):
    return [SibEdge(start + i, i, i + 1) for i in range(t)]


def cycle_edges(t, start=100, offset=0):
    return [SibEdge(start + i, offset + i, offset + (i + 1) % t) for i in range(t)]


class TestGraphs:
    def test_triangle(self):
        ccg = build_ccg(TRIANGLE)
        assert set(ccg.arcs) == {(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)}
        sg = sibling_graph(TRIANGLE, ccg)
        assert sorted(e.ends for e in sg) == [(1, 2), (1, 3), (2, 3)]
        ids = id_sets(ccg)
        assert not ids["ID0"] and not ids["ID1"]
        assert not heavy_set(ccg, 3)

    def test_parallel_edges(self):
        # 1 and 4 both have companions {2, 3}
        F = CnfFormula.from_clauses(4, [(1, -2, -3), (4, -2, -3), (2,), (3,)], k=3)
        sg = sibling_graph(F)
        assert [e.ends for e in sg].count((2, 3)) == 2

    def test_heavy_sink(self):
        F = CnfFormula.from_clauses(5, [(1, -5), (2, -5), (3, -5), (4, -5), (5,)], k=3)
        ccg = build_ccg(F)
        assert ccg.indeg()[5] == 4 and heavy_set(ccg, 3) == {5}

    @given(unique_instances(nmax=12))
    def test_degrees(self, F):
        ccg = build_ccg(F)
        widths = {x: sum(1 for l in ccg.canonical[x] if l < 0) for x in range(1, F.n + 1)}
        assert sum(ccg.indeg().values()) == sum(widths.values()) == len(ccg.arcs)
        assert all(ccg.outdeg()[x] == widths[x] for x in widths)
        sg = sibling_graph(F, ccg)
        deg = _degrees(sg)
        ind = ccg.indeg()
        # with every canonical clause of width 3 the two degree tables coincide
        if all(w == 2 for w in widths.values()):
            assert len(sg) == F.n and all(deg[v] == ind[v] for v in ind)


class TestExtractH:
    def test_3221(self):
        sg = [SibEdge(10, 1, 2), SibEdge(11, 1, 3), SibEdge(12, 1, 4), SibEdge(13, 2, 3)]
        H = extract_h(sg)
        assert len(H) == 3 and max(_degrees(H).values()) <= 2
        assert len(H) >= 4 - 1 - 0

    def test_low_degree_untouched(self):
        sg = path_edges(5)
        assert extract_h(sg) == sg

    @given(unique_instances(nmax=14))
    def test_bound(self, F):
        ccg = build_ccg(F)
        ids = id_sets(ccg)
        H = extract_h(sibling_graph(F, ccg))
        assert all(d <= 2 for d in _degrees(H).values())
        assert len(H) >= F.n - len(ids["ID1"]) - 2 * len(ids["ID0"])


class TestHFree:
    def test_empty_twocc(self):
        H = path_edges(4)
        assert h_free(H, frozenset()) == H

    def test_single_var_removes_at_most_three(self):
        H = cycle_edges(8)
        for v in range(8):
            assert len(H) - len(h_free(H, {v})) <= 3
        assert len(H) - len(h_free(H, {103})) == 1

    @settings(max_examples=30)
    @given(unique_instances(nmax=9))
    def test_bound(self, F):
        H = extract_h(sibling_graph(F))
        two = twocc_set(F)
        assert len(h_free(H, two)) >= len(H) - 3 * len(two)


class TestTrim:
    def test_path_23(self):
        kept, removed = trim_component(path_edges(23))
        assert len(kept) == 22 and len(removed) == 1

    def test_cycle_23(self):
        comp = components(cycle_edges(23))
        assert len(comp) == 1
        kept, removed = trim_component(comp[0])
        assert len(removed) == 1 and len(kept) == 22
        assert all(len(c) <= MAX_COMPONENT_EDGES for c in components(kept))

    @pytest.mark.parametrize("t", [1, 22, 23, 46, 47, 100])
    def test_retention(self, t):
        for edges in (path_edges(t), cycle_edges(t) if t >= 3 else path_edges(t)):
            comp = components(edges)[0]
            kept, removed = trim_component(comp)
            assert len(kept) + len(removed) == t
            assert 12 * len(kept) >= 11 * t
            assert all(len(c) <= MAX_COMPONENT_EDGES for c in components(kept))

    def test_components_are_walks(self):
        comps = components(path_edges(5) + cycle_edges(4, start=200, offset=20) + [SibEdge(300, 50, 51)])
        assert sorted(len(c) for c in comps) == [1, 4, 5]


class TestPartition:
    def test_thr_inf(self):
        F = generate_unique_instance(10, 3, seed=1).formula
        H = extract_h(sibling_graph(F))
        part = partition_high_low(H, F, float("inf"), height=3)
        assert not part.H_high and not part.H_rest
        kept = []
        for c in components(part.H_free):
            kept.extend(trim_component(c)[0])
        assert sorted(kept, key=lambda e: e.parent) == sorted(part.H_low, key=lambda e: e.parent)

    @settings(max_examples=25)
    @given(unique_instances(nmax=11))
    def test_invariants(self, F):
        H = extract_h(sibling_graph(F))
        part = partition_high_low(H, F, height=3)
        assert part.bound_holds()
        hp = set(part.H_free) - set(part.H_high) - set(part.H_rest)
        assert set(part.H_low) <= hp
        assert not (set(part.H_high) & set(part.H_rest))
        assert all(len(c) <= MAX_COMPONENT_EDGES for c in part.components)


def test_low_graphs_merge_parallel():
    H = [SibEdge(10, 1, 2), SibEdge(11, 1, 2), SibEdge(12, 3, 4)]
    F = CnfFormula.from_clauses(4, [(1,), (2,), (3,), (4,)], k=3)
    part = partition_high_low(H, F, float("inf"), twocc=frozenset())
    graphs = sorted(low_graphs(part), key=lambda g: g.vertices)
    assert [g.edges for g in graphs] == [((1, 2),), ((3, 4),)]


class TestPrivileged:
    def test_two_criticals(self):
        F = CnfFormula.from_clauses(3, [(1, -2), (1, -3), (2,), (3,)], k=3)
        assert 1 in privileged_set(F)

    def test_short_depth2(self):
        # the depth-1 node for 2 carries a unit critical, so depth 2 has < 4 nodes
        F = CnfFormula.from_clauses(5, [(1, -2, -3), (2,), (3, -4, -5), (4,), (5,)], k=3)
        assert 1 in privileged_set(F)


class TestMatching:
    def test_disjoint(self):
        F = CnfFormula.from_clauses(
            6, [(1, -2, -3), (4, -5, -6), (2,), (3,), (5,), (6,)], k=3
        )
        res = matching_general_k(F, 3, privileged=frozenset())
        assert res.M == [(2, 3), (5, 6)] or (2, 3) in res.M
        assert len(res.G) >= 2

    def test_chain_sharing(self):
        F = CnfFormula.from_clauses(5, [(1, -2, -3), (2, -3, -4), (3, -4, -5), (4, -5), (5,)], k=3)
        res = matching_general_k(F, 3)
        vs = [abs(l) for C in res.G for l in C]
        assert len(vs) == len(set(vs))
        assert len(res.M) >= res.bound

    @settings(max_examples=25)
    @given(unique_instances(nmax=12))
    def test_pairs(self, F):
        res = matching_general_k(F, 3)
        flat = [v for p in res.M for v in p]
        assert len(flat) == len(set(flat))
        ccg = build_ccg(F)
        for y, z in res.M:
            assert any({-y, -z} <= set(C) for C in ccg.canonical.values())


def test_report_checks():
    rep = structure_report(generate_unique_instance(9, 3, seed=3).formula, height=3)
    assert all(rep.checks.values()) and rep.n == 9
