import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppszlab.cct import (
    INTERNAL,
    SAFE,
    UNSAFE,
    Fresh,
    LabeledTree,
    Node,
    build_cct,
    complete_tree,
    cut_event,
    cut_events_batch,
    cut_probability_mc,
    implying_clauses,
    label_density,
    label_density_weight,
    mark_canonical,
    similarity_check,
    to_labeled,
)
from ppszlab.dist import UniformSampler
from ppszlab.formula import CnfFormula, generate_unique_instance
from ppszlab.gw import q
from ppszlab.implication import subset_implies
from ppszlab.ppsz import forced, permutation_from_placement

from conftest import unique_instances

# unique solution all-ones: x=1, y=2, z=3
F3 = CnfFormula.from_clauses(3, [(1, -2, -3), (2, -3), (3,)])


def star(values):
    """Root 'r' with safe-leaf children labelled 'a', 'b', ..."""
    nodes = [Node("r", 0, None)]
    for i, _ in enumerate(values):
        nodes.append(Node("ab"[i], 1, 0, leaf_kind=SAFE))
        nodes[0].children.append(i + 1)
    return LabeledTree(nodes)


class TestBuild:
    def test_trace(self):
        T = build_cct(F3, 1, 2)
        root = T.nodes[0]
        assert root.varlabel == 1 and root.clauselabel == (1, -2, -3)
        kids = {T.nodes[c].varlabel: T.nodes[c] for c in root.children}
        assert set(kids) == {2, 3}
        assert kids[2].clauselabel == (2, -3) and [T.nodes[c].varlabel for c in kids[2].children] == [3]
        assert kids[3].clauselabel == (3,) and kids[3].children == [] and kids[3].leaf_kind == UNSAFE
        assert T.nodes[kids[2].children[0]].leaf_kind == SAFE

    def test_h0(self):
        T = build_cct(F3, 1, 0)
        assert len(T) == 1 and T.nodes[0].children == [] and T.nodes[0].leaf_kind == SAFE

    def test_not_normalized(self):
        with pytest.raises(ValueError):
            build_cct(CnfFormula.from_clauses(2, [(1, -2)]), 2, 1)

    def test_deterministic(self, corpus):
        for F in corpus[:4]:
            assert build_cct(F, 1, 3).to_json() == build_cct(F, 1, 3).to_json()

    @given(unique_instances(nmax=9), st.data())
    def test_invariants(self, F, data):
        x = data.draw(st.integers(1, F.n))
        T = mark_canonical(build_cct(F, x, data.draw(st.integers(0, 4))), F)
        T.check_invariants(max_children=2)
        for i, nd in enumerate(T.nodes):
            labels = [T.nodes[j].varlabel for j in T.path_to(i)]
            assert len(labels) == len(set(labels))
            if nd.canonical and nd.parent is not None:
                assert T.nodes[nd.parent].canonical


class TestCanonical:
    def test_all_canonical(self):
        F = CnfFormula.from_clauses(3, [(1, -2), (2, -3), (3,)], k=3)
        T = mark_canonical(build_cct(F, 1, 3), F)
        assert all(n.canonical for n in T.nodes)

    def test_root_in_twocc(self):
        F = CnfFormula.from_clauses(3, [(1, -2), (1, -3), (2,), (3,)], k=3)
        T = mark_canonical(build_cct(F, 1, 2), F)
        assert not any(n.canonical for n in T.nodes)

    def test_noncritical_label_subtree(self):
        # at the y node (x, y flipped) the canonical (-1 2) of y is satisfied, so the
        # first violated clause (1 2 -3) with two positive literals is used instead.
        # Plain mode: in F-tilde that clause would resolve into a second critical of x.
        F = CnfFormula.from_clauses(4, [(1, -2, -4), (-1, 2), (1, 2, -3), (3,), (4,)], k=3)
        T = mark_canonical(build_cct(F, 1, 2), F, mode="plain")
        kids = {T.nodes[c].varlabel: T.nodes[c] for c in T.nodes[0].children}
        assert T.nodes[0].canonical
        assert kids[2].clauselabel == (1, 2, -3) and not kids[2].canonical
        assert all(not T.nodes[c].canonical for c in kids[2].children)
        assert kids[4].canonical

class TestLabeled:
    def test_to_labeled(self):
        T = to_labeled(build_cct(F3, 1, 2))
        kinds = {(n.varlabel, n.depth): n.leaf_kind for n in T.nodes}
        assert kinds[(3, 2)] == SAFE and kinds[(3, 1)] == UNSAFE and kinds[(1, 0)] == INTERNAL
        assert all(n.clauselabel is None for n in T.nodes)

    @pytest.mark.parametrize("k,t,size", [(3, 1, 3), (3, 3, 15), (5, 2, 21)])
    def test_complete_tree(self, k, t, size):
        T = complete_tree(k, t)
        assert len(T) == size and len(T.labels()) == size
        assert all(isinstance(l, Fresh) for l in T.labels())
        assert all(n.leaf_kind == SAFE for n in T.nodes if n.depth == t)


class TestCut:
    def test_vacuous(self):
        T = LabeledTree([Node("r", 0, None, leaf_kind=UNSAFE)])
        assert cut_event(T, {"r": 0.9}, 0.5)

    def test_examples(self):
        T = star([0, 0])
        assert cut_event(T, {"r": 0.9, "a": 0.3, "b": 0.5}, 0.6)
        assert not cut_event(T, {"r": 0.9, "a": 0.3, "b": 0.7}, 0.6)
        assert cut_event(T, {"r": 0.1, "a": 0.3, "b": 0.7}, 0.6, weak=True)

    def test_missing_label(self):
        with pytest.raises(KeyError):
            cut_event(star([0]), {"r": 0.1}, 0.5)

    @given(st.integers(2, 4), st.integers(1, 4), st.integers(0, 2**32 - 1), st.floats(0, 1))
    def test_batch_matches_scalar_and_monotone(self, k, t, seed, r):
        T = complete_tree(k, t)
        labels = T.labels()
        rng = np.random.default_rng(seed)
        pi = rng.random((8, len(labels)))
        batch = cut_events_batch(T, pi, labels, r)
        for row, b in zip(pi, batch):
            d = dict(zip(labels, row))
            assert cut_event(T, d, r) == b
            if b:
                j = rng.integers(len(labels))
                d[labels[j]] = d[labels[j]] * rng.random()
                assert cut_event(T, d, r)

    def test_mc_quarter(self):
        est = cut_probability_mc(complete_tree(3, 12), UniformSampler(), 0.25, 20_000, seed=1)
        assert abs(est.mean - 1 / 9) <= 3 * est.stderr + 0.002

    def test_mc_r0(self):
        assert cut_probability_mc(complete_tree(3, 5), UniformSampler(), 0.0, 500, seed=0).mean == 0

    def test_mc_above_half(self):
        est = cut_probability_mc(complete_tree(3, 14), UniformSampler(np.float32), 0.7, 2000, seed=0)
        assert est.mean > 0.98

    def test_mc_root_relative(self):
        est = cut_probability_mc(complete_tree(3, 10), UniformSampler(), "root", 20_000, seed=4)
        # average of Q_r over a uniform root value, truncated tree is slightly above s_3
        assert abs(est.mean - 0.6137056) < 0.03

    def test_mc_batch_invariance(self):
        T = complete_tree(3, 6)
        a = cut_probability_mc(T, UniformSampler(), 0.3, 1000, seed=8, batch=256)
        b = cut_probability_mc(T, UniformSampler(), 0.3, 1000, seed=8, batch=256)
        assert a == b


class TestCutImpliesForced:
    @settings(max_examples=60)
    @given(unique_instances(nmax=9), st.integers(0, 2**32 - 1), st.integers(1, 2))
    def test_cut_implies_forced(self, F, seed, h):
        w = 4 if h == 1 else 8
        rng = np.random.default_rng(seed)
        x = int(rng.integers(1, F.n + 1))
        T = build_cct(F, x, h)
        for _ in range(20):
            pi = dict(zip(range(1, F.n + 1), rng.random(F.n)))
            if cut_event(T, pi, pi[x]):
                G = implying_clauses(T, pi)
                assert len(G) <= (2 ** (h + 1) - 1)
                order = permutation_from_placement(pi, range(1, F.n + 1))
                before = {v: 1 for v in order[: order.index(x)]}
                from ppszlab.formula import restrict_clauses

                assert subset_implies(restrict_clauses(G, before), x, 1)
                if h == 1:
                    assert forced(F, order, w, x)


class TestLabelDensity:
    def test_absent(self):
        T = mark_canonical(build_cct(F3, 1, 2), F3)
        assert label_density(99, T) == 0

    def test_single_depth1(self):
        assert label_density_weight(1, 0.25) == pytest.approx(float(Fraction(1, 27)), rel=1e-14)

    def test_pointwise_and_linearity(self):
        F = CnfFormula.from_clauses(3, [(1, -2), (2, -3), (3,)], k=3)
        T = mark_canonical(build_cct(F, 1, 3), F)
        assert label_density(2, T, 0.25) == pytest.approx(1 / 27)
        nodes = [Node(1, 0, None, [1, 2], True), Node(2, 1, 0, canonical=True), Node(3, 1, 0, canonical=True)]
        nodes[2].varlabel = 2
        T2 = LabeledTree(nodes)
        assert label_density(2, T2, 0.25) == pytest.approx(2 / 27)
        assert label_density(2, T2) == pytest.approx(2 * label_density(2, T))

    def test_range(self):
        T = mark_canonical(build_cct(F3, 1, 2), F3)
        with pytest.raises(ValueError):
            label_density(2, T, 0.6)


class TestSimilarity:
    def test_trivial(self):
        T = mark_canonical(build_cct(F3, 1, 2), F3)
        assert similarity_check(F3, T, 0, 0).ok

    def test_corpus(self):
        for s in range(6):
            F = generate_unique_instance(10, 3, seed=s).formula
            for x in range(1, F.n + 1):
                T = mark_canonical(build_cct(F, x, 3), F)
                for u, v in itertools.product(range(len(T)), repeat=2):
                    if T.nodes[v].canonical and T.is_ancestor(u, v):
                        rep = similarity_check(F, T, u, v)
                        assert rep.ok and rep.checked, rep.reason

    def test_noncanonical_precondition(self):
        F = CnfFormula.from_clauses(3, [(1, -2), (1, -3), (2,), (3,)], k=3)
        T = mark_canonical(build_cct(F, 1, 2), F)
        rep = similarity_check(F, T, 0, 0)
        assert rep.ok and not rep.checked
