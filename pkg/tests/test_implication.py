import itertools

import pytest
from hypothesis import given, settings, strategies as st

from ppszlab.formula import CnfFormula, restrict
from ppszlab.implication import subset_implies, w_implies

from conftest import formulas, unique_instances

CHAIN = CnfFormula.from_clauses(3, [(1, -2, -3), (2,), (3,)])


def brute_w_implies(clauses, w, x, b):
    # independent oracle: every subset of size <= w, semantic check by truth table
    for s in range(1, w + 1):
        for G in itertools.combinations(clauses, s):
            vs = sorted({abs(l) for c in G for l in c} | {x})
            ok = True
            for bits in itertools.product((0, 1), repeat=len(vs)):
                val = dict(zip(vs, bits))
                if all(any((val[abs(l)] == 1) == (l > 0) for l in c) for c in G) and val[x] != b:
                    ok = False
                    break
            if ok:
                return True
    return False


class TestSubsetImplies:
    def test_examples(self):
        assert subset_implies([(1,)], 1, 1)
        assert subset_implies(CHAIN.clauses, 1, 1)
        assert not subset_implies([(1, -2, -3), (2,)], 1, 1)

    def test_witness_for_non_implication(self):
        F = CnfFormula.from_clauses(3, [(1, -2, -3), (2,)])
        assert F.evaluate((0, 1, 0))

    def test_unsat_implies_everything(self):
        assert subset_implies([(2,), (-2,)], 1, 0) and subset_implies([(2,), (-2,)], 1, 1)

    def test_cap(self):
        with pytest.raises(ValueError):
            subset_implies([tuple(range(1, 22))], 1, 1)


class TestWImplies:
    def test_unit(self):
        assert w_implies(CnfFormula.from_clauses(1, [(1,)]), 1, 1, 1)

    @pytest.mark.parametrize("method", ["guided", "connected", "exhaustive"])
    def test_chain(self, method):
        assert w_implies(CHAIN, 3, 1, 1, method=method)
        assert not w_implies(CHAIN, 2, 1, 1, method=method)

    @pytest.mark.parametrize("b", [0, 1])
    def test_ex_falso(self, b):
        F = CnfFormula.from_clauses(3, [(1, -2, -3), (2,), (-2,)])
        assert w_implies(F, 2, 3, b)

    def test_errors(self):
        with pytest.raises(ValueError):
            w_implies(CHAIN, 0, 1, 1)
        with pytest.raises(ValueError):
            w_implies(CHAIN, 5, 1, 1)
        with pytest.raises(ValueError):
            w_implies(CHAIN, 2, 1, 1, method="magic")

    @settings(max_examples=300)
    @given(formulas(nmax=6, mmax=8), st.integers(1, 3), st.data())
    def test_methods_agree_with_brute_force(self, F, w, data):
        x = data.draw(st.integers(1, F.n))
        b = data.draw(st.integers(0, 1))
        want = brute_w_implies(F.clauses, w, x, b)
        for method in ("guided", "connected", "exhaustive"):
            assert w_implies(F, w, x, b, method=method) == want

    @given(formulas(nmax=6, mmax=8), st.data())
    def test_monotone_in_w(self, F, data):
        x = data.draw(st.integers(1, F.n))
        vals = [w_implies(F, w, x, 1) for w in (1, 2, 3, 4)]
        assert vals == sorted(vals)

    @given(unique_instances(nmax=9), st.data())
    def test_monotone_under_restriction(self, F, data):
        x = data.draw(st.integers(1, F.n))
        others = [v for v in range(1, F.n + 1) if v != x]
        A2 = set(data.draw(st.lists(st.sampled_from(others), unique=True))) if others else set()
        A1 = {v for v in A2 if data.draw(st.booleans())}
        w = data.draw(st.integers(1, 3))
        if w_implies(restrict(F, {v: 1 for v in A1}), w, x, 1):
            assert w_implies(restrict(F, {v: 1 for v in A2}), w, x, 1)
