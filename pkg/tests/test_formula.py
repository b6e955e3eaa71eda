import itertools

import pytest
from hypothesis import given, strategies as st

from ppszlab.formula import (
    CnfFormula,
    all_satisfying,
    canonical_critical_clause,
    critical_clauses,
    restrict,
    f_tilde,
    generate_unique_instance,
    make_clause,
    normalize_all_ones,
    parse_dimacs,
    twocc_set,
    write_dimacs,
)

from conftest import formulas

F_XYZ = CnfFormula.from_clauses(3, [(1, -2, -3), (-1, 2), (3,)])


class TestDimacs:
    def test_smallest(self):
        F = parse_dimacs(b"p cnf 1 1\n1 0")
        assert (F.n, F.k, F.clauses) == (1, 1, ((1,),))

    def test_direct_encoding(self):
        assert parse_dimacs("p cnf 3 1\n1 -2 -3 0").clauses == ((1, -2, -3),)

    @pytest.mark.parametrize(
        "text",
        ["p cnf 2 1\n1 -1 0", "p cnf 2 1\n1 1 0", "p cnf 2 1\n3 0", "p cnf 2 1\n1 2", "p dnf 2 1\n1 0", "1 0", "p cnf x 1\n"],
    )
    def test_errors(self, text):
        with pytest.raises(ValueError):
            parse_dimacs(text)

    def test_comments_roundtrip(self):
        F = parse_dimacs("c hello\np cnf 3 2\n1 -2 0\n3 0\n")
        text = write_dimacs(F, ["extra"])
        G = parse_dimacs(text)
        assert G.clauses == F.clauses and G.comments == ("hello", "extra")

    @given(formulas())
    def test_roundtrip_property(self, F):
        G = parse_dimacs(write_dimacs(F))
        assert G.clauses == F.clauses and G.n == F.n


class TestRestrict:
    def test_examples(self):
        F = CnfFormula.from_clauses(2, [(1, -2)])
        assert restrict(F, {2: 1}).clauses == ((1,),)
        assert restrict(F, {2: 0}).clauses == ()
        G = CnfFormula.from_clauses(2, [(1, -2), (2,)])
        assert G.__class__ is CnfFormula and restrict(G, {1: 0, 2: 0}).has_empty_clause()

    @given(formulas(nmax=5), st.data())
    def test_restrict_then_evaluate(self, F, data):
        dom = data.draw(st.lists(st.integers(1, F.n), unique=True))
        rho = {v: data.draw(st.integers(0, 1)) for v in dom}
        R = restrict(F, rho)
        for bits in itertools.product((0, 1), repeat=F.n):
            combined = tuple(rho.get(i + 1, b) for i, b in enumerate(bits))
            assert R.evaluate(combined) == F.evaluate(combined)


class TestEnumeration:
    def test_examples(self):
        assert all_satisfying(CnfFormula.from_clauses(1, [(1,)])) == [(1,)]
        assert len(all_satisfying(CnfFormula(2, 3, ()))) == 4
        assert all_satisfying(CnfFormula.from_clauses(1, [(1,), (-1,)])) == []

    def test_ascending_order(self):
        sols = all_satisfying(CnfFormula(3, 3, ()))
        assert sols == sorted(sols)

    def test_cap(self):
        with pytest.raises(ValueError):
            all_satisfying(CnfFormula(25, 3, ()))

    @given(formulas(nmax=5))
    def test_matches_naive(self, F):
        naive = [b for b in itertools.product((0, 1), repeat=F.n) if F.evaluate(b)]
        assert all_satisfying(F) == naive


class TestNormalize:
    def test_flip(self):
        F = CnfFormula.from_clauses(2, [(-1,), (2,)])
        G = normalize_all_ones(F)
        assert all_satisfying(G) == [(1, 1)] and G.clauses == ((1,), (2,))

    def test_identity(self):
        F = CnfFormula.from_clauses(2, [(1,), (2, -1)])
        assert normalize_all_ones(F).clauses == F.clauses

    def test_two_solutions(self):
        with pytest.raises(ValueError):
            normalize_all_ones(CnfFormula.from_clauses(2, [(1,)]))


class TestCritical:
    def test_examples(self):
        assert critical_clauses(F_XYZ, 1) == [(1, -2, -3)]
        assert critical_clauses(F_XYZ, 3) == [(3,)]
        G = CnfFormula.from_clauses(3, [(1, -2), (1, -3), (2,), (3,)])
        assert len(critical_clauses(G, 1)) == 2

    def test_canonical_lexicographic(self):
        G = CnfFormula.from_clauses(4, [(1, -2, -4), (1, -2, -3)])
        assert canonical_critical_clause(G, 1) == (1, -2, -3)
        G = CnfFormula.from_clauses(5, [(1, -5), (1, -2)])
        assert canonical_critical_clause(G, 1) == (1, -2)

    def test_corpus_has_criticals(self, corpus):
        for F in corpus:
            for x in range(1, F.n + 1):
                assert critical_clauses(F, x)
                assert canonical_critical_clause(F, x) == canonical_critical_clause(F, x)


class TestFTilde:
    def test_resolvent_added(self):
        # x=1, y=2, z=3, a=4
        F = CnfFormula.from_clauses(4, [(1, -2, -3), (4, -1, -2)], k=3)
        assert make_clause([4, -2, -3]) in f_tilde(F).clauses

    def test_no_pair(self):
        F = CnfFormula.from_clauses(6, [(1, 2, 3), (4, 5, 6)], k=3)
        assert f_tilde(F).clauses == F.clauses

    def test_k_not_3(self):
        with pytest.raises(ValueError):
            f_tilde(CnfFormula.from_clauses(4, [(1, 2, 3, 4)]))

    @given(formulas(nmax=5, mmax=5))
    def test_added_clauses_are_implied_by_a_pair(self, F):
        threes = [c for c in F.clauses if len(c) == 3]
        added = f_tilde(F).clauses[len(F.clauses):]
        for c in added:
            assert len(c) == 3
            assert any(_pair_implies(a, b, c) for a, b in itertools.combinations(threes, 2))

    def test_twocc_modes(self):
        F = CnfFormula.from_clauses(5, [(1, -2, -3), (1, -4, -5), (2,), (3,), (4,), (5,)], k=3)
        assert 1 in twocc_set(F, "plain") and 1 in twocc_set(F)
        # resolving (2 -3 -4) with (1 -2 -3) on variable 2 gives a second critical for 1
        G = CnfFormula.from_clauses(4, [(2, -3, -4), (1, -2, -3), (2,), (3,), (4,)], k=3)
        assert 1 not in twocc_set(G, "plain")
        assert make_clause([1, -3, -4]) in f_tilde(G).clauses
        assert 1 in twocc_set(G, "ftilde")

    def test_unique_critical_not_twocc(self):
        F = CnfFormula.from_clauses(3, [(1, -2, -3), (2,), (3,)], k=3)
        assert 1 not in twocc_set(F)


def _pair_implies(a, b, c):
    vs = sorted({abs(l) for l in a + b + c})
    for bits in itertools.product((0, 1), repeat=len(vs)):
        val = dict(zip(vs, bits))
        sat = lambda cl: any((val[abs(l)] == 1) == (l > 0) for l in cl)  # noqa: E731
        if sat(a) and sat(b) and not sat(c):
            return False
    return True


class TestGenerate:
    def test_n1(self):
        assert generate_unique_instance(1, 3, seed=0).formula.clauses == ((1,),)

    def test_unique_all_ones(self):
        F = generate_unique_instance(3, 3, seed=7).formula
        assert all_satisfying(F) == [(1, 1, 1)]

    def test_cap(self):
        with pytest.raises(ValueError):
            generate_unique_instance(25)

    @given(st.integers(2, 9), st.integers(0, 500))
    def test_deterministic_and_unique(self, n, seed):
        a = generate_unique_instance(n, 3, seed=seed)
        b = generate_unique_instance(n, 3, seed=seed)
        assert a.formula == b.formula
        assert all_satisfying(a.formula) == [(1,) * n]
        assert all(len(c) <= 3 for c in a.formula.clauses)
