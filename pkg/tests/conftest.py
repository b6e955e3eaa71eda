import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from ppszlab.formula import CnfFormula, generate_unique_instance, make_clause

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def clauses(draw, n, kmax=3, min_size=1):
    width = draw(st.integers(min_size, min(kmax, n)))
    vs = draw(st.lists(st.integers(1, n), min_size=width, max_size=width, unique=True))
    signs = draw(st.lists(st.booleans(), min_size=width, max_size=width))
    return make_clause(v if s else -v for v, s in zip(vs, signs))


@st.composite
def formulas(draw, nmax=6, mmax=8, kmax=3):
    n = draw(st.integers(1, nmax))
    cs = draw(st.lists(clauses(n, kmax), min_size=0, max_size=mmax))
    return CnfFormula(n, kmax, tuple(dict.fromkeys(cs)))


@st.composite
def unique_instances(draw, nmin=3, nmax=8, k=3):
    n = draw(st.integers(nmin, nmax))
    seed = draw(st.integers(0, 10_000))
    return generate_unique_instance(n, k, seed=seed).formula


@pytest.fixture(scope="session")
def corpus():
    return [generate_unique_instance(n, 3, seed=s).formula for n in (5, 7, 9) for s in range(4)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
