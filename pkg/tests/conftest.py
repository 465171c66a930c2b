import random

import pytest
from hypothesis import settings, strategies as st

from soergel_pdg.coxeter import standard_type_a
from soergel_pdg.differential import standard_good
from soergel_pdg.poly import Poly
from soergel_pdg.scalars import Q, Z

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def poly_strategy(ring=Q, nvars=3, max_deg=3, coeffs=st.integers(-4, 4), max_terms=5):
    monos = st.tuples(*[st.integers(0, max_deg)] * nvars).filter(lambda m: sum(m) <= max_deg)
    return st.dictionaries(monos, coeffs, max_size=max_terms).map(
        lambda d: Poly(ring, nvars, {m: c for m, c in d.items() if c}))


def homogeneous_strategy(ring=Q, nvars=3, deg=2):
    monos = st.tuples(*[st.integers(0, deg)] * nvars).filter(lambda m: sum(m) == deg)
    return st.dictionaries(monos, st.integers(-3, 3), max_size=4).map(
        lambda d: Poly(ring, nvars, {m: c for m, c in d.items() if c}))


def random_poly(rng, ring, nvars, max_deg=6, terms=5):
    out = {}
    for _ in range(terms):
        m = [0] * nvars
        for _ in range(rng.randint(0, max_deg)):
            m[rng.randrange(nvars)] += 1
        out[tuple(m)] = out.get(tuple(m), 0) + rng.randint(-5, 5)
    return Poly(ring, nvars, {m: c for m, c in out.items() if c})


@pytest.fixture(scope="session")
def a2():
    return standard_type_a(3, Z)


@pytest.fixture(scope="session")
def a3():
    return standard_type_a(4, Z)


@pytest.fixture(scope="session")
def pd_a2(a2):
    return standard_good(a2)


@pytest.fixture(scope="session")
def pd_a3(a3):
    return standard_good(a3)


@pytest.fixture
def rng():
    return random.Random(20240611)
