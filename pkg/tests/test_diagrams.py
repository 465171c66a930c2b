import random

import pytest
from hypothesis import given, settings, strategies as st

from soergel_pdg import diagrams as D
from soergel_pdg.coxeter import standard_type_a
from soergel_pdg.diagrams import (BoundaryMismatch, compose_all, compose_h, compose_v, derive, derive_iter,
                                  identity, on_strand, parse_morphism, poly_on, tensor_all)
from soergel_pdg.differential import standard_good
from soergel_pdg.localize import derive_matrix, equal_morphisms, evaluate
from soergel_pdg.relations import generator_samples, random_morphism
from soergel_pdg.scalars import Z

R = standard_type_a(4, Z)
PD = standard_good(R)
PD_REV = standard_good(R, forward=False)
x = R.var


def same(a, b):
    return equal_morphisms(R, a, b)


def test_identity_is_neutral():
    f = D.split("s1")
    assert same(compose_v(identity(("s1", "s1")), f), f)
    assert same(compose_v(f, identity(("s1",))), f)


def test_tensor_of_dots_has_degree_two():
    assert compose_h(D.enddot("s1"), D.enddot("s3")).degree == 2


def test_merge_after_split_has_degree_minus_two():
    m = compose_v(D.merge("s2"), D.split("s2"))
    assert m.source == m.target == ("s2",) and m.degree == -2


def test_mismatched_boundaries():
    with pytest.raises(BoundaryMismatch):
        compose_v(D.merge("s1"), D.split("s2"))


def test_degrees_of_generators():
    assert D.startdot("s1").degree == 1 and D.merge("s1").degree == -1
    assert D.cross("s1", "s3").degree == 0 and D.six("s1", "s2").degree == 0
    assert D.cup("s1").degree == 0 and D.cap("s1").degree == 0


def test_barbell_derivative_is_z_times_barbell():
    for s in R.generators:
        assert same(derive(PD, D.barbell(s)), compose_v(poly_on((), 0, PD.z(s)), D.barbell(s)))


def test_cup_and_cap_derivatives():
    for pd, kappa in ((PD, 1), (PD_REV, -1)):
        for s in R.generators:
            dots_up = tensor_all(D.startdot(s), D.startdot(s))
            dots_down = tensor_all(D.enddot(s), D.enddot(s))
            assert same(derive(pd, D.cup(s)), dots_up.scale(-kappa))
            assert same(derive(pd, D.cap(s)), dots_down.scale(kappa))


def test_six_valent_killed_against_orientation():
    # standard orientation is s1 -> s2, so the vertex s2 s1 s2 -> s1 s2 s1 is killed
    assert evaluate(R, derive(PD, D.six("s2", "s1"))).is_zero()
    assert not evaluate(R, derive(PD, D.six("s1", "s2"))).is_zero()
    assert evaluate(R, derive(PD_REV, D.six("s1", "s2"))).is_zero()


def test_derivative_of_identity_squares_to_zero():
    assert derive_iter(PD, identity(("s1", "s2", "s1")), 2).is_zero()


@pytest.mark.parametrize("pd", [PD, PD_REV], ids=["forward", "reverse"])
def test_term_and_matrix_derivatives_agree_on_generators(pd):
    for g in generator_samples(R, thick=True):
        assert evaluate(R, derive(pd, g)) == derive_matrix(pd, evaluate(R, g)), str(g)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_leibniz_for_composition(seed):
    rng = random.Random(seed)
    f = random_morphism(R, rng)
    g = random_morphism(R, rng)
    if f.source != g.target:
        g = identity(f.source)
    lhs = evaluate(R, derive(PD, compose_v(f, g)))
    rhs = evaluate(R, compose_v(derive(PD, f), g) + compose_v(f, derive(PD, g)))
    assert lhs == rhs
    # matrix route on the same composite
    assert derive_matrix(PD, evaluate(R, compose_v(f, g))) == lhs


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_leibniz_for_tensor(seed):
    rng = random.Random(seed)
    f = random_morphism(R, rng, max_len=2)
    g = random_morphism(R, rng, max_len=2)
    lhs = evaluate(R, derive(PD, tensor_all(f, g)))
    rhs = evaluate(R, tensor_all(derive(PD, f), g) + tensor_all(f, derive(PD, g)))
    assert lhs == rhs


def _broken_six(leg):
    s, t = "s1", "s2"
    bottom, top = (s, t, s), (t, s, t)
    if leg in (8, 6, 4):
        pos = {8: 0, 6: 1, 4: 2}[leg]
        return compose_v(D.six(s, t), on_strand(bottom, pos, D.broken(bottom[pos])))
    pos = {10: 0, 12: 1, 2: 2}[leg]
    return compose_v(on_strand(top, pos, D.broken(top[pos])), D.six(s, t))


@pytest.mark.parametrize("a,b,c,d", [(10, 12, 4, 6), (12, 2, 6, 8), (2, 4, 8, 10)])
def test_broken_vertex_around_the_clock(a, b, c, d):
    assert same(_broken_six(a) + _broken_six(b), _broken_six(c) + _broken_six(d))


@pytest.mark.parametrize("s", ["s1", "s2", "s3"])
def test_broken_strand_slides_through_trivalent(s):
    # a break above the merge equals breaks on both legs minus alpha_s between them
    lhs = compose_v(D.broken(s), D.merge(s))
    legs = (compose_v(D.merge(s), on_strand((s, s), 0, D.broken(s)))
            + compose_v(D.merge(s), on_strand((s, s), 1, D.broken(s))))
    rhs = legs - compose_v(D.merge(s), poly_on((s, s), 1, R.alpha[s]))
    assert same(lhs, rhs)
    assert not same(lhs, legs)


def test_four_region_alternating_sum_around_crossing():
    s, u = "s1", "s3"
    for f in (x(1), x(2) - x(4), x(3).scale(2) + x(1)):
        left = compose_v(poly_on((u, s), 0, f), D.cross(s, u))
        right = compose_v(poly_on((u, s), 2, f), D.cross(s, u))
        top = compose_v(poly_on((u, s), 1, f), D.cross(s, u))
        bottom = compose_v(D.cross(s, u), poly_on((s, u), 1, f))
        assert same(left + right, top + bottom)


def test_parse_round_trip():
    m = parse_morphism("(split(s1) ; poly[x1 - x2]@1) + -2*(split(s1))", ("s1",), Z, 4)
    again = parse_morphism(str(m), ("s1",), Z, 4)
    assert same(m, again) and m.target == ("s1", "s1")


def test_flip_swaps_source_and_target():
    p = compose_all(D.tmerge("s1", "s2"), on_strand(("s1", "s2", "s1"), 1, D.broken("s2")))
    q = D.flip(p)
    assert q.source == p.target and q.target == p.source
    assert same(D.flip(q), p)
