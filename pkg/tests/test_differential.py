import random
from itertools import product

import pytest

from soergel_pdg.coxeter import d4_realization, reflection_type_a, standard_type_a
from soergel_pdg.differential import (PotentialDifferential, StrictModeError, check_good, check_potential,
                                      classify_good, equivariant_derivations, random_potential,
                                      require_potential, six_valent_coeffs, standard_derivation,
                                      standard_good, zero_differential)
from soergel_pdg.poly import Poly, RingDerivation, derive
from soergel_pdg.scalars import Fp, Q


def test_standard_potential_passes_with_expected_z():
    r = standard_type_a(4)
    pd = standard_good(r)
    assert check_potential(pd).ok
    for i in (1, 2, 3):
        assert pd.z(f"s{i}") == r.var(i) + r.var(i + 1)


def test_cube_root_of_unity_potential():
    # rho = 2 is a primitive cube root of unity mod 7
    r = standard_type_a(2, Fp(7))
    d = RingDerivation([r.poly("x2^2 - 2*x1*x2"), r.poly("x1^2 - 2*x1*x2")])
    pd = PotentialDifferential(r, d, {"s1": r.poly("2*x1 + 4*x2")}, {"s1": r.poly("4*x1 + 2*x2")})
    assert check_potential(pd).ok
    assert pd.z("s1") == -(r.var(1) + r.var(2))


def test_root_derivative_not_multiple_of_root_is_reported():
    r = standard_type_a(3)
    pd = standard_good(r)
    bad = PotentialDifferential(r, pd.d, dict(pd.g), {**pd.gbar, "s1": pd.gbar["s1"] + r.var(3)})
    rep = check_potential(bad)
    names = [c.name for c in rep.failed()]
    assert "d-alpha:s1" in names
    assert "alpha_s1 z_s1" in next(c for c in rep.failed() if c.name == "d-alpha:s1").witness


def test_strict_mode_refuses_unchecked():
    r = standard_type_a(3)
    pd = standard_good(r)
    bad = PotentialDifferential(r, pd.d, dict(pd.g), {**pd.gbar, "s1": pd.gbar["s1"] + r.var(3)})
    with pytest.raises(StrictModeError):
        require_potential(bad)
    require_potential(bad, strict=False)


def test_six_valent_forward_orientation():
    pd = standard_good(standard_type_a(3))
    c = six_valent_coeffs(pd, "s1", "s2")
    kappa = pd.kappa("s1", "s1")
    assert (c.A, c.B, c.C, c.D, c.E) == (kappa, -kappa, 0, 0, 0) and c.f.is_zero()


def test_six_valent_reverse_orientation_vanishes():
    pd = standard_good(standard_type_a(3))
    c = six_valent_coeffs(pd, "s2", "s1")
    assert (c.A, c.B, c.C, c.D, c.E) == (0, 0, 0, 0, 0) and c.f.is_zero()


def test_six_valent_zero_differential():
    c = six_valent_coeffs(zero_differential(standard_type_a(3)), "s1", "s2")
    assert {c.A, c.B, c.C, c.D, c.E, c.A2, c.B2, c.C2, c.D2, c.E2} == {0}
    assert c.f.is_zero() and c.f2.is_zero()


def test_six_valent_needs_adjacent_pair():
    with pytest.raises(ValueError):
        six_valent_coeffs(standard_good(standard_type_a(4)), "s1", "s3")


def _identities(pd, s, t):
    r = pd.realization
    k, kb = pd.kappa, pd.kappa_bar
    c = six_valent_coeffs(pd, s, t)
    swapped = six_valent_coeffs(pd, t, s)
    a_s, a_t = r.alpha[s], r.alpha[t]
    st_gs = r.act((t, s), pd.g[s])
    return {
        "E = 0": c.E == 0 and c.E2 == 0,
        "blah1": c.C - c.A + k(t, s) - kb(t, t) == 0,
        "blah2": c.D - c.B + kb(s, t) - k(s, s) == 0,
        "D' = -C": c.D2 == -c.C,
        "C' = -D": c.C2 == -c.D,
        "f from associativity": c.f == -pd.g[t] - a_t.scale(c.C) + st_gs,
        "f from flipped associativity":
            c.f == pd.gbar[t] - pd.gbar[s] - a_t.scale(kb(t, t) + kb(s, t)) - a_s.scale(k(s, s) - kb(t, s)),
        "color swap": (swapped.A, swapped.B, swapped.C, swapped.D, swapped.f) == (c.A2, c.B2, c.C2, c.D2, c.f2),
    }


def test_six_valent_identities_on_random_potentials():
    rng = random.Random(7)
    r = standard_type_a(4, Q)
    for _ in range(100):
        pd = random_potential(r, rng)
        assert check_potential(pd).ok
        for s, t in (("s1", "s2"), ("s2", "s3"), ("s2", "s1")):
            bad = [k for k, v in _identities(pd, s, t).items() if not v]
            assert not bad, (pd.to_dict(), s, t, bad)


def test_check_good_standard_family():
    pd = standard_good(standard_type_a(4))
    v = check_good(pd)
    assert v.good and set(v.orientation) == {("s1", "s2"), ("s2", "s3")}
    assert set(v.kappa.values()) == {1}


def test_check_good_reverse_family():
    pd = standard_good(standard_type_a(4), forward=False)
    v = check_good(pd)
    assert v.good and set(v.orientation) == {("s2", "s1"), ("s3", "s2")}
    assert set(v.kappa.values()) == {-1}
    assert pd.g["s2"] == pd.realization.var(3)


def test_check_good_mixed_choice_fails_transport():
    r = standard_type_a(3)
    pd = standard_good(r)
    g = {"s1": r.var(1), "s2": r.var(3)}
    bad = PotentialDifferential(r, pd.d, g, {s: r.reflect(s, g[s]) for s in g})
    v = check_good(bad)
    assert not v.good and v.failure.name.startswith("st(g_s)=g_t")


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_classifier_type_a(n):
    r = standard_type_a(n)
    found = classify_good(r, standard_derivation(r))
    assert found[0].is_zero()
    fams = sorted(tuple(str(p.g[s]) for s in r.generators) for p in found[1:])
    want = sorted([tuple(f"x{i}" for i in range(1, n)), tuple(f"x{i + 1}" for i in range(1, n))])
    assert fams == want
    for p in found[1:]:
        v = check_good(p)
        assert v.good and check_potential(p).ok
        assert set(v.kappa.values()) == ({1} if str(p.g["s1"]) == "x1" else {-1})


def test_classifier_d4_zero_only():
    r = d4_realization()
    ders = equivariant_derivations(r)
    assert ders == []
    found = classify_good(r, RingDerivation.zero(r.ring, r.nvars))
    assert len(found) == 1 and found[0].is_zero()


def test_classifier_reflection_representation_zero_only():
    r = reflection_type_a(3)
    for d in equivariant_derivations(r) or [RingDerivation.zero(r.ring, r.nvars)]:
        assert [p.is_zero() for p in classify_good(r, d)] == [True]


def test_classifier_quadratic_roots():
    # d(x1) = A x1^2 - 2C x1 x2 + C x2^2 with A = -7, C = 2: y^2 + 9y + 18 has roots -3, -6
    r = standard_type_a(2)
    d = RingDerivation([r.poly("-7*x1^2 - 4*x1*x2 + 2*x2^2"), r.poly("-7*x2^2 - 4*x1*x2 + 2*x1^2")])
    found = classify_good(r, d)
    gs = sorted(str(p.g["s1"]) for p in found[1:])
    assert gs == ["-3*x1 - 6*x2", "-6*x1 - 3*x2"]


def test_classifier_matches_brute_force_grid_on_a2():
    r = standard_type_a(3)
    d = standard_derivation(r)
    forms = [Poly.linear(r.ring, list(v)) for v in product(range(-2, 3), repeat=3)]
    squares = [f for f in forms if not f.is_zero() and f * f == derive(d, f)]
    brute = set()
    for g1, g2 in product(squares, repeat=2):
        g = {"s1": g1, "s2": g2}
        pd = PotentialDifferential(r, d, g, {s: r.reflect(s, g[s]) for s in g})
        if check_potential(pd).ok and check_good(pd).good:
            brute.add((str(g1), str(g2)))
    found = {(str(p.g["s1"]), str(p.g["s2"])) for p in classify_good(r, d)[1:]}
    assert brute == found

