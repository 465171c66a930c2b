import random
from fractions import Fraction

import pytest

from soergel_pdg import diagrams as D
from soergel_pdg.coxeter import standard_type_a
from soergel_pdg.differential import (PotentialDifferential, StrictModeError, check_good, check_potential,
                                      random_potential, standard_good, zero_differential)
from soergel_pdg.localize import NotIntegral, derive_matrix, evaluate, loc_to_integral
from soergel_pdg.relations import (RelationInstance, check_catalog, check_nilpotence, check_phi_closed_form,
                                   check_relation_holds, check_zamolodchikov, divided_power_integral,
                                   full_catalog, generator_samples, nilpotence_over, relation_catalog,
                                   sample_suite, shortest_paths, zamolodchikov_kinds, zamolodchikov_words)
from soergel_pdg.scalars import Fp, Q, Z

S3 = standard_type_a(3, Z)
S4 = standard_type_a(4, Z)


@pytest.fixture(scope="module")
def s3_catalog():
    return relation_catalog(S3, ["s1", "s2"], random.Random(0))


def test_catalog_covers_both_colors_and_orders(s3_catalog):
    ids = {r.identifier for r in s3_catalog}
    for s in ("s1", "s2"):
        for name in ("unit-left", "counit-right", "needle", "associativity", "frobenius-left", "barbell"):
            assert f"{name}[{s}]" in ids
    for pair in ("s1,s2", "s2,s1"):
        for name in ("pitchfork-12", "pitchfork-6", "pitchfork-10", "pitchfork-8", "dot-on-six",
                     "two-color-associativity", "cyclicity-clockwise"):
            assert f"{name}[{pair}]" in ids


@pytest.mark.parametrize("forward", [True, False], ids=["kappa=1", "kappa=-1"])
def test_s3_relations_hold_and_are_preserved(s3_catalog, forward):
    sanity, pres = check_catalog(standard_good(S3, forward), s3_catalog)
    assert sanity.ok and pres.ok, [v.identifier for v in sanity.failed + pres.failed]


def test_zero_differential_preserves_everything(s3_catalog):
    sanity, pres = check_catalog(zero_differential(S3), s3_catalog)
    assert pres.ok


def test_distant_colors_in_s4():
    rels = relation_catalog(S4, ["s1", "s3"], random.Random(1))
    assert "inverse-crossings[s1,s3]" in {r.identifier for r in rels}
    sanity, pres = check_catalog(standard_good(S4), rels)
    assert sanity.ok and pres.ok


def _perturbed(r):
    pd = standard_good(r)
    return PotentialDifferential(r, pd.d, dict(pd.g), {**pd.gbar, "s1": pd.gbar["s1"] + r.alpha["s1"]})


def test_perturbed_gbar_breaks_one_color_relations(s3_catalog):
    bad = _perturbed(S3)
    _, pres = check_catalog(bad, s3_catalog, strict=False)
    failed = {v.identifier for v in pres.failed}
    assert {"needle[s1]", "barbell[s1]", "forcing0[s1]"} <= failed
    # the unit and counit relations are insensitive to this perturbation
    assert not failed & {"unit-left[s1]", "unit-right[s1]", "counit-left[s1]", "counit-right[s1]"}
    assert all(v.witness for v in pres.failed)
    assert not any(i.endswith("[s2]") for i in failed)


def test_perturbed_gbar_is_refused_in_strict_mode(s3_catalog):
    with pytest.raises(StrictModeError):
        check_catalog(_perturbed(S3), s3_catalog[:1])


def test_false_relation_reports_witness():
    rel = RelationInstance("fake", D.barbell("s1"), D.barbell("s2"), ("s1", "s2"))
    v = check_relation_holds(S3, rel)
    assert not v.ok and v.witness


def test_flipped_relations_hold(s3_catalog):
    pd = standard_good(S3)
    for rel in s3_catalog:
        flipped = RelationInstance(rel.identifier + "-flipped", D.flip(rel.lhs), D.flip(rel.rhs), rel.colors)
        assert check_relation_holds(S3, flipped).ok, rel.identifier


@pytest.mark.parametrize("n,colors,kind", [(6, ["s1", "s3", "s5"], "A1cubed"), (5, ["s1", "s2", "s4"], "A1xA2"),
                                           (4, ["s1", "s2", "s3"], "A3")])
def test_zamolodchikov_kinds(n, colors, kind):
    assert zamolodchikov_kinds(standard_type_a(n, Z), colors) == [kind]


def test_zamolodchikov_words_are_reduced_words_of_longest_element():
    from soergel_pdg.coxeter import word_to_perm
    a, b = zamolodchikov_words(S4, ["s1", "s2", "s3"], "A3")
    assert word_to_perm(a, 4) == word_to_perm(b, 4) == (4, 3, 2, 1)
    assert len(shortest_paths(S4, a, b)) == 4


@pytest.mark.parametrize("n,colors,kind,variant,killed", [
    (6, ["s1", "s3", "s5"], "A1cubed", "forward", True),
    (6, ["s1", "s3", "s5"], "A1cubed", "reverse", True),
    (5, ["s1", "s2", "s4"], "A1xA2", "forward", False),
    (5, ["s1", "s2", "s4"], "A1xA2", "reverse", True),
    (4, ["s1", "s2", "s3"], "A3", "forward", False),
    (4, ["s1", "s2", "s3"], "A3", "reverse", True),
])
def test_zamolodchikov_preserved_by_good_differential(n, colors, kind, variant, killed):
    pd = standard_good(standard_type_a(n, Z))
    v = check_zamolodchikov(pd, colors, kind, variant)
    assert v.holds and v.preserved and v.killed == killed and not v.exploratory


def test_zamolodchikov_a3_general_potential_is_exploratory():
    rng = random.Random(5)
    r = standard_type_a(4, Q)
    pd = next(p for p in (random_potential(r, rng) for _ in range(50)) if not check_good(p).good)
    assert check_potential(pd).ok
    v = check_zamolodchikov(pd, ["s1", "s2", "s3"], "A3")
    assert v.holds and v.exploratory
    assert "exploratory" in v.to_dict()["note"]


@pytest.mark.parametrize("p", [2, 3, 5])
def test_pth_power_vanishes_over_fp(p):
    v = nilpotence_over(standard_good(S3), p, count=12, seed=p)
    assert v.expected_zero and v.ok and v.nonzero == []


def test_fifth_power_survives_over_rationals():
    pd = standard_good(standard_type_a(3, Q))
    v = check_nilpotence(pd, 5, generator_samples(pd.realization))
    assert not v.expected_zero and v.nonzero


def test_nilpotence_independent_route_over_integers():
    # d^p computed over Z has every coefficient divisible by p
    pd = standard_good(S3)
    for m in sample_suite(S3, count=6, seed=2):
        M = evaluate(S3, m)
        for _ in range(3):
            M = derive_matrix(pd, M)
        F = loc_to_integral(M)
        assert all(c % 3 == 0 for row in F.rows.values() for f in row.values() for c in f.terms.values())


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_divided_powers_integral_on_generators(k):
    pd = standard_good(S3)
    for g in generator_samples(S3, thick=True):
        divided_power_integral(pd, g, k)


def test_nonintegral_divided_power_is_reported():
    # half a barbell: d of it is (x1^2 - x2^2)/2, which leaves the integral form
    with pytest.raises(NotIntegral):
        divided_power_integral(standard_good(S3), D.barbell("s1").scale(Fraction(1, 2)), 1)


def test_phi_closed_form_small_k():
    assert check_phi_closed_form(standard_good(S3), "s1", "s2", 3) == {1: True, 2: True, 3: True}
