from fractions import Fraction

import pytest

from soergel_pdg import diagrams as D
from soergel_pdg.coxeter import reduced_word, standard_type_a, word_to_perm
from soergel_pdg.differential import PotentialDifferential, standard_good, zero_differential
from soergel_pdg.fc import (FcGraph, aggregate_orders, analyze_braid, analyze_commuting,
                            analyze_quadratic, diagram_decomposition, expected_quadratic, fc_from_derivation,
                            fc_graph, fc_search, gauge_search, grid_values, has_cycle_through, regauge,
                            small_n_instances, to_integral)
from soergel_pdg.idempotents import Decomposition, Summand, element_name
from soergel_pdg.poly import RingDerivation
from soergel_pdg.scalars import Q

NAMES = {"s1": "s", "s2": "t", "s3": "u"}
LETTER = {v: k for k, v in NAMES.items()}
R2, R3, R4 = (standard_type_a(n, Q) for n in (2, 3, 4))


def name(word, n=4):
    """Canonical vertex name of the element written as a word in s, t, u."""
    return element_name(word_to_perm([LETTER[c] for c in word], n), NAMES)


def quadratic_decomposition(r, s, A, B, f, A2, B2, f2):
    one = (s,)
    p_plus = (D.tensor_all(D.enddot(s), D.identity(one)).scale(A)
              + D.compose_v(D.startdot(s), D.cap(s)).scale(B)
              + D.compose_v(D.poly_on(one, 1, f), D.merge(s)))
    i_minus = (D.tensor_all(D.startdot(s), D.identity(one)).scale(A2)
               + D.compose_v(D.cup(s), D.enddot(s)).scale(B2)
               + D.compose_v(D.split(s), D.poly_on(one, 1, f2)))
    return diagram_decomposition(r, (s, s), [("+1", one, D.split(s), p_plus), ("-1", one, i_minus, D.merge(s))])


def good_quadratic(r, s="s1"):
    pd = standard_good(r)
    e = expected_quadratic(pd, s)
    return pd, quadratic_decomposition(r, s, 1, -1, e["f"], 1, -1, e["f'"])


@pytest.mark.parametrize("forward", [True, False])
def test_quadratic_unique_solution(forward):
    pd = standard_good(R2, forward)
    q = analyze_quadratic(pd, "s1")
    kappa = 1 if forward else -1
    assert q.kappa == kappa and q.unique and q.acyclic and q.ok
    sol = q.solution
    assert (sol["A"], sol["B"], sol["A'"], sol["B'"]) == (1, -1, 1, -1)
    assert sol["f"] == pd.gbar["s1"].scale(Fraction(-1, kappa))
    assert sol["f'"] == pd.g["s1"].scale(Fraction(1, kappa))
    assert q.identities == {"kappa p(+1) = d(p(-1))": True, "-kappa i(-1) = d(i(+1))": True}


def test_quadratic_standard_values():
    q = analyze_quadratic(standard_good(R2), "s1")
    assert str(q.solution["f"]) == "-x2" and str(q.solution["f'"]) == "x1"


def test_quadratic_graph_has_single_edge_minus_kappa():
    for forward, kappa in ((True, 1), (False, -1)):
        g = analyze_quadratic(standard_good(R3, forward), "s2").graph
        assert list(g.edges) == [("+1", "-1")]
        assert g.label_scalar("+1", "-1") == -kappa


def test_quadratic_without_gbar_reflection_has_no_acyclic_solution():
    pd = standard_good(R2)
    # gbar = z - g with g shifted by an invariant form keeps the potential axioms
    shift = R2.var(1) + R2.var(2)
    bad = PotentialDifferential(R2, pd.d, {"s1": pd.g["s1"] + shift}, {"s1": pd.gbar["s1"] - shift})
    q = analyze_quadratic(bad, "s1")
    assert not q.acyclic and "gbar_s = s(g_s)" in q.violated


def test_zero_differential_graph_is_edgeless():
    _, dec = good_quadratic(R2)
    assert fc_graph(zero_differential(R2), dec).edges == {}


def test_loop_ansatz():
    # B = 0 forces B' = -2; any f + f' = alpha_s satisfies the axioms and the graph loops at +1
    pd = standard_good(R2)
    dec = quadratic_decomposition(R2, "s1", 1, 0, R2.var(1), 1, -2, -R2.var(2))
    assert dec.ok
    g = fc_graph(pd, dec)
    assert "+1" in g.loops and not g.acyclic


def test_rescaling_keeps_edge_pattern():
    pd, dec = good_quadratic(R3)
    before = set(fc_graph(pd, dec).edges)
    for c in (Fraction(2), Fraction(-1, 3)):
        scaled = Decomposition(dec.ambient, [Summand(sm.element, sm.name, sm.object, sm.incl.scale(1 / c),
                                                     sm.proj.scale(c)) for sm in dec.summands])
        assert set(fc_graph(pd, scaled).edges) == before


def test_reordering_keeps_verdict():
    pd = standard_good(R4)
    res = fc_search(pd, ("s1", "s3", "s2", "s3"), names=NAMES)
    dec = res.decomposition
    rev = Decomposition(dec.ambient, list(reversed(dec.summands)))
    g1, g2 = fc_graph(pd, dec, NAMES), fc_graph(pd, rev, NAMES)
    assert set(g1.edges) == set(g2.edges) and g1.acyclic == g2.acyclic
    assert g1.relations() == g2.relations()


def test_fc_from_derivation_reproduces_quadratic_solution():
    pd = standard_good(R2)
    out = fc_from_derivation(pd, D.split("s1"), D.merge("s1"))
    assert out.ok and out.lam == -1
    _, dec = good_quadratic(R2)
    mine = {sm.name: sm for sm in out.decomposition.summands}
    for sm in dec.summands:
        assert mine[sm.name].incl == sm.incl and mine[sm.name].proj == sm.proj


def test_fc_from_derivation_zero_differential():
    out = fc_from_derivation(zero_differential(R2), D.split("s1"), D.merge("s1"))
    assert not out.ok and out.lam == 0 and "invertible" in out.failures[0]


def test_fc_from_derivation_needs_square_condition():
    pd = standard_good(R2)
    bad_d = RingDerivation([im.scale(2) for im in pd.d.images])
    # d(g) = 2 g^2: z_s doubles, so gbar = 2 z - g
    z = (R2.var(1) + R2.var(2)).scale(2)
    bad = PotentialDifferential(R2, bad_d, {"s1": R2.var(1)}, {"s1": z - R2.var(1)})
    out = fc_from_derivation(bad, D.split("s1"), D.merge("s1"))
    assert "d(d(i_top)) = 0" in out.failures


def test_commuting_good():
    v = analyze_commuting(standard_good(R4), "s1", "s3")
    assert v.equivalent and v.fixed and v.crossing_killed and v.crossing_inverse_closed


def test_commuting_zero():
    assert analyze_commuting(zero_differential(R4), "s1", "s3").ok


def test_commuting_perturbed_fails_together():
    pd = standard_good(R4)
    g = dict(pd.g)
    g["s1"] = g["s1"] + R4.var(3)
    bad = PotentialDifferential(R4, pd.d, g, {**pd.gbar, "s1": pd.gbar["s1"] - R4.var(3)})
    v = analyze_commuting(bad, "s1", "s3")
    assert v.equivalent and not v.fixed and not v.crossing_killed and not v.crossing_inverse_closed


@pytest.mark.parametrize("forward", [True, False])
def test_braid_graph_good(forward):
    pd = standard_good(R4, forward)
    for s, t in (("s1", "s2"), ("s2", "s1"), ("s2", "s3"), ("s3", "s2")):
        b = analyze_braid(pd, s, t)
        assert b.ok and b.graph.acyclic and b.possibility in (2, 3)
        side = b.side_edges
        assert side["d(p_t) phi"] != side["d(psi) i_t"]
        assert side["d(p_s) psi"] != side["d(phi) i_s"]


def test_braid_orientation_pattern():
    b = analyze_braid(standard_good(R3), "s1", "s2")
    assert b.side_edges["d(psi) i_t"] and b.side_edges["d(p_s) psi"]
    assert b.conditions["C = D = f = 0"]
    assert "psi d(phi) psi" not in b.graph.texts.values()


def test_braid_zero_differential():
    b = analyze_braid(zero_differential(R3), "s1", "s2")
    assert b.possibility == 1 and b.graph.edges == {}


def test_braid_loop_condition_matches_loop():
    pd = standard_good(R3)
    shift = (R3.var(1) + R3.var(2) + R3.var(3))
    g = {s: pd.g[s] + shift for s in ("s1", "s2")}
    gbar = {s: pd.gbar[s] - shift for s in ("s1", "s2")}
    bad = PotentialDifferential(R3, pd.d, g, gbar)
    b = analyze_braid(bad, "s1", "s2")
    loop = ("B_s1", "B_s1") in b.graph.edges
    assert loop == (not b.conditions["loop at B_s vanishes (g_t - gbar_s = c (alpha_s + alpha_t))"])
    assert b.consistent


def test_search_two_color_orders():
    assert fc_search(standard_good(R3), ("s1", "s2", "s1"), names=NAMES).graph.relations() == [("s", "sts")]
    assert fc_search(standard_good(R3), ("s2", "s1", "s2"), names=NAMES).graph.relations() == [("sts", "t")]


def test_search_reverse_differential_reverses_orders():
    for X in (("s1", "s2", "s1"), ("s2", "s1", "s2")):
        a = fc_search(standard_good(R3), X, names=NAMES).graph.relations()
        b = fc_search(standard_good(R3, forward=False), X, names=NAMES).graph.relations()
        assert b == sorted((y, x) for x, y in a)


def test_search_three_color_example():
    res = fc_search(standard_good(R4), ("s1", "s3", "s2", "s3"), names=NAMES)
    assert res.ok
    assert res.graph.precedes(name("sutu"), name("su"))


def test_search_rejects_wrong_summands():
    with pytest.raises(Exception):
        fc_search(standard_good(R3), ("s1", "s2", "s1"), summands=[(1, 2, 3)])


def test_gauge_search_undoes_artificial_correction():
    pd, dec = good_quadratic(R2)
    plus, minus = 0, 1
    m = to_integral(R2, D.broken("s1"))
    # corrupt the decomposition by a unitriangular correction; the grid must find its inverse
    bad = regauge(dec, [(plus, minus, m, Fraction(1))])
    assert bad.ok and not fc_graph(pd, bad).acyclic
    found, tried = gauge_search(pd, bad, [(plus, minus, m)], grid_values(pd, "s1"))
    assert found is not None
    cand, g = found
    assert g.acyclic and tried >= 2


def test_gauge_search_exhaustion_is_reported():
    pd, dec = good_quadratic(R2)
    m = to_integral(R2, D.broken("s1"))
    bad = regauge(dec, [(0, 1, m, Fraction(5))])
    found, tried = gauge_search(pd, bad, [(0, 1, m)], [Fraction(1), Fraction(2)])
    assert found is None and tried == 3


def test_aggregate_single_input_is_identity():
    g = fc_search(standard_good(R3), ("s1", "s2", "s1"), names=NAMES).graph
    agg = aggregate_orders([g])
    assert set(agg.edges) == set(g.relations()) and agg.acyclic


def test_aggregate_rank_two_is_acyclic():
    pd = standard_good(R3)
    graphs = []
    for w, s in small_n_instances(3):
        graphs.append(fc_search(pd, tuple(reduced_word(w)) + (s,), names=NAMES).graph)
    assert aggregate_orders(graphs).acyclic


def test_aggregate_finds_cycle_from_four_orders():
    chain = [("us", "usts"), ("usts", "stsuts"), ("stsuts", "sutu"), ("sutu", "su")]
    graphs = []
    for a, b in chain:
        g = FcGraph([name(a), name(b)])
        g.edges[(name(a), name(b))] = None
        graphs.append(g)
    agg = aggregate_orders(graphs)
    assert has_cycle_through(agg, [name(w) for w in ("us", "usts", "stsuts", "sutu")])
