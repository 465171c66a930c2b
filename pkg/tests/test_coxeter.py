from itertools import combinations

import pytest

from soergel_pdg.coxeter import (CoxeterGraph, UnknownGenerator, affine_a_graph, brute_force_orientations,
                                 consistent_orientations, custom_realization, d4_graph, enumerate_sn,
                                 is_reduced, orientation_ok, realization_from_dict, realization_to_dict,
                                 reflection_type_a, standard_type_a, type_a_graph, validate_realization,
                                 word_to_perm)
from soergel_pdg.scalars import Fp, Q


def test_rank_one_root():
    r = standard_type_a(2)
    assert r.alpha["s1"] == r.var(1) - r.var(2)


def test_rank_two_action():
    r = standard_type_a(3)
    assert r.act(("s2",), r.var(2)) == r.var(3)


def test_s8_setup():
    r = standard_type_a(8)
    assert r.nvars == 8 and len(r.generators) == 7


def test_standard_validates():
    rep = validate_realization(standard_type_a(4))
    assert rep.ok and not rep.flags


def test_char2_varpi_equal_to_root_breaks_surjectivity():
    r = standard_type_a(2, Fp(2))
    bad = r.with_varpi({"s1": r.alpha["s1"]})
    rep = validate_realization(bad)
    failed = [c.name for c in rep.failed()]
    assert failed == ["demazure-surjectivity:s1"]
    assert "0" in rep.failed()[0].witness


def test_reflection_representation_passes_but_is_flagged():
    rep = validate_realization(reflection_type_a(4))
    assert rep.ok
    assert any(f.startswith("no-invariant-linear-form") for f in rep.flags)


def test_broken_braid_relation_is_reported():
    # the A2 action declared on a graph without the edge: m = 2 but s1 s2 has order 3
    r = standard_type_a(3)
    g = CoxeterGraph(["s1", "s2"], [])
    imgs = {s: r.action[s].images() for s in r.generators}
    bad = custom_realization(g, Q, 3, r.alpha, r.varpi, imgs)
    names = [c.name for c in validate_realization(bad).failed()]
    assert names == ["braid:s1,s2"]


def test_realization_round_trips_through_config():
    r = standard_type_a(4)
    back = realization_from_dict(realization_to_dict(r))
    assert back.alpha == r.alpha and back.varpi == r.varpi
    assert all(back.act((s,), back.var(i)) == r.act((s,), r.var(i)) for s in r.generators for i in range(1, 5))


def test_changing_varpi_changes_no_demazure_value():
    r = standard_type_a(3)
    other = r.with_varpi({"s1": r.var(1) + r.var(3), "s2": r.var(2) + r.var(1)})
    f = r.var(1) ** 2 * r.var(2) - r.var(3) ** 3
    for s in r.generators:
        assert other.demazure(s, f) == r.demazure(s, f)
        a, b = other.decompose_invariant(s, f)
        assert a + b * other.varpi[s] == f and other.is_invariant(s, a)


@pytest.mark.parametrize("rank", [2, 3, 4, 5, 6])
def test_paths_have_two_orientations(rank):
    assert len(consistent_orientations(type_a_graph(rank))) == 2


def test_single_edge_has_two_orientations():
    assert len(consistent_orientations(type_a_graph(2))) == 2


def test_d4_has_no_orientation():
    assert consistent_orientations(d4_graph()) == []


@pytest.mark.parametrize("k", [4, 5, 6, 7])
def test_cycles_have_two_orientations(k):
    assert len(consistent_orientations(affine_a_graph(k))) == 2


def test_triangle_has_no_induced_path_so_every_orientation_passes():
    g = affine_a_graph(3)
    assert g.induced_paths3() == []
    assert len(consistent_orientations(g)) == 8


def _branched(n_leaves):
    verts = ["c"] + [f"l{i}" for i in range(n_leaves)] + ["m"]
    edges = [("c", f"l{i}") for i in range(n_leaves)] + [("l0", "m")]
    return CoxeterGraph(verts, edges)


@pytest.mark.parametrize("graph", [type_a_graph(4), d4_graph(), affine_a_graph(4), affine_a_graph(6),
                                   _branched(2), _branched(3), CoxeterGraph(["a", "b", "c", "d"],
                                                                            [("a", "b"), ("c", "d")])],
                         ids=["A4", "D4", "cycle4", "cycle6", "path-branch", "star-branch", "disjoint"])
def test_solver_agrees_with_brute_force(graph):
    def canon(os):
        return sorted(sorted(o) for o in os)
    solved = consistent_orientations(graph)
    assert canon(solved) == canon(brute_force_orientations(graph))
    for o in solved:
        assert orientation_ok(graph, o)


def test_middle_vertex_is_neither_source_nor_sink():
    g = type_a_graph(3)
    for o in consistent_orientations(g):
        into = [e for e in o if e[1] == "s2"]
        assert len(into) == 1


def test_words():
    assert word_to_perm(("s1", "s1"), 3) == (1, 2, 3) and not is_reduced(("s1", "s1"), 3)
    assert word_to_perm(("s1", "s2", "s1"), 3) == word_to_perm(("s2", "s1", "s2"), 3)
    assert len(enumerate_sn(4)) == 24


def test_enumeration_words_are_reduced_and_distinct():
    els = enumerate_sn(4)
    assert all(is_reduced(w, 4) and word_to_perm(w, 4) == p for p, w in els.items())


def test_unknown_letter():
    with pytest.raises(UnknownGenerator):
        standard_type_a(3).act(("s7",), standard_type_a(3).var(1))


def test_larger_labels_rejected():
    with pytest.raises(ValueError):
        CoxeterGraph(["a", "b"], [("a", "a")])
