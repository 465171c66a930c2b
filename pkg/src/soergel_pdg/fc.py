"""Fantastic-filtration graphs of idempotent decompositions.

For a decomposition X = sum_j M_j with inclusions i_j and projections p_j the
graph has an edge k -> j whenever p_j d(i_k) e_k is nonzero.  An edge k -> j
forces k < j in any order satisfying p_j d(i_k) = 0 for j <= k, so an
acyclic graph yields a partial order and a cycle (or loop) rules one out.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from . import diagrams as D
from . import hecke, linalg
from .coxeter import Realization, generator_index, perm_length, reduced_word, word_to_perm
from .differential import PotentialDifferential, require_potential, six_valent_coeffs
from .idempotents import (Decomposition, DecompositionError, KaroubiObject, MultiplicityError, Summand,
                          decompose_product, element_name, verify_decomposition)
from .localize import (IntegralMap, derive_integral, evaluate, hom_basis, loc_object, loc_to_integral)
from .poly import Poly

Edge = Tuple[str, str]


def map_text(F: IntegralMap) -> str:
    lines = [f"{F.source.word} -> {F.target.word}"]
    for J in sorted(F.rows):
        for L in sorted(F.rows[J]):
            lines.append(f"{J} {L} {F.rows[J][L]}")
    return "\n".join(lines)


def map_hash(F: IntegralMap) -> str:
    return hashlib.sha256(map_text(F).encode()).hexdigest()[:16]


@dataclass
class FcGraph:
    vertices: List[str]
    edges: Dict[Edge, IntegralMap] = field(default_factory=dict)
    texts: Dict[Edge, str] = field(default_factory=dict)
    elements: Dict[str, tuple] = field(default_factory=dict)

    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges)
        return g

    @property
    def loops(self) -> List[str]:
        return sorted(k for k, j in self.edges if k == j)

    def cycles(self) -> List[List[str]]:
        return canonical_cycles(self.digraph(), self.vertices)

    @property
    def acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.digraph())

    def order(self) -> Optional[List[str]]:
        """A linear extension of the induced partial order, or None when cyclic."""
        if not self.acyclic:
            return None
        rank = {v: i for i, v in enumerate(self.vertices)}
        return list(nx.lexicographical_topological_sort(self.digraph(), key=rank.get))

    def relations(self) -> List[Edge]:
        """Cover relations k < j of the partial order (the transitive reduction)."""
        if not self.acyclic:
            return []
        red = nx.transitive_reduction(self.digraph())
        return sorted(red.edges)

    def precedes(self, a: str, b: str) -> bool:
        return self.acyclic and nx.has_path(self.digraph(), a, b) and a != b

    def label_scalar(self, k: str, j: str):
        """c with label(k -> j) = c * id when source and target words agree; 0 for a missing edge."""
        F = self.edges.get((k, j))
        if F is None:
            return 0
        if F.source.word != F.target.word:
            return None
        return F.multiple_of(IntegralMap.identity(F.source))

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [{"from": k, "to": j, "hash": map_hash(F), "nnz": F.nnz(),
                       **({"text": self.texts[(k, j)]} if (k, j) in self.texts else {})}
                      for (k, j), F in sorted(self.edges.items())],
            "acyclic": self.acyclic,
            "cycles": self.cycles(),
            "order": self.order(),
            "relations": [list(e) for e in self.relations()],
        }


def canonical_cycles(g: nx.DiGraph, vertices: Sequence[str] = ()) -> List[List[str]]:
    rank = {v: i for i, v in enumerate(vertices)}
    key = lambda v: (rank.get(v, len(rank)), str(v))
    out = []
    for c in nx.simple_cycles(g):
        i = min(range(len(c)), key=lambda k: key(c[k]))
        out.append(c[i:] + c[:i])
    return sorted(out, key=lambda c: (len(c), [key(v) for v in c]))


# ---------------------------------------------------------------------------
# graphs of decompositions
# ---------------------------------------------------------------------------

def fc_graph(pd: PotentialDifferential, dec: Decomposition, names: Optional[Mapping[str, str]] = None) -> FcGraph:
    """Edges k -> j labeled p_j d(i_k) e_k, zero labels dropped."""
    checks = dec.checks or verify_decomposition(dec)
    if not all(checks.values()):
        bad = [k for k, v in checks.items() if not v]
        raise DecompositionError(f"decomposition axioms fail: {bad}")
    labels = [_vertex(sm, names) for sm in dec.summands]
    graph = FcGraph(labels, elements={lab: sm.element for lab, sm in zip(labels, dec.summands)})
    for k, sk in enumerate(dec.summands):
        di = derive_integral(pd, sk.incl) @ sk.object.idem
        for j, sj in enumerate(dec.summands):
            lab = sj.proj @ di
            if not lab.is_zero():
                graph.edges[(labels[k], labels[j])] = lab
    return graph


def _vertex(sm: Summand, names) -> str:
    if names and isinstance(sm.element, tuple) and sm.element and isinstance(sm.element[0], int):
        return element_name(sm.element, names)
    return sm.name


def diagram_decomposition(r: Realization, ambient: Sequence[str],
                          summands: Sequence[Tuple[str, Sequence[str], D.MorphismSum, D.MorphismSum]]) -> Decomposition:
    """A decomposition of BS(ambient) given by diagrammatic (name, word, incl, proj)."""
    X = loc_object(r, ambient)
    amb = KaroubiObject(tuple(ambient), IntegralMap.identity(X), "".join(map(str, ambient)))
    out = []
    for name, word, inc, proj in summands:
        Z = loc_object(r, word)
        K = KaroubiObject(tuple(word), IntegralMap.identity(Z), name)
        out.append(Summand(name, name, K, to_integral(r, inc), to_integral(r, proj)))
    dec = Decomposition(amb, out)
    dec.checks = verify_decomposition(dec)
    return dec


def to_integral(r: Realization, m: D.MorphismSum) -> IntegralMap:
    return loc_to_integral(evaluate(r, m))


# ---------------------------------------------------------------------------
# B_w B_s at small rank
# ---------------------------------------------------------------------------

DEFAULT_GRID = ("0", "1", "-1", "kappa", "-kappa", "1/kappa", "-1/kappa")


@dataclass
class FcSearchResult:
    w: tuple
    s: str
    graph: Optional[FcGraph]
    decomposition: Optional[Decomposition]
    status: str          # "acyclic", "exhausted", "error"
    tried: int = 0
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "acyclic"


def grid_values(pd: PotentialDifferential, s: str, grid: Sequence[str] = DEFAULT_GRID) -> List:
    F = pd.ring.fraction_field()
    kappa = pd.kappa(s, s)
    vals = []
    for g in grid:
        if "kappa" in g:
            if kappa == 0:
                continue
            v = {"kappa": kappa, "-kappa": -kappa, "1/kappa": F.inv(kappa), "-1/kappa": -F.inv(kappa)}[g]
        else:
            v = Fraction(g)
        v = F.normalize(v)
        if v not in vals:
            vals.append(v)
    return vals


def radical_maps(dec: Decomposition) -> List[Tuple[int, int, IntegralMap]]:
    """Degree-0 maps e_j h e_k between distinct summands (j earlier than k)."""
    out = []
    S = dec.summands
    for k in range(len(S)):
        for j in range(len(S)):
            if j == k:
                continue
            Zk, Zj = S[k].object, S[j].object
            for h in hom_basis(Zk.obj, Zj.obj, 0):
                m = Zj.idem @ h @ Zk.idem
                if not m.is_zero():
                    out.append((j, k, m))
    return out


def regauge(dec: Decomposition, corrections: Sequence[Tuple[int, int, IntegralMap, object]]) -> Decomposition:
    """Conjugate by unitriangular automorphisms: i_k += c i_j m, p_j -= c m p_k."""
    S = [Summand(s.element, s.name, s.object, s.incl, s.proj) for s in dec.summands]
    for j, k, m, c in corrections:
        if c == 0:
            continue
        S[k] = Summand(S[k].element, S[k].name, S[k].object, S[k].incl + (S[j].incl @ m).scale(c), S[k].proj)
        S[j] = Summand(S[j].element, S[j].name, S[j].object, S[j].incl, S[j].proj - (m @ S[k].proj).scale(c))
    out = Decomposition(dec.ambient, S)
    out.checks = verify_decomposition(out)
    return out


def fc_search(pd: PotentialDifferential, X: Sequence[str], summands: Optional[Sequence[tuple]] = None,
              grid: Sequence[str] = DEFAULT_GRID, names: Optional[Mapping[str, str]] = None,
              max_candidates: int = 10000) -> FcSearchResult:
    """Find projections and inclusions for BS(w) B_s (X = reduced word of w followed by s) with an acyclic graph."""
    r = pd.realization
    X = tuple(X)
    n = len(r.generators) + 1
    w, s = word_to_perm(X[:-1], n), X[-1]
    if perm_length(word_to_perm(X, n)) != len(X):
        raise ValueError(f"{X} is not reduced")
    expected = sorted(hecke.product_decomposition(w, s, n))
    if summands is not None and sorted(tuple(z) for z in summands) != expected:
        raise DecompositionError(f"summands {summands} are not those of B_w B_s: {expected}")
    dec = decompose_product(r, w, s)
    graph = fc_graph(pd, dec, names)
    if graph.acyclic:
        return FcSearchResult(w, s, graph, dec, "acyclic", 1)
    rad = radical_maps(dec)
    vals = grid_values(pd, s, grid)
    found, tried = gauge_search(pd, dec, rad, vals, names, max_candidates)
    if found is not None:
        cand, g = found
        return FcSearchResult(w, s, g, cand, "acyclic", tried)
    return FcSearchResult(w, s, graph, dec, "exhausted", tried,
                          f"{len(rad)} radical maps, grid of {len(vals)} values; inconclusive")


def gauge_search(pd: PotentialDifferential, dec: Decomposition, corrections: Sequence[Tuple[int, int, IntegralMap]],
                 vals: Sequence, names: Optional[Mapping[str, str]] = None, max_candidates: int = 10000):
    """Try unitriangular corrections with coefficients from vals in product order.

    Returns ((decomposition, graph), tried) for the first acyclic candidate,
    or (None, tried) when the grid is exhausted.
    """
    tried = 1
    for coeffs in product(vals, repeat=len(corrections)):
        if not any(coeffs):
            continue
        tried += 1
        if tried > max_candidates:
            break
        cand = regauge(dec, [(j, k, m, c) for (j, k, m), c in zip(corrections, coeffs)])
        if not cand.ok:
            continue
        g = fc_graph(pd, cand, names)
        if g.acyclic:
            return (cand, g), tried
    return None, tried


def small_n_instances(n: int) -> List[Tuple[tuple, str]]:
    """All (w, s) with ws > w in S_n, shortest w first."""
    from .coxeter import enumerate_sn
    out = []
    gens = [f"s{i}" for i in range(1, n)]
    for w, word in sorted(enumerate_sn(n).items(), key=lambda kv: (len(kv[1]), kv[0])):
        for s in gens:
            i = generator_index(s)
            if w[i - 1] < w[i]:
                out.append((w, s))
    return out


@dataclass
class Aggregate:
    vertices: List[str]
    edges: List[Edge]
    cycles: List[List[str]]

    @property
    def acyclic(self) -> bool:
        return not self.cycles


def aggregate_orders(graphs: Iterable[FcGraph], max_cycles: int = 100000) -> Aggregate:
    """Union of the cover relations of acyclic graphs, as one digraph on group elements."""
    g = nx.DiGraph()
    order = []
    for G in graphs:
        if not G.acyclic:
            raise ValueError("aggregate_orders needs acyclic graphs")
        for v in G.vertices:
            if v not in g:
                g.add_node(v)
                order.append(v)
        g.add_edges_from(G.relations())
    cycles = []
    for k, c in enumerate(nx.simple_cycles(g)):
        if k >= max_cycles:
            break
        cycles.append(c)
    key = {v: (len(v), v) for v in order}
    canon = []
    for c in cycles:
        i = min(range(len(c)), key=lambda k: key[c[k]])
        canon.append(c[i:] + c[:i])
    canon.sort(key=lambda c: (len(c), [key[v] for v in c]))
    return Aggregate(sorted(order, key=key.get), sorted(g.edges, key=lambda e: (key[e[0]], key[e[1]])), canon)


def has_cycle_through(agg: Aggregate, path: Sequence[str]) -> bool:
    """Is path[0] -> ... -> path[-1] -> path[0] a cycle of the aggregate digraph?"""
    edges = set(agg.edges)
    return all((path[i], path[(i + 1) % len(path)]) in edges for i in range(len(path)))


# ---------------------------------------------------------------------------
# the quadratic decomposition B_s B_s = B_s(1) + B_s(-1)
# ---------------------------------------------------------------------------

class _Affine:
    """A map depending affinely on unknown scalars: const + sum_a x_a parts[a]."""

    def __init__(self, const: IntegralMap, parts: Sequence[IntegralMap]):
        self.const = const
        self.parts = list(parts)

    def at(self, x: Sequence) -> IntegralMap:
        out = self.const
        for c, P in zip(x, self.parts):
            if c:
                out = out + P.scale(c)
        return out

    def left(self, F: IntegralMap) -> "_Affine":
        return _Affine(F @ self.const, [F @ P for P in self.parts])

    def right(self, F: IntegralMap) -> "_Affine":
        return _Affine(self.const @ F, [P @ F for P in self.parts])

    def derive(self, pd) -> "_Affine":
        return _Affine(derive_integral(pd, self.const), [derive_integral(pd, P) for P in self.parts])

    def __add__(self, other: "_Affine") -> "_Affine":
        return _Affine(self.const + other.const, [a + b for a, b in zip(self.parts, other.parts)])


def _flatten(F: IntegralMap) -> Dict[tuple, object]:
    out = {}
    for J, row in F.rows.items():
        for L, p in row.items():
            for m, c in p.terms.items():
                out[(J, L, m)] = c
    return out


def _equations(aff: _Affine, target: IntegralMap) -> Tuple[List[Dict[int, object]], List]:
    """Rows of aff(x) = target as a linear system in x."""
    rhs_map = _flatten(target - aff.const)
    cols = [_flatten(P) for P in aff.parts]
    keys = set(rhs_map)
    for c in cols:
        keys |= set(c)
    rows, rhs = [], []
    for key in sorted(keys, key=repr):
        row = {a: c[key] for a, c in enumerate(cols) if key in c}
        b = rhs_map.get(key, 0)
        if row or b:
            rows.append(row)
            rhs.append(b)
    return rows, rhs


@dataclass
class QuadraticAnalysis:
    color: str
    kappa: object
    constraints: List[str]
    solution: Optional[Dict[str, object]]
    unique: bool
    branch: str
    acyclic: bool
    violated: List[str]
    identities: Dict[str, bool]
    graph: Optional[FcGraph]

    @property
    def ok(self) -> bool:
        return self.acyclic and all(self.identities.values())

    def to_dict(self) -> dict:
        sol = None
        if self.solution is not None:
            sol = {k: str(v) for k, v in self.solution.items()}
        return {"color": self.color, "kappa": str(self.kappa), "constraints": self.constraints, "solution": sol,
                "unique": self.unique, "branch": self.branch, "acyclic": self.acyclic, "violated": self.violated,
                "identities": self.identities, "graph": self.graph.to_dict() if self.graph else None}


QUADRATIC_CONSTRAINTS = [
    "p(+1) i(+1) = id", "p(-1) i(-1) = id", "i(+1) p(+1) + i(-1) p(-1) = id",
    "no loop at +1: p(+1) d(i(+1)) = 0", "no loop at -1: p(-1) d(i(-1)) = 0",
    "p(+1) i(-1) = 0", "no cycle: p(-1) d(i(+1)) = 0 or p(+1) d(i(-1)) = 0",
]


def quadratic_maps(r: Realization, s: str):
    """The fixed maps and the ansatz pieces of B_s B_s = B_s(1) + B_s(-1).

    p(+1) = A (enddot x id) + B (startdot o cap) + f . merge
    i(-1) = A' (startdot x id) + B' (cup o enddot) + split . f'
    with f placed right of the merge output and f' right of the split input.
    """
    ss, one = (s, s), (s,)
    lin = [r.var(i) for i in range(1, r.nvars + 1)]
    p_minus = D.merge(s)
    i_plus = D.split(s)
    p_parts = [D.tensor_all(D.enddot(s), D.identity(one)),
               D.compose_v(D.startdot(s), D.cap(s))]
    p_parts += [D.compose_v(D.poly_on(one, 1, x), D.merge(s)) for x in lin]
    i_parts = [D.tensor_all(D.startdot(s), D.identity(one)),
               D.compose_v(D.cup(s), D.enddot(s))]
    i_parts += [D.compose_v(D.split(s), D.poly_on(one, 1, x)) for x in lin]
    return p_minus, i_plus, p_parts, i_parts


def analyze_quadratic(pd: PotentialDifferential, s: str) -> QuadraticAnalysis:
    """Solve the ansatz family for B_s B_s under the decomposition axioms and loop conditions."""
    require_potential(pd)
    r = pd.realization
    n = r.nvars
    F = r.ring.fraction_field()
    kappa = pd.kappa(s, s)
    p_minus_d, i_plus_d, p_parts_d, i_parts_d = quadratic_maps(r, s)
    conv = lambda m: to_integral(r, m)
    X, Bs = loc_object(r, (s, s)), loc_object(r, (s,))
    p_minus, i_plus = conv(p_minus_d), conv(i_plus_d)
    P = [conv(m) for m in p_parts_d]
    I = [conv(m) for m in i_parts_d]
    k = len(P)
    zero_X_B, zero_B_X = IntegralMap.zero(X, Bs), IntegralMap.zero(Bs, X)
    # unknowns: first k describe p(+1), the next k describe i(-1)
    p_plus = _Affine(zero_X_B, P + [zero_X_B] * k)
    i_minus = _Affine(zero_B_X, [zero_B_X] * k + I)
    idB, idX = IntegralMap.identity(Bs), IntegralMap.identity(X)
    ds = [
        (p_plus.right(i_plus), idB),
        (i_minus.left(p_minus), idB),
        (p_plus.left(i_plus) + i_minus.right(p_minus), idX),
    ]
    loops = [
        (p_plus.right(derive_integral(pd, i_plus)), IntegralMap.zero(Bs, Bs)),
        (i_minus.derive(pd).left(p_minus), IntegralMap.zero(Bs, Bs)),
    ]
    names = ["A", "B"] + [f"f{j}" for j in range(1, n + 1)] + ["A'", "B'"] + [f"f'{j}" for j in range(1, n + 1)]
    rows, rhs = [], []
    for aff, tgt in ds:
        a, b = _equations(aff, tgt)
        rows += a
        rhs += b
    base = linalg.solve(rows, rhs, 2 * k, r.ring)
    violated = _quadratic_conditions(pd, s)
    if base is None:
        return QuadraticAnalysis(s, kappa, QUADRATIC_CONSTRAINTS, None, False, "none", False,
                                 ["decomposition axioms"] + violated, {}, None)
    for aff, tgt in loops:
        a, b = _equations(aff, tgt)
        rows += a
        rhs += b
    x = linalg.solve(rows, rhs, 2 * k, r.ring)
    if x is None:
        return QuadraticAnalysis(s, kappa, QUADRATIC_CONSTRAINTS, None, False, "none", False,
                                 violated or ["loop conditions"], {}, None)
    free = linalg.nullspace(rows, 2 * k, r.ring)
    unique = not free
    pp, im = p_plus.at(x), i_minus.at(x)
    sol = _named_solution(r, names, x, k)
    dec = diagram_decomposition(r, (s, s), [])
    dec.summands = [
        Summand("+1", "+1", KaroubiObject((s,), idB, "+1"), i_plus, pp),
        Summand("-1", "-1", KaroubiObject((s,), idB, "-1"), im, p_minus),
    ]
    dec.checks = verify_decomposition(dec)
    graph = fc_graph(pd, dec) if dec.ok else None
    acyclic = bool(graph and graph.acyclic)
    identities = {}
    if kappa != 0:
        identities["kappa p(+1) = d(p(-1))"] = pp.scale(kappa) == derive_integral(pd, p_minus)
        identities["-kappa i(-1) = d(i(+1))"] = im.scale(-kappa) == derive_integral(pd, i_plus)
    branch = "kappa != 0" if kappa != 0 else ("g_s = 0" if pd.g[s].is_zero() and pd.gbar[s].is_zero() else "none")
    if not unique and kappa != 0:
        branch += " (family)"
    return QuadraticAnalysis(s, kappa, QUADRATIC_CONSTRAINTS, sol, unique, branch, acyclic,
                             violated if not acyclic else [], identities, graph)


def _named_solution(r, names, x, k) -> Dict[str, object]:
    n = r.nvars
    sol = {"A": x[0], "B": x[1], "A'": x[k], "B'": x[k + 1]}
    sol["f"] = Poly.linear(r.ring.fraction_field(), x[2:k]) if n else r.zero()
    sol["f'"] = Poly.linear(r.ring.fraction_field(), x[k + 2:2 * k]) if n else r.zero()
    return sol


def _quadratic_conditions(pd, s) -> List[str]:
    r = pd.realization
    out = []
    if pd.gbar[s] != r.reflect(s, pd.g[s]):
        out.append("gbar_s = s(g_s)")
    if pd.derive_poly(pd.g[s]) != pd.g[s] * pd.g[s]:
        out.append("d(g_s) = g_s^2")
    if pd.kappa(s, s) == 0 and not pd.g[s].is_zero():
        out.append("g_s = 0 or g_s not s-invariant")
    return out


def expected_quadratic(pd, s) -> Dict[str, object]:
    """The unique acyclic solution in closed form (kappa != 0)."""
    r = pd.realization
    F = r.ring.fraction_field()
    kappa = pd.kappa(s, s)
    inv = F.inv(kappa)
    return {"A": 1, "B": -1, "A'": 1, "B'": -1,
            "f": pd.gbar[s].change_ring(F).scale(-inv), "f'": pd.g[s].change_ring(F).scale(inv)}


# ---------------------------------------------------------------------------
# the construction from a derivation of the top inclusion
# ---------------------------------------------------------------------------

@dataclass
class DerivedFc:
    ok: bool
    failures: List[str]
    lam: object
    decomposition: Optional[Decomposition]
    graph: Optional[FcGraph]


def fc_from_derivation(pd: PotentialDifferential, i_top: D.MorphismSum, p_bot: D.MorphismSum) -> DerivedFc:
    """i_bot = d(i_top)/lambda and p_top = -d(p_bot)/lambda, where p_bot d(i_top) = lambda id."""
    r = pd.realization
    F = r.ring.fraction_field()
    it, pb = to_integral(r, i_top), to_integral(r, p_bot)
    dit = derive_integral(pd, it)
    M = loc_object(r, i_top.source)
    failures = []
    lam = (pb @ dit).multiple_of(IntegralMap.identity(M))
    if lam is None or lam == 0:
        failures.append(f"p_bot d(i_top) = lambda id with lambda invertible (lambda = {lam})")
    ddi = derive_integral(pd, dit)
    if not ddi.is_zero():
        failures.append("d(d(i_top)) = 0")
    if failures:
        return DerivedFc(False, failures, lam, None, None)
    inv = F.inv(lam)
    i_bot = dit.scale(inv)
    p_top = derive_integral(pd, pb).scale(-inv)
    idM = IntegralMap.identity(M)
    dec = diagram_decomposition(r, i_top.target, [])
    dec.summands = [Summand("+1", "+1", KaroubiObject(tuple(i_top.source), idM, "+1"), it, p_top),
                    Summand("-1", "-1", KaroubiObject(tuple(p_bot.target), IntegralMap.identity(loc_object(r, p_bot.target)), "-1"), i_bot, pb)]
    dec.checks = verify_decomposition(dec)
    if not dec.ok:
        return DerivedFc(False, [k for k, v in dec.checks.items() if not v], lam, dec, None)
    graph = fc_graph(pd, dec)
    return DerivedFc(graph.acyclic, [] if graph.acyclic else ["graph has a cycle"], lam, dec, graph)


# ---------------------------------------------------------------------------
# two distant colors
# ---------------------------------------------------------------------------

@dataclass
class CommutingVerdict:
    crossing_inverse_closed: bool   # cross o d(cross^-1) = 0
    fixed: bool                     # g_s in R^u and g_u in R^s
    crossing_killed: bool           # d(cross) = 0

    @property
    def equivalent(self) -> bool:
        return self.crossing_inverse_closed == self.fixed == self.crossing_killed

    @property
    def ok(self) -> bool:
        return self.equivalent and self.fixed

    def to_dict(self) -> dict:
        return {"cross o d(cross^-1) = 0": self.crossing_inverse_closed,
                "g_s in R^u and g_u in R^s": self.fixed, "d(cross) = 0": self.crossing_killed,
                "equivalent": self.equivalent}


def analyze_commuting(pd: PotentialDifferential, s: str, u: str) -> CommutingVerdict:
    r = pd.realization
    if r.graph.m(s, u) != 2:
        raise ValueError(f"{s} and {u} do not commute")
    a = evaluate(r, D.compose_v(D.cross(s, u), D.derive(pd, D.cross(u, s)))).is_zero()
    b = r.is_invariant(u, pd.g[s]) and r.is_invariant(s, pd.g[u])
    c = evaluate(r, D.derive(pd, D.cross(s, u))).is_zero()
    return CommutingVerdict(a, b, c)


# ---------------------------------------------------------------------------
# the braid relation: the mixed graph
# ---------------------------------------------------------------------------

@dataclass
class BraidAnalysis:
    s: str
    t: str
    graph: FcGraph
    possibility: Optional[int]
    conditions: Dict[str, bool]
    side_edges: Dict[str, bool]       # label -> vanishes
    consistent: bool

    @property
    def ok(self) -> bool:
        return self.graph.acyclic and self.possibility is not None and self.consistent

    def to_dict(self) -> dict:
        return {"s": self.s, "t": self.t, "possibility": self.possibility, "conditions": self.conditions,
                "side_edges_vanish": self.side_edges, "consistent": self.consistent,
                "graph": self.graph.to_dict()}


def braid_maps(r: Realization, s: str, t: str):
    """Pitchforks and six-valent vertices for B_s B_t B_s = M + B_s, B_t B_s B_t = M' + B_t,
    normalized at runtime so that p i = id and psi phi + i_s p_s = id."""
    conv = lambda m: to_integral(r, m)
    i_s, p_s = conv(D.pitchfork_split(s, t)), conv(D.pitchfork_merge(s, t))
    i_t, p_t = conv(D.pitchfork_split(t, s)), conv(D.pitchfork_merge(t, s))
    phi, psi = conv(D.six(s, t)), conv(D.six(t, s))
    F = r.ring.fraction_field()
    for name in ("s", "t"):
        i, p = (i_s, p_s) if name == "s" else (i_t, p_t)
        c = (p @ i).multiple_of(IntegralMap.identity(i.source))
        if not c:
            raise DecompositionError(f"pitchforks for {name} do not pair to a unit")
        if name == "s":
            p_s = p_s.scale(F.inv(c))
        else:
            p_t = p_t.scale(F.inv(c))
    X = IntegralMap.identity(phi.source)
    lam = (psi @ phi).multiple_of(X - i_s @ p_s)
    if not lam:
        raise DecompositionError("psi phi is not a multiple of the complementary idempotent")
    psi = psi.scale(F.inv(lam))
    return {"i_s": i_s, "p_s": p_s, "i_t": i_t, "p_t": p_t, "phi": phi, "psi": psi}


def braid_decomposition_checks(m) -> Dict[str, bool]:
    i_s, p_s, i_t, p_t, phi, psi = (m[k] for k in ("i_s", "p_s", "i_t", "p_t", "phi", "psi"))
    idX, idY = IntegralMap.identity(phi.source), IntegralMap.identity(psi.source)
    return {
        "p_s i_s = id": p_s @ i_s == IntegralMap.identity(i_s.source),
        "p_t i_t = id": p_t @ i_t == IntegralMap.identity(i_t.source),
        "phi i_s = 0": (phi @ i_s).is_zero(), "psi i_t = 0": (psi @ i_t).is_zero(),
        "p_s psi = 0": (p_s @ psi).is_zero(), "p_t phi = 0": (p_t @ phi).is_zero(),
        "psi phi + i_s p_s = id": psi @ phi + i_s @ p_s == idX,
        "phi psi + i_t p_t = id": phi @ psi + i_t @ p_t == idY,
    }


def analyze_braid(pd: PotentialDifferential, s: str, t: str) -> BraidAnalysis:
    r = pd.realization
    if r.graph.m(s, t) != 3:
        raise ValueError(f"{s} and {t} are not adjacent")
    m = braid_maps(r, s, t)
    checks = braid_decomposition_checks(m)
    if not all(checks.values()):
        raise DecompositionError(f"braid decomposition fails: {[k for k, v in checks.items() if not v]}")
    i_s, p_s, i_t, p_t, phi, psi = (m[k] for k in ("i_s", "p_s", "i_t", "p_t", "phi", "psi"))
    d = lambda F: derive_integral(pd, F)
    Bs, Bt, M, Mp = f"B_{s}", f"B_{t}", "M", "M'"
    labels = {
        (Bs, Bs): ("d(p_s) i_s", d(p_s) @ i_s),
        (Bs, Mp): ("d(phi) i_s", d(phi) @ i_s),
        (Mp, Bs): ("d(p_s) psi", d(p_s) @ psi),
        (Mp, M): ("psi d(phi) psi", psi @ d(phi) @ psi),
        (M, Mp): ("phi d(psi) phi", phi @ d(psi) @ phi),
        (M, Bt): ("d(p_t) phi", d(p_t) @ phi),
        (Bt, M): ("d(psi) i_t", d(psi) @ i_t),
        (Bt, Bt): ("d(p_t) i_t", d(p_t) @ i_t),
    }
    graph = FcGraph([Bs, Mp, M, Bt])
    vanish = {}
    for e, (name, F) in labels.items():
        vanish[name] = F.is_zero()
        if not F.is_zero():
            graph.edges[e] = F
            graph.texts[e] = name
    conds = braid_conditions(pd, s, t)
    poss = classify_braid(pd, s, t)
    consistent = (poss is not None) == graph.acyclic
    consistent = consistent and (vanish["psi d(phi) psi"] == vanish["phi d(psi) phi"])
    consistent = consistent and vanish["d(p_s) i_s"] == conds["loop at B_s vanishes (g_t - gbar_s = c (alpha_s + alpha_t))"]
    consistent = consistent and vanish["d(p_t) i_t"] == conds["loop at B_t vanishes (g_s - gbar_t = c (alpha_s + alpha_t))"]
    consistent = consistent and vanish["psi d(phi) psi"] == conds["C = D = f = 0"]
    if poss is not None and poss > 1:
        consistent = consistent and (vanish["d(p_t) phi"] != vanish["d(psi) i_t"])
        consistent = consistent and (vanish["d(p_s) psi"] != vanish["d(phi) i_s"])
    side = {k: vanish[k] for k in ("d(phi) i_s", "d(p_s) psi", "d(p_t) phi", "d(psi) i_t")}
    return BraidAnalysis(s, t, graph, poss, conds, side, consistent)


def _proportional_to(r, f: Poly, root: Poly) -> bool:
    if f.is_zero():
        return True
    c = next(iter(root.terms))
    ratio = r.ring.fraction_field().div(f.terms.get(c, 0), root.terms[c])
    return f == root.change_ring(r.ring.fraction_field()).scale(ratio)


def braid_conditions(pd, s, t) -> Dict[str, bool]:
    r = pd.realization
    g, gb = pd.g, pd.gbar
    root = r.alpha[s] + r.alpha[t]
    co = six_valent_coeffs(pd, s, t)
    return {
        "loop at B_s vanishes (g_t - gbar_s = c (alpha_s + alpha_t))": _proportional_to(r, g[t] - gb[s], root),
        "loop at B_t vanishes (g_s - gbar_t = c (alpha_s + alpha_t))": _proportional_to(r, g[s] - gb[t], root),
        "C = D = f = 0": co.C == 0 and co.D == 0 and co.f.is_zero(),
        "gbar_s = s(g_s)": gb[s] == r.reflect(s, g[s]),
        "gbar_t = t(g_t)": gb[t] == r.reflect(t, g[t]),
        "g_t = st(g_s)": g[t] == r.act((t, s), g[s]),
    }


def _generators_killed(pd, colors) -> bool:
    r = pd.realization
    gens = []
    for c in colors:
        gens += [D.enddot(c), D.startdot(c), D.merge(c), D.split(c)]
    s, t = colors
    gens += [D.six(s, t), D.six(t, s)]
    return all(evaluate(r, D.derive(pd, m)).is_zero() for m in gens)


def classify_braid(pd, s, t) -> Optional[int]:
    """Which of the three admissible shapes the pair (s, t) is in, or None."""
    r = pd.realization
    g = pd.g
    if g[s].is_zero() and g[t].is_zero():
        return 1 if _generators_killed(pd, (s, t)) else None
    c = braid_conditions(pd, s, t)
    if not (c["gbar_s = s(g_s)"] and c["gbar_t = t(g_t)"] and c["g_t = st(g_s)"]):
        return None
    co = six_valent_coeffs(pd, s, t)
    kappa = pd.kappa(s, s)
    sts = (s, t, s)
    phi_killed = all(x == 0 for x in (co.A, co.B, co.C, co.D, co.E)) and co.f.is_zero()
    psi_killed = all(x == 0 for x in (co.A2, co.B2, co.C2, co.D2, co.E2)) and co.f2.is_zero()
    if (r.is_invariant(s, g[t]) and r.act(sts, g[s]) == g[s] and g[s] == r.reflect(t, g[t])
            and phi_killed and co.A2 == kappa and co.B2 == -kappa):
        return 2
    if (r.is_invariant(t, g[s]) and r.act(sts, g[t]) == g[t] and g[t] == r.reflect(s, g[s])
            and psi_killed and co.A == kappa and co.B == -kappa):
        return 3
    return None
