"""Defining relations of the diagrammatic Hecke category, and checks that a
differential preserves them.

Every relation is an explicit pair of morphisms.  A relation holds when both
sides evaluate to the same localized matrix; a differential preserves it when
d(LHS) and d(RHS) evaluate to the same matrix.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

from . import diagrams as D
from .coxeter import Realization
from .diagrams import MorphismSum, compose_all, compose_v, identity, tensor_all
from .differential import PotentialDifferential, require_potential
from .localize import IntegralMap, LocMatrix, NotIntegral, derive_matrix, evaluate, loc_to_integral
from .poly import Poly
from .scalars import Fp


@dataclass
class RelationInstance:
    identifier: str
    lhs: MorphismSum
    rhs: MorphismSum
    colors: Tuple[str, ...]

    def __post_init__(self):
        if self.lhs.source != self.rhs.source or self.lhs.target != self.rhs.target:
            raise D.BoundaryMismatch(f"{self.identifier}: sides have different boundaries")


@dataclass
class Verdict:
    identifier: str
    ok: bool
    witness: str = ""

    def to_dict(self) -> dict:
        out = {"relation": self.identifier, "ok": self.ok}
        if self.witness:
            out["witness"] = self.witness
        return out


@dataclass
class CheckReport:
    verdicts: List[Verdict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(v.ok for v in self.verdicts)

    @property
    def failed(self) -> List[Verdict]:
        return [v for v in self.verdicts if not v.ok]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "verdicts": [v.to_dict() for v in self.verdicts]}


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def _id(*letters):
    return identity(list(letters))


def sample_polys(r: Realization, s: str, rng: Optional[random.Random] = None, extra: int = 2) -> List[Poly]:
    """A fixed set of polynomials for the forcing relation plus a few random ones."""
    out = [r.var(1), r.var(r.nvars), r.alpha[s], r.varpi[s], r.var(1) * r.var(r.nvars)]
    rng = rng or random.Random(0)
    for _ in range(extra):
        f = r.zero()
        for i in range(1, r.nvars + 1):
            c = rng.randint(-3, 3)
            if c:
                f = f + r.var(i).scale(c)
        out.append(f * f + r.var(rng.randint(1, r.nvars)))
    return out


def one_color(r: Realization, s: str, rng: Optional[random.Random] = None) -> List[RelationInstance]:
    out = []
    add = lambda name, a, b: out.append(RelationInstance(f"{name}[{s}]", a, b, (s,)))
    add("unit-left", compose_v(D.merge(s), tensor_all(D.startdot(s), _id(s))), _id(s))
    add("unit-right", compose_v(D.merge(s), tensor_all(_id(s), D.startdot(s))), _id(s))
    add("counit-left", compose_v(tensor_all(D.enddot(s), _id(s)), D.split(s)), _id(s))
    add("counit-right", compose_v(tensor_all(_id(s), D.enddot(s)), D.split(s)), _id(s))
    add("needle", D.needle(s), MorphismSum.zero((), (s,)))
    add("associativity", compose_v(D.merge(s), tensor_all(D.merge(s), _id(s))),
        compose_v(D.merge(s), tensor_all(_id(s), D.merge(s))))
    add("coassociativity", compose_v(tensor_all(D.split(s), _id(s)), D.split(s)),
        compose_v(tensor_all(_id(s), D.split(s)), D.split(s)))
    add("frobenius-left", compose_v(tensor_all(D.merge(s), _id(s)), tensor_all(_id(s), D.split(s))),
        compose_v(D.split(s), D.merge(s)))
    add("frobenius-right", compose_v(tensor_all(_id(s), D.merge(s)), tensor_all(D.split(s), _id(s))),
        compose_v(D.split(s), D.merge(s)))
    add("barbell", D.barbell(s), MorphismSum.of(D.DiagramTerm.build((), [(D.polybox(r.alpha[s]),)])))
    for k, f in enumerate(sample_polys(r, s, rng)):
        lhs = D.poly_on((s,), 0, f)
        rhs = D.poly_on((s,), 1, r.reflect(s, f))
        df = r.demazure(s, f)
        if not df.is_zero():
            rhs = rhs + _broken_with(s, df)
        add(f"forcing{k}", lhs, rhs)
    return out


def _broken_with(s: str, f: Poly) -> MorphismSum:
    """The broken strand with f in the gap between the two dots."""
    return compose_all(D.startdot(s), MorphismSum.of(D.DiagramTerm.build((), [(D.polybox(f),)])), D.enddot(s))


def two_distant(r: Realization, s: str, u: str) -> List[RelationInstance]:
    out = []
    for a, b in ((s, u), (u, s)):
        add = lambda name, x, y: out.append(RelationInstance(f"{name}[{a},{b}]", x, y, (a, b)))
        X = D.cross(a, b)  # a b -> b a
        add("startdot-slide-left", compose_v(X, tensor_all(D.startdot(a), _id(b))), tensor_all(_id(b), D.startdot(a)))
        add("startdot-slide-right", compose_v(X, tensor_all(_id(a), D.startdot(b))), tensor_all(D.startdot(b), _id(a)))
        add("enddot-slide-left", compose_v(tensor_all(_id(b), D.enddot(a)), X), tensor_all(D.enddot(a), _id(b)))
        add("enddot-slide-right", compose_v(tensor_all(D.enddot(b), _id(a)), X), tensor_all(_id(a), D.enddot(b)))
        add("merge-slide", compose_v(X, tensor_all(D.merge(a), _id(b))),
            compose_all(tensor_all(_id(b), D.merge(a)), tensor_all(X, _id(a)), tensor_all(_id(a), X)))
        add("split-slide", compose_v(tensor_all(D.split(a), _id(b)), D.cross(b, a)),
            compose_all(tensor_all(_id(a), D.cross(b, a)), tensor_all(D.cross(b, a), _id(a)), tensor_all(_id(b), D.split(a))))
        add("inverse-crossings", compose_v(D.cross(b, a), X), _id(a, b))
        add("cyclicity", compose_all(tensor_all(D.cap(a), _id(b, a)), tensor_all(_id(a), D.cross(b, a), _id(a)),
                                     tensor_all(_id(a, b), D.cup(a))), X)
    return out


def rotate_six(a: str, b: str, clockwise: bool = True) -> MorphismSum:
    """The six-valent vertex aba -> bab bent by a cup and a cap into a map bab -> aba."""
    phi = D.six(a, b)
    if clockwise:
        return compose_all(tensor_all(_id(a, b, a), D.cap(b)), tensor_all(_id(a), phi, _id(b)),
                           tensor_all(D.cup(a), _id(b, a, b)))
    return compose_all(tensor_all(D.cap(b), _id(a, b, a)), tensor_all(_id(b), phi, _id(a)),
                       tensor_all(_id(b, a, b), D.cup(a)))


def two_adjacent(r: Realization, s: str, t: str) -> List[RelationInstance]:
    out = []
    for a, b in ((s, t), (t, s)):
        add = lambda name, x, y: out.append(RelationInstance(f"{name}[{a},{b}]", x, y, (a, b)))
        phi = D.six(a, b)  # a b a -> b a b
        zero = lambda src, tgt: MorphismSum.zero(src, tgt)
        add("pitchfork-12", compose_v(D.pitchfork_merge(b, a), phi), zero((a, b, a), (b,)))
        add("pitchfork-6", compose_v(phi, D.pitchfork_split(a, b)), zero((a,), (b, a, b)))
        add("pitchfork-10", compose_v(D.pitchfork_merge(a, b), rotate_six(a, b, True)), zero((b, a, b), (a,)))
        add("pitchfork-8", compose_v(rotate_six(a, b, False), D.pitchfork_split(b, a)), zero((b,), (a, b, a)))
        add("dot-on-six", compose_v(phi, tensor_all(D.startdot(a), _id(b, a))),
            tensor_all(_id(b, a), D.startdot(b))
            + compose_all(tensor_all(_id(b), D.startdot(a), _id(b)), D.split(b), tensor_all(_id(b), D.enddot(a))))
        add("two-color-associativity", compose_v(phi, tensor_all(D.merge(a), _id(b, a))),
            compose_all(tensor_all(_id(b, a), D.merge(b)), tensor_all(phi, _id(b)), tensor_all(_id(a), phi)))
        add("two-color-associativity-flipped", compose_v(tensor_all(D.split(b), _id(a, b)), phi),
            compose_all(tensor_all(_id(b), phi), tensor_all(phi, _id(a)), tensor_all(_id(a, b), D.split(a))))
        add("cyclicity-clockwise", rotate_six(a, b, True), D.six(b, a))
        add("cyclicity-counterclockwise", rotate_six(a, b, False), D.six(b, a))
    return out


def relation_catalog(r: Realization, colors: Sequence[str], rng: Optional[random.Random] = None) -> List[RelationInstance]:
    """All relations among the given colors (at most three), both color orders."""
    colors = list(colors)
    if len(colors) > 3:
        raise ValueError("relation_catalog handles at most three colors")
    rng = rng or random.Random(0)
    out = []
    for s in colors:
        out += one_color(r, s, rng)
    for s, u in combinations(colors, 2):
        m = r.graph.m(s, u)
        if m == 2:
            out += two_distant(r, s, u)
        elif m == 3:
            out += two_adjacent(r, s, u)
        else:
            raise ValueError(f"unsupported m({s},{u}) = {m}")
    if len(colors) == 3:
        for kind in zamolodchikov_kinds(r, colors):
            for variant in ("forward", "reverse"):
                out.append(zamolodchikov_relation(r, colors, kind, variant))
    return out


def full_catalog(r: Realization, rng: Optional[random.Random] = None) -> List[RelationInstance]:
    """Every one-, two- and three-color relation on the generators of r, each listed once."""
    rng = rng or random.Random(0)
    gens = r.generators
    out = []
    for s in gens:
        out += one_color(r, s, rng)
    for s, u in combinations(gens, 2):
        m = r.graph.m(s, u)
        out += two_distant(r, s, u) if m == 2 else two_adjacent(r, s, u) if m == 3 else []
    for trio in combinations(gens, 3):
        for kind in zamolodchikov_kinds(r, trio):
            for variant in ("forward", "reverse"):
                out.append(zamolodchikov_relation(r, trio, kind, variant))
    return out


# ---------------------------------------------------------------------------
# Zamolodchikov relations
# ---------------------------------------------------------------------------

def zamolodchikov_kinds(r: Realization, colors: Sequence[str]) -> List[str]:
    adj = sum(1 for a, b in combinations(colors, 2) if r.graph.m(a, b) == 3)
    if any(r.graph.m(a, b) not in (2, 3) for a, b in combinations(colors, 2)):
        return []
    return [{0: "A1cubed", 1: "A1xA2", 2: "A3"}.get(adj)] if adj < 3 else []


def braid_move(r: Realization, word: Tuple[str, ...], pos: int) -> Tuple[MorphismSum, Tuple[str, ...]]:
    """The crossing or six-valent vertex at ``pos`` and the resulting word."""
    a, b = word[pos], word[pos + 1]
    if a != b and r.graph.m(a, b) == 2:
        new = word[:pos] + (b, a) + word[pos + 2:]
        return D.on_strand(word, pos, D.cross(a, b)), new
    if pos + 2 < len(word) and word[pos + 2] == a and r.graph.m(a, b) == 3:
        new = word[:pos] + (b, a, b) + word[pos + 3:]
        return D.on_strand(word, pos, D.six(a, b)), new
    raise ValueError(f"no braid move at {pos} in {word}")


def _moves(r, word):
    for pos in range(len(word) - 1):
        try:
            yield pos, braid_move(r, word, pos)[1]
        except ValueError:
            continue


def shortest_paths(r: Realization, a: Tuple[str, ...], b: Tuple[str, ...]) -> List[List[int]]:
    """All shortest braid-move paths a -> b, as lists of move positions."""
    dist = {a: 0}
    q = deque([a])
    while q:
        w = q.popleft()
        for _, v in _moves(r, w):
            if v not in dist:
                dist[v] = dist[w] + 1
                q.append(v)
    if b not in dist:
        raise ValueError(f"{b} is not reachable from {a}")
    paths: List[List[int]] = []

    def rec(w, acc):
        if w == b:
            paths.append(list(acc))
            return
        for pos, v in _moves(r, w):
            if dist.get(v) == dist[w] + 1 and _dist_to(v) is not None:
                acc.append(pos)
                rec(v, acc)
                acc.pop()

    back = {b: 0}
    q = deque([b])
    while q:
        w = q.popleft()
        for _, v in _moves(r, w):
            if v not in back:
                back[v] = back[w] + 1
                q.append(v)
    _dist_to = lambda v: back.get(v) if dist.get(v, 10 ** 9) + back.get(v, 10 ** 9) == dist[b] else None
    rec(a, [])
    return paths


def path_morphism(r: Realization, word: Tuple[str, ...], moves: Sequence[int]) -> MorphismSum:
    m = identity(word)
    for pos in moves:
        step, word = braid_move(r, word, pos)
        m = compose_v(step, m)
    return m


def zamolodchikov_words(r: Realization, colors: Sequence[str], kind: str) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    """Source and target reduced words of the longest element of the parabolic subgroup."""
    cs = sorted(colors, key=lambda c: int(c[1:]))
    if kind == "A1cubed":
        x, y, z = cs
        return (x, y, z), (z, y, x)
    if kind == "A1xA2":
        pairs = [(a, b) for a, b in combinations(cs, 2) if r.graph.m(a, b) == 3]
        a, b = pairs[0]
        u = next(c for c in cs if c not in (a, b))
        return (a, b, a, u), (u, b, a, b)
    if kind == "A3":
        mid = next(c for c in cs if all(r.graph.m(c, o) == 3 for o in cs if o != c))
        ends = [c for c in cs if c != mid]
        x, z = ends
        return (x, mid, x, z, mid, x), (z, mid, x, z, mid, z)
    raise ValueError(f"unknown Zamolodchikov kind {kind}")


def zamolodchikov_relation(r: Realization, colors: Sequence[str], kind: str, variant: str = "forward") -> RelationInstance:
    """The two extreme shortest paths between the two words; 'reverse' runs the paths backwards."""
    a, b = zamolodchikov_words(r, colors, kind)
    if variant == "reverse":
        a, b = b, a
    paths = shortest_paths(r, a, b)
    first, last = min(paths), max(paths)
    if first == last:
        raise ValueError(f"only one shortest path for {kind}")
    return RelationInstance(f"zamolodchikov-{kind}-{variant}[{','.join(colors)}]",
                            path_morphism(r, a, first), path_morphism(r, a, last), tuple(colors))


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def _witness(diff: LocMatrix) -> str:
    try:
        F = loc_to_integral(diff)
    except (NotIntegral, ArithmeticError):
        return diff.to_text()
    parts = []
    for J in sorted(F.rows):
        for L in sorted(F.rows[J]):
            parts.append(f"b{J} -> {F.rows[J][L]} b{L}")
    return "; ".join(parts[:12]) + (" ..." if len(parts) > 12 else "")


def check_relation_holds(r: Realization, rel: RelationInstance) -> Verdict:
    a, b = evaluate(r, rel.lhs), evaluate(r, rel.rhs)
    if a == b:
        return Verdict(rel.identifier, True)
    return Verdict(rel.identifier, False, _witness(a - b))


def check_preservation(pd: PotentialDifferential, rel: RelationInstance, strict: bool = True) -> Verdict:
    if strict:
        require_potential(pd)
    r = pd.realization
    a = evaluate(r, D.derive(pd, rel.lhs))
    b = evaluate(r, D.derive(pd, rel.rhs))
    if a == b:
        return Verdict(rel.identifier, True)
    return Verdict(rel.identifier, False, _witness(a - b))


def check_catalog(pd: PotentialDifferential, rels: Sequence[RelationInstance], strict: bool = True) -> Tuple[CheckReport, CheckReport]:
    """(sanity, preservation) reports for a list of relations."""
    sanity = CheckReport([check_relation_holds(pd.realization, rel) for rel in rels])
    pres = CheckReport([check_preservation(pd, rel, strict) for rel in rels])
    return sanity, pres


@dataclass
class ZamolodchikovVerdict:
    kind: str
    variant: str
    holds: bool
    preserved: bool
    killed: bool          # both sides sent to zero by d
    exploratory: bool

    def to_dict(self) -> dict:
        return {"kind": self.kind, "variant": self.variant, "relation_holds": self.holds,
                "preserved": self.preserved, "killed_trivially": self.killed,
                **({"note": "exploratory: open for general differentials"} if self.exploratory else {})}


def check_zamolodchikov(pd: PotentialDifferential, colors: Sequence[str], kind: str,
                        variant: str = "forward") -> ZamolodchikovVerdict:
    r = pd.realization
    rel = zamolodchikov_relation(r, colors, kind, variant)
    holds = check_relation_holds(r, rel).ok
    dl = evaluate(r, D.derive(pd, rel.lhs))
    dr = evaluate(r, D.derive(pd, rel.rhs))
    from .differential import check_good
    exploratory = kind == "A3" and not check_good(pd).good
    return ZamolodchikovVerdict(kind, variant, holds, dl == dr, dl.is_zero() and dr.is_zero(), exploratory)


# ---------------------------------------------------------------------------
# nilpotence and divided powers
# ---------------------------------------------------------------------------

def generator_samples(r: Realization, thick: bool = False) -> List[MorphismSum]:
    """Every generator on the colors of r; thick trivalent vertices only on request."""
    out = []
    gens = r.generators
    for s in gens:
        out += [D.enddot(s), D.startdot(s), D.merge(s), D.split(s)]
    for s, u in combinations(gens, 2):
        m = r.graph.m(s, u)
        if m == 2:
            out += [D.cross(s, u), D.cross(u, s)]
        elif m == 3:
            out += [D.six(s, u), D.six(u, s)]
            if thick:
                out += [D.tmerge(s, u), D.tsplit(s, u), D.tmerge(u, s), D.tsplit(u, s)]
    return out


def random_morphism(r: Realization, rng: random.Random, steps: int = 3, max_len: int = 4) -> MorphismSum:
    """A vertical composite of randomly placed generators and polynomial boxes."""
    gens = r.generators
    word = tuple(rng.choice(gens) for _ in range(rng.randint(1, 2)))
    m = identity(word)
    for _ in range(steps):
        options = []
        for pos in range(len(word) + 1):
            if len(word) < max_len:
                for s in gens:
                    options.append((pos, D.startdot(s)))
            if pos < len(word):
                options.append((pos, D.enddot(word[pos])))
                if len(word) < max_len:
                    options.append((pos, D.split(word[pos])))
            if pos + 1 < len(word):
                a, b = word[pos], word[pos + 1]
                if a == b:
                    options.append((pos, D.merge(a)))
                elif r.graph.m(a, b) == 2:
                    options.append((pos, D.cross(a, b)))
            if pos + 2 < len(word) and word[pos] == word[pos + 2] and r.graph.m(word[pos], word[pos + 1]) == 3:
                options.append((pos, D.six(word[pos], word[pos + 1])))
        pos, g = rng.choice(options)
        step = tensor_all(*[x for x in (identity(word[:pos]) if pos else None, g,
                                        identity(word[pos + len(g.source):]) if pos + len(g.source) < len(word) else None)
                            if x is not None])
        m = compose_v(step, m)
        word = m.target
    region = rng.randint(0, len(word))
    f = r.var(rng.randint(1, r.nvars))
    return compose_v(D.poly_on(word, region, f), m)


def sample_suite(r: Realization, count: int = 50, seed: int = 0) -> List[MorphismSum]:
    rng = random.Random(seed)
    out = generator_samples(r)
    while len(out) < count:
        out.append(random_morphism(r, rng, steps=rng.randint(1, 3)))
    return out[:count]


def derive_power(pd: PotentialDifferential, M: LocMatrix, k: int) -> LocMatrix:
    for _ in range(k):
        M = derive_matrix(pd, M)
    return M


@dataclass
class NilpotenceVerdict:
    p: int
    ring: str
    samples: int
    nonzero: List[int]
    expected_zero: bool

    @property
    def ok(self) -> bool:
        return not self.nonzero if self.expected_zero else True

    def to_dict(self) -> dict:
        return {"p": self.p, "ring": self.ring, "samples": self.samples, "nonzero": self.nonzero,
                "expected": "zero" if self.expected_zero else "nonzero in general", "ok": self.ok}


def check_nilpotence(pd: PotentialDifferential, p: int, samples: Sequence[MorphismSum]) -> NilpotenceVerdict:
    """d^p on each sample; it must vanish when the ground field is F_p."""
    r = pd.realization
    nonzero = []
    for k, m in enumerate(samples):
        if not derive_power(pd, evaluate(r, m), p).is_zero():
            nonzero.append(k)
    return NilpotenceVerdict(p, repr(pd.ring), len(samples), nonzero, pd.ring.characteristic == p)


def nilpotence_over(pd: PotentialDifferential, p: int, count: int = 50, seed: int = 0) -> NilpotenceVerdict:
    pdp = pd.change_ring(Fp(p))
    return check_nilpotence(pdp, p, sample_suite(pdp.realization, count, seed))


def divided_power_integral(pd: PotentialDifferential, m: MorphismSum, k: int):
    """d^k(m)/k! in the left bases; raises NotIntegral when a coefficient is not an integer."""
    r = pd.realization
    F = loc_to_integral(derive_power(pd, evaluate(r, m), k))
    kf = factorial(k)
    rows = {}
    for J, row in F.rows.items():
        out = {}
        for L, poly in row.items():
            terms = {}
            for mono, c in poly.terms.items():
                q = Fraction(c) / kf
                if q.denominator != 1:
                    raise NotIntegral((J, L), f"coefficient {c} of d^{k} at {mono} is not divisible by {k}!")
                terms[mono] = q.numerator
            out[L] = Poly(poly.ring, poly.nvars, terms)
        rows[J] = out
    return IntegralMap(F.source, F.target, rows)


def phi_closed_form(pd: PotentialDifferential, s: str, t: str, k: int) -> MorphismSum:
    """k! kappa (g_s^{k-1} a - gbar_t^{k-1} b - kappa (sum_{i+j=k-2} g_s^i gbar_t^j) c) on aba -> bab,
    where a, b break the top and bottom middle strands and c breaks both."""
    r = pd.realization
    kappa = pd.kappa(s, s)
    src, tgt = (s, t, s), (t, s, t)
    phi = D.gen("six", s, t)
    top = [(D.ident(t), D.gen("enddot", s), D.ident(t)), (D.ident(t), D.gen("startdot", s), D.ident(t))]
    bot = [(D.ident(s), D.gen("enddot", t), D.ident(s)), (D.ident(s), D.gen("startdot", t), D.ident(s))]
    alpha = MorphismSum.of(D.DiagramTerm.build(src, [(phi,)] + top))
    beta = MorphismSum.of(D.DiagramTerm.build(src, bot + [(phi,)]))
    gamma = MorphismSum.of(D.DiagramTerm.build(src, bot + [(phi,)] + top))
    g, gb = pd.g[s], pd.gbar[t]
    left = lambda f, m: compose_v(D.poly_on(tgt, 0, f), m)
    total = MorphismSum.zero(src, tgt)
    total = total + left(g ** (k - 1), alpha) - left(gb ** (k - 1), beta)
    if k >= 2:
        acc = r.zero()
        for i in range(k - 1):
            acc = acc + (g ** i) * (gb ** (k - 2 - i))
        total = total - left(acc.scale(kappa), gamma)
    return total.scale(factorial(k) * kappa)


def check_phi_closed_form(pd: PotentialDifferential, s: str, t: str, kmax: int = 5) -> Dict[int, bool]:
    r = pd.realization
    M = evaluate(r, D.six(s, t))
    out = {}
    for k in range(1, kmax + 1):
        M = derive_matrix(pd, M)
        out[k] = M == evaluate(r, phi_closed_form(pd, s, t, k))
    return out
