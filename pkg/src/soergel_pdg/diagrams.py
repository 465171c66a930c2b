"""Formal diagrams: generators, slice-by-slice terms, linear combinations,
composition, and the derivation given by the Leibniz rule.

A term is a stack of horizontal slices read bottom to top.  Each slice is a
row of generators laid side by side; polynomial boxes are generators with no
strands, so their position in the row says which region they sit in.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .poly import Poly


@dataclass(frozen=True, order=True)
class Thick:
    """The object B_{s,t} for adjacent s, t (stored with s before t)."""

    s: str
    t: str

    def __str__(self):
        return f"T({self.s},{self.t})"

    def colors(self) -> Tuple[str, str]:
        return (self.s, self.t)


def _natural(name: str):
    digits = re.sub(r"\D", "", name)
    return (int(digits) if digits else 0, name)


def thick(a: str, b: str) -> Thick:
    s, t = sorted((a, b), key=_natural)
    return Thick(s, t)


Letter = Union[str, Thick]


def letter_text(c: Letter) -> str:
    return str(c)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

_ARITY = {
    "id": 1, "enddot": 1, "startdot": 1, "merge": 1, "split": 1,
    "cross": 2, "six": 2, "tmerge": 2, "tsplit": 2,
    "tmerge_r": 2, "tmerge_l": 2, "tsplit_r": 2, "tsplit_l": 2,
}


@dataclass(frozen=True)
class Generator:
    kind: str
    colors: Tuple[Letter, ...] = ()
    poly: Optional[Poly] = None

    def __post_init__(self):
        if self.kind == "poly":
            if self.poly is None:
                raise ValueError("a polynomial box needs a polynomial")
        elif self.kind not in _ARITY:
            raise ValueError(f"unknown generator {self.kind!r}")
        elif len(self.colors) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {_ARITY[self.kind]} colors")

    @property
    def source(self) -> Tuple[Letter, ...]:
        k, c = self.kind, self.colors
        if k == "poly":
            return ()
        if k == "id":
            return (c[0],)
        if k in ("enddot", "split"):
            return (c[0],)
        if k == "startdot":
            return ()
        if k == "merge":
            return (c[0], c[0])
        if k == "cross":
            return (c[0], c[1])
        if k in ("six", "tmerge"):
            return (c[0], c[1], c[0])
        if k == "tsplit":
            return (thick(*c),)
        if k == "tmerge_r":
            return (c[0], c[1])
        if k == "tmerge_l":
            return (c[0], c[1])
        if k in ("tsplit_r", "tsplit_l"):
            return (c[0] if k == "tsplit_r" else c[1],)
        raise AssertionError(k)

    @property
    def target(self) -> Tuple[Letter, ...]:
        k, c = self.kind, self.colors
        if k == "poly":
            return ()
        if k == "id":
            return (c[0],)
        if k in ("startdot", "merge"):
            return (c[0],)
        if k == "enddot":
            return ()
        if k == "split":
            return (c[0], c[0])
        if k == "cross":
            return (c[1], c[0])
        if k == "six":
            return (c[1], c[0], c[1])
        if k == "tmerge":
            return (thick(*c),)
        if k == "tsplit":
            return (c[0], c[1], c[0])
        if k == "tmerge_r":
            return (c[0],)
        if k == "tmerge_l":
            return (c[1],)
        if k == "tsplit_r":
            return (c[0], c[1])
        if k == "tsplit_l":
            return (c[0], c[1])
        raise AssertionError(k)

    @property
    def degree(self) -> int:
        k = self.kind
        if k == "poly":
            return self.poly.grading() if not self.poly.is_zero() else 0
        if k in ("enddot", "startdot"):
            return 1
        if k in ("merge", "split", "tmerge_r", "tmerge_l", "tsplit_r", "tsplit_l"):
            return -1
        return 0

    @property
    def is_identity(self) -> bool:
        return self.kind == "id"

    def __str__(self):
        if self.kind == "poly":
            return f"poly[{self.poly}]"
        return f"{self.kind}({','.join(letter_text(c) for c in self.colors)})"


def ident(c: Letter) -> Generator:
    return Generator("id", (c,))


def polybox(f: Poly) -> Generator:
    return Generator("poly", (), f)


def _check_thick_pair(kind: str, a: Letter, b: Letter):
    if kind in ("tmerge_r", "tsplit_r") and not (isinstance(a, Thick) and b in a.colors()):
        raise ValueError(f"{kind} needs (thick, one of its colors)")
    if kind in ("tmerge_l", "tsplit_l") and not (isinstance(b, Thick) and a in b.colors()):
        raise ValueError(f"{kind} needs (one of the colors, thick)")


def gen(kind: str, *colors: Letter) -> Generator:
    if kind in ("tmerge_r", "tsplit_r", "tmerge_l", "tsplit_l"):
        _check_thick_pair(kind, *colors)
    return Generator(kind, tuple(colors))


# ---------------------------------------------------------------------------
# terms
# ---------------------------------------------------------------------------

Slice = Tuple[Generator, ...]


def slice_source(sl: Slice) -> Tuple[Letter, ...]:
    return tuple(c for g in sl for c in g.source)


def slice_target(sl: Slice) -> Tuple[Letter, ...]:
    return tuple(c for g in sl for c in g.target)


def identity_slice(word: Sequence[Letter]) -> Slice:
    return tuple(ident(c) for c in word)


class BoundaryMismatch(ValueError):
    pass


@dataclass(frozen=True)
class DiagramTerm:
    source: Tuple[Letter, ...]
    target: Tuple[Letter, ...]
    slices: Tuple[Slice, ...]

    @classmethod
    def build(cls, source: Sequence[Letter], slices: Iterable[Sequence[Generator]]) -> "DiagramTerm":
        cur = tuple(source)
        kept = []
        for sl in slices:
            sl = tuple(sl)
            if slice_source(sl) != cur:
                raise BoundaryMismatch(
                    f"slice {' | '.join(map(str, sl))} expects {list(map(str, slice_source(sl)))}, "
                    f"got {list(map(str, cur))}")
            cur = slice_target(sl)
            if all(g.is_identity for g in sl):
                continue
            kept.append(sl)
        return cls(tuple(source), cur, tuple(kept))

    @classmethod
    def identity(cls, word: Sequence[Letter]) -> "DiagramTerm":
        return cls(tuple(word), tuple(word), ())

    @classmethod
    def single(cls, g: Generator, left: Sequence[Letter] = (), right: Sequence[Letter] = ()) -> "DiagramTerm":
        sl = identity_slice(left) + (g,) + identity_slice(right)
        return cls.build(slice_source(sl), [sl])

    @property
    def degree(self) -> int:
        return sum(g.degree for sl in self.slices for g in sl)

    def then(self, other: "DiagramTerm") -> "DiagramTerm":
        """Stack ``other`` on top of self (other o self)."""
        if other.source != self.target:
            raise BoundaryMismatch(f"cannot stack: {self.target} vs {other.source}")
        return DiagramTerm(self.source, other.target, self.slices + other.slices)

    def tensor(self, other: "DiagramTerm") -> "DiagramTerm":
        """self on the left, other on the right."""
        slices = [sl + identity_slice(other.source) for sl in self.slices]
        slices += [identity_slice(self.target) + sl for sl in other.slices]
        return DiagramTerm(self.source + other.source, self.target + other.target, tuple(slices))

    def __str__(self):
        if not self.slices:
            return f"id[{','.join(map(letter_text, self.source))}]"
        return " ; ".join(" | ".join(str(g) for g in sl) for sl in self.slices)

    def sort_key(self):
        return str(self)


# ---------------------------------------------------------------------------
# linear combinations
# ---------------------------------------------------------------------------

class MorphismSum:
    """Scalar linear combination of terms with a common source and target."""

    __slots__ = ("source", "target", "terms")

    def __init__(self, source: Sequence[Letter], target: Sequence[Letter], terms: Mapping[DiagramTerm, object] = None):
        self.source = tuple(source)
        self.target = tuple(target)
        clean: Dict[DiagramTerm, object] = {}
        for t, c in (terms or {}).items():
            if t.source != self.source or t.target != self.target:
                raise BoundaryMismatch(f"term {t} has the wrong boundary")
            if isinstance(c, Fraction) and c.denominator == 1:
                c = c.numerator
            if c != 0:
                clean[t] = clean.get(t, 0) + c
        self.terms = {t: c for t, c in clean.items() if c != 0}

    @classmethod
    def of(cls, term: DiagramTerm, coeff=1) -> "MorphismSum":
        return cls(term.source, term.target, {term: coeff})

    @classmethod
    def zero(cls, source, target) -> "MorphismSum":
        return cls(source, target, {})

    @classmethod
    def identity(cls, word) -> "MorphismSum":
        return cls.of(DiagramTerm.identity(word))

    @classmethod
    def gen(cls, g: Generator, left=(), right=()) -> "MorphismSum":
        return cls.of(DiagramTerm.single(g, left, right))

    @classmethod
    def from_slices(cls, source, slices, coeff=1) -> "MorphismSum":
        return cls.of(DiagramTerm.build(source, slices), coeff)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> Optional[int]:
        degs = {t.degree for t in self.terms}
        if len(degs) > 1:
            raise ValueError("inhomogeneous morphism")
        return degs.pop() if degs else None

    def _same(self, other: "MorphismSum"):
        if self.source != other.source or self.target != other.target:
            raise BoundaryMismatch("adding morphisms with different boundaries")

    def __add__(self, other: "MorphismSum") -> "MorphismSum":
        self._same(other)
        out = dict(self.terms)
        for t, c in other.terms.items():
            out[t] = out.get(t, 0) + c
        return MorphismSum(self.source, self.target, out)

    def __neg__(self):
        return MorphismSum(self.source, self.target, {t: -c for t, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "MorphismSum":
        return MorphismSum(self.source, self.target, {t: v * c for t, v in self.terms.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __mul__(self, c):
        return self.scale(c)

    def __iter__(self):
        return iter(sorted(self.terms.items(), key=lambda tc: tc[0].sort_key()))

    def __len__(self):
        return len(self.terms)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for t, c in self:
            parts.append(f"{c}*({t})" if c != 1 else f"({t})")
        return " + ".join(parts)

    __repr__ = __str__


def compose_v(f: MorphismSum, g: MorphismSum) -> MorphismSum:
    """f o g (g first)."""
    if g.target != f.source:
        raise BoundaryMismatch(f"cannot compose: target {g.target} != source {f.source}")
    out: Dict[DiagramTerm, object] = {}
    for tg, cg in g.terms.items():
        for tf, cf in f.terms.items():
            t = tg.then(tf)
            out[t] = out.get(t, 0) + cf * cg
    return MorphismSum(g.source, f.target, out)


def compose_h(f: MorphismSum, g: MorphismSum) -> MorphismSum:
    """f on the left of g."""
    out: Dict[DiagramTerm, object] = {}
    for tf, cf in f.terms.items():
        for tg, cg in g.terms.items():
            t = tf.tensor(tg)
            out[t] = out.get(t, 0) + cf * cg
    return MorphismSum(f.source + g.source, f.target + g.target, out)


def compose_all(*maps: MorphismSum) -> MorphismSum:
    """compose_all(a, b, c) = a o b o c."""
    out = maps[-1]
    for m in reversed(maps[:-1]):
        out = compose_v(m, out)
    return out


def tensor_all(*maps: MorphismSum) -> MorphismSum:
    out = maps[0]
    for m in maps[1:]:
        out = compose_h(out, m)
    return out


# ---------------------------------------------------------------------------
# common composites
# ---------------------------------------------------------------------------

def identity(word: Sequence[Letter]) -> MorphismSum:
    return MorphismSum.identity(tuple(word))


def enddot(s): return MorphismSum.gen(gen("enddot", s))
def startdot(s): return MorphismSum.gen(gen("startdot", s))
def merge(s): return MorphismSum.gen(gen("merge", s))
def split(s): return MorphismSum.gen(gen("split", s))
def cross(s, u): return MorphismSum.gen(gen("cross", s, u))
def six(a, b): return MorphismSum.gen(gen("six", a, b))
def tmerge(a, b): return MorphismSum.gen(gen("tmerge", a, b))
def tsplit(a, b): return MorphismSum.gen(gen("tsplit", a, b))


def poly_on(word: Sequence[Letter], region: int, f: Poly) -> MorphismSum:
    """Identity of ``word`` with f in the given region (0 = far left)."""
    word = tuple(word)
    if not 0 <= region <= len(word):
        raise ValueError(f"region {region} out of range for a word of length {len(word)}")
    sl = identity_slice(word[:region]) + (polybox(f),) + identity_slice(word[region:])
    return MorphismSum.from_slices(word, [sl])


def on_strand(word: Sequence[Letter], pos: int, m: MorphismSum) -> MorphismSum:
    """Apply m to the strands starting at ``pos`` with identities elsewhere."""
    word = tuple(word)
    k = len(m.source)
    if word[pos:pos + k] != m.source:
        raise BoundaryMismatch(f"{m.source} does not sit at position {pos} of {word}")
    return tensor_all(*[x for x in (identity(word[:pos]) if pos else None, m,
                                    identity(word[pos + k:]) if pos + k < len(word) else None) if x is not None])


def cup(s) -> MorphismSum:
    """1 -> B_s B_s, stored as split o startdot."""
    return compose_v(split(s), startdot(s))


def cap(s) -> MorphismSum:
    """B_s B_s -> 1, stored as enddot o merge."""
    return compose_v(enddot(s), merge(s))


def barbell(s) -> MorphismSum:
    return compose_v(enddot(s), startdot(s))


def broken(s) -> MorphismSum:
    """startdot o enddot on a single strand."""
    return compose_v(startdot(s), enddot(s))


def needle(s) -> MorphismSum:
    """merge o split o startdot: a strand with a closed loop hanging off it (zero)."""
    return compose_all(merge(s), split(s), startdot(s))


def pitchfork_merge(a: str, b: str) -> MorphismSum:
    """B_a B_b B_a -> B_a: merge the outer a strands and dot off the middle b strand."""
    inner = tensor_all(identity([a]), enddot(b), identity([a]))
    return compose_v(merge(a), inner)


def pitchfork_split(a: str, b: str) -> MorphismSum:
    """B_a -> B_a B_b B_a: split and put a startdot on the middle b strand."""
    inner = tensor_all(identity([a]), startdot(b), identity([a]))
    return compose_v(inner, split(a))


_FLIP_KIND = {
    "id": "id", "poly": "poly", "enddot": "startdot", "startdot": "enddot", "merge": "split", "split": "merge",
    "tmerge": "tsplit", "tsplit": "tmerge", "tmerge_r": "tsplit_r", "tsplit_r": "tmerge_r",
    "tmerge_l": "tsplit_l", "tsplit_l": "tmerge_l",
}


def flip_generator(g: Generator) -> Generator:
    if g.kind == "poly":
        return g
    if g.kind in ("cross", "six"):
        return Generator(g.kind, (g.colors[1], g.colors[0]))
    return Generator(_FLIP_KIND[g.kind], g.colors)


def flip(m: MorphismSum) -> MorphismSum:
    """Reflect every term upside down (source and target swap)."""
    out = {}
    for term, c in m.terms.items():
        slices = [tuple(flip_generator(g) for g in sl) for sl in reversed(term.slices)]
        t = DiagramTerm.build(m.target, slices)
        out[t] = out.get(t, 0) + c
    return MorphismSum(m.target, m.source, out)


# ---------------------------------------------------------------------------
# derivation
# ---------------------------------------------------------------------------

class DerivationUnavailable(ValueError):
    pass


def _term(source, slices) -> DiagramTerm:
    return DiagramTerm.build(source, slices)


def generator_derivative(pd, g: Generator) -> MorphismSum:
    """d applied to a single generator, as a combination of terms on the same boundary."""
    from .differential import orientation_of, six_valent_coeffs, check_good

    k, c = g.kind, g.colors
    src, tgt = g.source, g.target
    zero = MorphismSum.zero(src, tgt)
    R = pd.realization
    if k == "id":
        return zero
    if k == "poly":
        df = pd.derive_poly(g.poly)
        return zero if df.is_zero() else MorphismSum.of(_term(src, [(polybox(df),)]))
    if k == "enddot":
        s = c[0]
        return _poly_combo(src, tgt, [((g,), (polybox(pd.g[s]),))], [1])
    if k == "startdot":
        s = c[0]
        return _poly_combo(src, tgt, [((polybox(pd.gbar[s]),), (g,))], [1])
    if k == "split":
        s = c[0]
        return _poly_combo(src, tgt, [((g,), (ident(s), polybox(-pd.g[s]), ident(s)))], [1])
    if k == "merge":
        s = c[0]
        return _poly_combo(src, tgt, [((ident(s), polybox(-pd.gbar[s]), ident(s)), (g,))], [1])
    if k == "cross":
        s, u = c
        return _poly_combo(src, tgt, [
            ((g,), (ident(u), polybox(-pd.g[u]), ident(s))),
            ((ident(s), polybox(pd.g[s]), ident(u)), (g,)),
            ((g, polybox(pd.g[u] - pd.g[s])),),
        ], [1, 1, 1])
    if k == "six":
        a, b = c
        co = six_valent_coeffs(pd, a, b)
        if co.E != 0:
            raise DerivationUnavailable("E != 0 is impossible for a potential differential")
        out = zero
        for coeff, slices in (
            (co.A, [(g,), (ident(b), gen("enddot", a), ident(b)), (ident(b), gen("startdot", a), ident(b))]),
            (co.B, [(ident(a), gen("enddot", b), ident(a)), (ident(a), gen("startdot", b), ident(a)), (g,)]),
            (co.C, [(g,), (ident(b), ident(a), gen("enddot", b)), (ident(b), ident(a), gen("startdot", b))]),
            (co.D, [(ident(a), ident(b), gen("enddot", a)), (ident(a), ident(b), gen("startdot", a)), (g,)]),
        ):
            if coeff != 0:
                out = out + MorphismSum.of(_term(src, slices), coeff)
        if not co.f.is_zero():
            out = out + MorphismSum.of(_term(src, [(g, polybox(co.f))]))
        return out
    if k in ("tmerge", "tsplit", "tmerge_r", "tmerge_l", "tsplit_r", "tsplit_l"):
        verdict = check_good(pd)
        if not verdict.good:
            raise DerivationUnavailable("thick generators need a good differential")
        return _thick_derivative(pd, g)
    raise DerivationUnavailable(f"no derivative rule for {k}")


def _poly_combo(src, tgt, slice_lists, coeffs) -> MorphismSum:
    out = MorphismSum.zero(src, tgt)
    for sl, c in zip(slice_lists, coeffs):
        t = _term(src, sl)
        if any(gg.kind == "poly" and gg.poly.is_zero() for s_ in t.slices for gg in s_):
            continue
        out = out + MorphismSum.of(t, c)
    return out


def _thick_derivative(pd, g: Generator) -> MorphismSum:
    from .differential import orientation_of

    k, c = g.kind, g.colors
    src, tgt = g.source, g.target
    zero = MorphismSum.zero(src, tgt)
    if k in ("tmerge_r", "tmerge_l"):
        col = c[1] if k == "tmerge_r" else c[0]
        p = -pd.gbar[col]
        if p.is_zero():
            return zero
        return MorphismSum.of(_term(src, [(ident(c[0]), polybox(p), ident(c[1])), (g,)]))
    if k in ("tsplit_r", "tsplit_l"):
        col = c[1] if k == "tsplit_r" else c[0]
        p = -pd.g[col]
        if p.is_zero():
            return zero
        return MorphismSum.of(_term(src, [(g,), (ident(c[0]), polybox(p), ident(c[1]))]))
    a, b = c
    o = orientation_of(pd, a, b)
    if o is None:
        return zero
    x, y = (a, b) if o == "forward" else (b, a)  # arrow x -> y: g_x fixed by y
    kappa = pd.kappa(x, x)
    if k == "tsplit":
        if (a, b) == (x, y):
            return zero
        # split T -> y x y: break the middle x strand on top
        return MorphismSum.of(_term(src, [(g,), (ident(a), gen("enddot", b), ident(a)),
                                          (ident(a), gen("startdot", b), ident(a))]), kappa)
    if (a, b) == (y, x):
        return zero
    # merge x y x -> T: break the middle y strand below, coefficient -kappa
    return MorphismSum.of(_term(src, [(ident(a), gen("enddot", b), ident(a)),
                                      (ident(a), gen("startdot", b), ident(a)), (g,)]), -kappa)


def derive(pd, m: MorphismSum) -> MorphismSum:
    """Apply the differential to every generator occurrence (Leibniz rule)."""
    out: Dict[DiagramTerm, object] = {}
    cache: Dict[Generator, MorphismSum] = {}
    for term, coeff in m.terms.items():
        slices = term.slices
        for k, sl in enumerate(slices):
            for j, g in enumerate(sl):
                if g.is_identity:
                    continue
                dg = cache.get(g)
                if dg is None:
                    dg = generator_derivative(pd, g)
                    cache[g] = dg
                if dg.is_zero():
                    continue
                pre, post = sl[:j], sl[j + 1:]
                first = pre + identity_slice(g.source) + post
                pad_l = identity_slice(slice_target(pre))
                pad_r = identity_slice(slice_target(post))
                for dt, dc in dg.terms.items():
                    new_slices = list(slices[:k]) + [first]
                    new_slices += [pad_l + s2 + pad_r for s2 in dt.slices]
                    new_slices += list(slices[k + 1:])
                    t = DiagramTerm.build(term.source, new_slices)
                    out[t] = out.get(t, 0) + coeff * dc
    return MorphismSum(m.source, m.target, out)


def derive_iter(pd, m: MorphismSum, k: int) -> MorphismSum:
    for _ in range(k):
        m = derive(pd, m)
    return m


class NonIntegralMorphism(ArithmeticError):
    def __init__(self, k, witness):
        self.k = k
        self.witness = witness
        super().__init__(f"divided power of order {k} is not integral: witness {witness}")


def divided_power_morphism(pd, m: MorphismSum, k: int, ring=None) -> MorphismSum:
    """d^k(m)/k! by exact division of the term coefficients.

    Term coefficients are exact scalars; a coefficient not divisible by k! in
    the ground ring raises ``NonIntegralMorphism``.  Polynomials inside boxes
    are untouched, so the test is on the term expansion as produced; use
    ``relations.divided_power_integral`` for the semantic test.
    """
    ring = ring or pd.ring
    it = derive_iter(pd, m, k)
    kf = factorial(k)
    out = {}
    for t, c in it.terms.items():
        q = Fraction(c) / kf
        if ring.kind == "Z" and q.denominator != 1:
            raise NonIntegralMorphism(k, t)
        out[t] = q
    return MorphismSum(m.source, m.target, out)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

_ITEM = re.compile(r"\s*(?:poly\[(?P<poly>[^\]]*)\](?:@(?P<region>\d+))?|(?P<kind>\w+)\((?P<args>[^()]*(?:\([^()]*\)[^()]*)*)\))\s*$")


def _parse_letter(text: str) -> Letter:
    text = text.strip()
    mt = re.fullmatch(r"T\((\w+),(\w+)\)", text.replace(" ", ""))
    if mt:
        return thick(mt.group(1), mt.group(2))
    if not re.fullmatch(r"\w+", text):
        raise ValueError(f"bad color {text!r}")
    return text


def _split_args(args: str) -> List[str]:
    out, depth, cur = [], 0, ""
    for ch in args:
        if ch == "," and depth == 0:
            out.append(cur)
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    if cur.strip():
        out.append(cur)
    return out


def parse_term(text: str, source: Sequence[Letter], ring, nvars: int) -> DiagramTerm:
    """Parse ``slice ; slice ; ...`` (bottom first), items separated by ``|``.

    Items: ``enddot(s1)``, ``split(s2)``, ``cross(s1,s3)``, ``six(s1,s2)``,
    ``tmerge(s1,s2)``, ``tmerge_r(T(s1,s2),s1)``, ``id(s1,s2)`` (several
    strands), ``poly[x1 - x2]``.  A slice made only of ``poly[f]@r`` items is
    the identity with f placed in region r.
    """
    cur = tuple(source)
    slices = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk or chunk == "id":
            continue
        items = [i for i in chunk.split("|")]
        parsed = []
        placed = []
        for it in items:
            mt = _ITEM.match(it)
            if not mt:
                raise ValueError(f"cannot parse diagram item {it.strip()!r}")
            if mt.group("poly") is not None:
                f = Poly.parse(mt.group("poly"), ring, nvars)
                if mt.group("region") is not None:
                    placed.append((int(mt.group("region")), f))
                else:
                    parsed.append(polybox(f))
                continue
            kind = mt.group("kind")
            letters = [_parse_letter(a) for a in _split_args(mt.group("args"))]
            if kind == "id":
                parsed.extend(ident(c) for c in letters)
            else:
                parsed.append(gen(kind, *letters))
        if placed:
            if parsed:
                raise ValueError("mix of placed polynomials and generators in one slice")
            sl = list(identity_slice(cur))
            for region, f in sorted(placed, key=lambda rf: -rf[0]):
                if not 0 <= region <= len(cur):
                    raise ValueError(f"region {region} out of range")
                sl.insert(region, polybox(f))
            parsed = sl
        slices.append(tuple(parsed))
        cur = slice_target(tuple(parsed)) if slice_source(tuple(parsed)) == cur else None
        if cur is None:
            raise BoundaryMismatch(f"slice {chunk!r} does not fit the strands below it")
    return DiagramTerm.build(source, slices)


def parse_morphism(text: str, source: Sequence[Letter], ring, nvars: int) -> MorphismSum:
    """``c1 * (term) + c2 * (term)``; a bare term has coefficient 1."""
    pieces = _split_top_level(text)
    out = None
    for sign, piece in pieces:
        mt = re.fullmatch(r"\s*(?:(-?\d+(?:/\d+)?)\s*\*\s*)?\((.*)\)\s*", piece, flags=re.S)
        if mt:
            coeff = Fraction(mt.group(1)) if mt.group(1) else Fraction(1)
            body = mt.group(2)
        else:
            coeff, body = Fraction(1), piece
        t = parse_term(body, source, ring, nvars)
        m = MorphismSum.of(t, coeff * sign)
        out = m if out is None else out + m
    return out


def _split_top_level(text: str):
    out, depth, cur, sign = [], 0, "", 1
    i = 0
    while i < len(text):
        ch = text[i]
        if depth == 0 and ch in "+-" and cur.strip() and not cur.strip().endswith("*"):
            out.append((sign, cur))
            sign = -1 if ch == "-" else 1
            cur = ""
            i += 1
            continue
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        cur += ch
        i += 1
    if cur.strip():
        out.append((sign, cur))
    return out
