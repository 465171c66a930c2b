"""Localization of Bott-Samelson objects and evaluation of diagrams.

After inverting the roots, B_{s1} ... B_{sd} splits as a sum of rank-one
pieces indexed by subwords e in {0,1}^d; the piece for e is twisted by
pi(e) = s1^e1 ... sd^ed.  The element f0 (x) f1 (x) ... (x) fd has coordinate
f0 * pi_1(e)(f1) * ... * pi_d(e)(fd) at e.  A thick letter B_{s,t} has six
pieces, one per element w of the parabolic subgroup, with coordinate f * w(g).

A morphism becomes a sparse matrix of rational functions whose entry (e', e)
vanishes unless pi(e') = pi(e).  Equality of morphisms is decided by comparing
these matrices.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import linalg
from .coxeter import LinearSub, Realization, _linear_invariants
from .diagrams import (Generator, Letter, MorphismSum, Thick, slice_target, thick)
from .poly import NotDivisible, Poly, RatFunc, derive as derive_poly, exact_div

Comp = Tuple[int, ...]
Vector = Dict[Comp, object]


class NotIntegral(ArithmeticError):
    """A coordinate vector does not come from the integral form."""

    def __init__(self, where, detail=""):
        self.where = where
        super().__init__(f"not integral at component {where}{': ' + detail if detail else ''}")


class HomCapExceeded(RuntimeError):
    pass


def thick_words(T: Thick) -> Tuple[Tuple[str, ...], ...]:
    s, t = T.s, T.t
    return ((), (s,), (t,), (s, t), (t, s), (s, t, s))


# right multiplication by t on the list above; coset representatives e, s, ts
_THICK_T_PARTNER = {0: 2, 1: 3, 4: 5}
_THICK_REPS = (0, 1, 4)
_THICK_BASIS = ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (2, 1))


def _cache(r: Realization, name: str) -> dict:
    return r._cache.setdefault(name, {})


def _rf(r: Realization, x) -> RatFunc:
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, Poly):
        return RatFunc.from_poly(x)
    return RatFunc.from_poly(Poly.const(r.ring, r.nvars, x))


def _is_scalar(x) -> bool:
    return not isinstance(x, (RatFunc, Poly))


def _scalar_of(x):
    """The scalar value of a constant RatFunc, else None."""
    if _is_scalar(x):
        return x
    if isinstance(x, RatFunc) and not x.den and x.num.is_constant():
        return x.num.constant_value()
    return None


def _simplify(x):
    s = _scalar_of(x)
    return s if s is not None else x


def _is_zero(x) -> bool:
    return x == 0 if _is_scalar(x) else x.is_zero()


def _mul(a, b):
    if _is_scalar(a):
        if _is_scalar(b):
            return a * b
        return b * a if a != 1 else b
    if _is_scalar(b):
        return a * b if b != 1 else a
    return a * b


def _add(a, b):
    if _is_scalar(a) and _is_scalar(b):
        return a + b
    return _simplify(_rf_any(a, b) + _rf_any(b, a))


def _rf_any(x, like):
    if isinstance(x, RatFunc):
        return x
    other = like if isinstance(like, RatFunc) else None
    if isinstance(x, Poly):
        return RatFunc.from_poly(x)
    return RatFunc.from_poly(Poly.const(other.ring, other.nvars, x))


# ---------------------------------------------------------------------------
# objects
# ---------------------------------------------------------------------------

class LocObject:
    """A word of thin and thick letters together with its component set."""

    def __init__(self, r: Realization, word: Sequence[Letter]):
        self.r = r
        self.word = tuple(word)
        self.sizes = tuple(6 if isinstance(c, Thick) else 2 for c in self.word)
        self._prefix: Dict[Comp, LinearSub] = {(): LinearSub.identity(r.ring, r.nvars)}
        self._comps = None
        self._lambda = {}

    def __repr__(self):
        return f"LocObject({','.join(map(str, self.word))})"

    def __len__(self):
        return len(self.word)

    @property
    def comps(self) -> List[Comp]:
        if self._comps is None:
            self._comps = list(product(*[range(k) for k in self.sizes]))
        return self._comps

    def letter_element(self, k: int, c: int) -> LinearSub:
        letter = self.word[k]
        if isinstance(letter, Thick):
            return self.r.element(thick_words(letter)[c])
        return self.r.element((letter,) if c else ())

    def prefix_pi(self, comp: Comp) -> LinearSub:
        """pi of the first len(comp) letters."""
        got = self._prefix.get(comp)
        if got is None:
            got = self.prefix_pi(comp[:-1]).compose(self.letter_element(len(comp) - 1, comp[-1]))
            self._prefix[comp] = got
        return got

    def pi(self, comp: Comp) -> LinearSub:
        return self.prefix_pi(tuple(comp))

    def shift(self) -> int:
        """Grading shift: 1 per thin letter, 3 per thick letter."""
        return sum(3 if isinstance(c, Thick) else 1 for c in self.word)

    def slot_basis(self, k: int) -> List[Poly]:
        letter = self.word[k]
        r = self.r
        if isinstance(letter, Thick):
            h, wt = _thick_generators(r, letter)
            return [h ** a * wt ** b for a, b in _THICK_BASIS]
        return [r.one(), r.varpi[letter]]

    @property
    def basis(self) -> List[Comp]:
        """Indices J of the left basis 1 (x) b_{J1} (x) ... (x) b_{Jd}."""
        return self.comps

    def basis_degree(self, J: Comp) -> int:
        """Polynomial degree of the basis element (half the grading before the shift)."""
        total = 0
        for letter, j in zip(self.word, J):
            if isinstance(letter, Thick):
                a, b = _THICK_BASIS[j]
                total += a + b
            else:
                total += j
        return total


def loc_object(r: Realization, word: Sequence[Letter]) -> LocObject:
    objs = _cache(r, "objects")
    word = tuple(word)
    got = objs.get(word)
    if got is None:
        got = LocObject(r, word)
        objs[word] = got
    return got


def _thick_generators(r: Realization, T: Thick) -> Tuple[Poly, Poly]:
    """(h, varpi_t) with h = varpi_s fixed by t, used for the thick slot basis."""
    h = r.varpi[T.s]
    wt = r.varpi[T.t]
    if r.reflect(T.t, h) != h:
        raise ValueError(f"thick slot basis needs varpi_{T.s} fixed by {T.t}; got {h}")
    return h, wt


def twist(r: Realization, sub: LinearSub, x):
    """Apply a group element to an entry (scalar, Poly or RatFunc)."""
    if _is_scalar(x):
        return x
    cache = _cache(r, "twist")
    key = (sub, x)
    got = cache.get(key)
    if got is None:
        if isinstance(x, Poly):
            got = sub.apply(x)
        else:
            got = x.apply_linear_map(sub.apply)
        cache[key] = got
    return got


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

class LocMatrix:
    """Sparse matrix of a morphism; ``cols[e][e2]`` is the entry at row e2, column e."""

    __slots__ = ("source", "target", "cols")

    def __init__(self, source: LocObject, target: LocObject, cols: Mapping[Comp, Mapping[Comp, object]]):
        self.source = source
        self.target = target
        clean = {}
        for e, col in cols.items():
            c2 = {k: _simplify(v) for k, v in col.items() if not _is_zero(v)}
            if c2:
                clean[e] = c2
        self.cols = clean

    @property
    def r(self) -> Realization:
        return self.source.r

    @classmethod
    def identity(cls, obj: LocObject) -> "LocMatrix":
        return cls(obj, obj, {e: {e: 1} for e in obj.comps})

    @classmethod
    def zero(cls, source: LocObject, target: LocObject) -> "LocMatrix":
        return cls(source, target, {})

    def entry(self, row: Comp, col: Comp):
        return self.cols.get(col, {}).get(row, 0)

    def is_zero(self) -> bool:
        return not self.cols

    def _same(self, other: "LocMatrix"):
        if self.source.word != other.source.word or self.target.word != other.target.word:
            raise ValueError("matrices with different boundaries")

    def __add__(self, other: "LocMatrix") -> "LocMatrix":
        self._same(other)
        out = {e: dict(c) for e, c in self.cols.items()}
        for e, col in other.cols.items():
            tgt = out.setdefault(e, {})
            for k, v in col.items():
                tgt[k] = _add(tgt[k], v) if k in tgt else v
        return LocMatrix(self.source, self.target, out)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LocMatrix":
        return LocMatrix(self.source, self.target,
                         {e: {k: _mul(c, v) for k, v in col.items()} for e, col in self.cols.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __matmul__(self, other: "LocMatrix") -> "LocMatrix":
        """self o other."""
        if other.target.word != self.source.word:
            raise ValueError(f"cannot compose {self.source} with {other.target}")
        out = {}
        for e, col in other.cols.items():
            out[e] = apply_matrix(self, col)
        return LocMatrix(other.source, self.target, out)

    def __eq__(self, other):
        if not isinstance(other, LocMatrix):
            return NotImplemented
        return self.source.word == other.source.word and self.target.word == other.target.word and \
            (self - other).is_zero()

    __hash__ = None

    def multiple_of(self, other: "LocMatrix"):
        """The scalar c with self == c * other, or None."""
        if other.is_zero():
            return 0 if self.is_zero() else None
        e, col = next(iter(sorted(other.cols.items())))
        k, v = next(iter(sorted(col.items())))
        mine = self.entry(k, e)
        if _is_zero(mine):
            return 0 if self.is_zero() else None
        q = _ratio(mine, v)
        if q is None:
            return None
        return q if self == other.scale(q) else None

    def block_violations(self) -> List[Tuple[Comp, Comp]]:
        bad = []
        for e, col in self.cols.items():
            pe = self.source.pi(e)
            for k in col:
                if self.target.pi(k) != pe:
                    bad.append((k, e))
        return bad

    def nnz(self) -> int:
        return sum(len(c) for c in self.cols.values())

    def to_text(self) -> str:
        lines = []
        for e in sorted(self.cols):
            for k in sorted(self.cols[e]):
                lines.append(f"[{''.join(map(str, k))} <- {''.join(map(str, e))}] {self.cols[e][k]}")
        return "\n".join(lines) if lines else "0"


def _ratio(a, b):
    sa, sb = _scalar_of(a), _scalar_of(b)
    if sa is not None and sb is not None:
        return Fraction(sa) / sb if not isinstance(sa, int) or not isinstance(sb, int) or sa % sb else sa // sb
    ra = a if isinstance(a, RatFunc) else None
    rb = b if isinstance(b, RatFunc) else None
    if ra is None or rb is None:
        return None
    if ra.den != rb.den:
        return None
    # ratio of numerators must be a scalar
    ka = max(ra.num.terms, key=lambda m: (sum(m), m))
    c = ra.num.ring.div(ra.num.terms[ka], rb.num.terms.get(ka, 0)) if rb.num.terms.get(ka, 0) else None
    if c is None:
        return None
    return c if ra.num == rb.num.scale(c) else None


def apply_matrix(m: LocMatrix, vec: Mapping[Comp, object]) -> Dict[Comp, object]:
    out: Dict[Comp, object] = {}
    for e, v in vec.items():
        col = m.cols.get(e)
        if not col:
            continue
        for k, a in col.items():
            t = _mul(a, v)
            out[k] = _add(out[k], t) if k in out else t
    return {k: v for k, v in out.items() if not _is_zero(v)}


def tensor(a: LocMatrix, b: LocMatrix) -> LocMatrix:
    """a on the left of b: entry a[e1'][e1] * pi(e1)(b[e2'][e2])."""
    r = a.r
    src = loc_object(r, a.source.word + b.source.word)
    tgt = loc_object(r, a.target.word + b.target.word)
    out = {}
    for e1, c1 in a.cols.items():
        P = a.source.pi(e1)
        for e2, c2 in b.cols.items():
            col = {}
            tw = {k2: twist(r, P, v2) for k2, v2 in c2.items()}
            for k1, v1 in c1.items():
                for k2, v2 in tw.items():
                    col[k1 + k2] = _mul(v1, v2)
            out[e1 + e2] = col
    return LocMatrix(src, tgt, out)


# ---------------------------------------------------------------------------
# coordinates and integral forms
# ---------------------------------------------------------------------------

def basis_coords(obj: LocObject, J: Comp) -> Vector:
    """Coordinates of 1 (x) b_{J1} (x) ... (x) b_{Jd}."""
    key = ("basis_coords", J)
    cache = obj._lambda
    got = cache.get(key)
    if got is not None:
        return got
    r = obj.r
    bases = [obj.slot_basis(k) for k in range(len(obj))]
    out = {}
    for e in obj.comps:
        val = r.one()
        for k in range(len(obj)):
            b = bases[k][J[k]]
            if b.is_constant():
                continue
            val = val * twist(r, obj.prefix_pi(e[:k + 1]), b)
        out[e] = val
    cache[key] = out
    return out


def coords(obj: LocObject, elem: Mapping[Comp, Poly]) -> Vector:
    """Coordinate vector of sum_J elem[J] * b_J."""
    out: Dict[Comp, object] = {}
    for J, c in elem.items():
        if c.is_zero():
            continue
        for e, v in basis_coords(obj, J).items():
            t = c * v
            out[e] = out[e] + t if e in out else t
    return {e: RatFunc.from_poly(v) for e, v in out.items() if not v.is_zero()}


def expand(obj: LocObject, vec: Mapping[Comp, object], integral: bool = True) -> Dict[Comp, object]:
    """Inverse of ``coords``: peel the last slot repeatedly.

    With ``integral`` every intermediate coordinate must be a polynomial and
    the result maps J to Poly; otherwise the result maps J to RatFunc.
    """
    r = obj.r
    d = len(obj)
    zero = _rf(r, 0)
    # current: dict suffix J-tail -> vector over prefix components
    current = {(): {e: _rf(r, v) for e, v in vec.items() if not _is_zero(v)}}
    for k in range(d - 1, -1, -1):
        letter = obj.word[k]
        nxt: Dict[Comp, Dict[Comp, RatFunc]] = {}
        for tail, v in current.items():
            prefixes = {e[:k] for e in v}
            for ep in prefixes:
                P = obj.prefix_pi(ep)
                if isinstance(letter, Thick):
                    vals = [v.get(ep + (w,), zero) for w in range(6)]
                    us = _peel_thick(r, letter, P, vals, integral, ep)
                else:
                    us = _peel_thin(r, letter, P, v.get(ep + (0,), zero), v.get(ep + (1,), zero), integral, ep)
                for j, u in enumerate(us):
                    if u.is_zero():
                        continue
                    nxt.setdefault((j,) + tail, {})[ep] = u
        current = nxt
    out = {}
    for J, v in current.items():
        val = v.get((), zero)
        if val.is_zero():
            continue
        if integral:
            if not val.is_poly():
                raise NotIntegral(J, f"coefficient {val}")
            p = val.to_poly()
            if r.ring.kind == "Z":
                if not all(isinstance(c, int) or getattr(c, "denominator", 1) == 1 for c in p.terms.values()):
                    raise NotIntegral(J, f"coefficient {p} is not integral over Z")
                p = p.change_ring(r.ring)
            out[J] = p
        else:
            out[J] = val
    return out


def _require_poly(x: RatFunc, where, integral: bool) -> RatFunc:
    if integral and not x.is_poly():
        raise NotIntegral(where, f"denominator {x.den_poly()} survives")
    return x


def _peel_thin(r, s, P, v0, v1, integral, where):
    vp = r.varpi[s]
    den = twist(r, P, vp - r.reflect(s, vp))
    u1 = _require_poly((v0 - v1) / den, where, integral)
    u0 = v0 - u1 * twist(r, P, vp)
    return [u0, u1]


def _thick_tables(r: Realization, T: Thick):
    cache = _cache(r, "thick_tables")
    got = cache.get(T)
    if got is None:
        h, wt = _thick_generators(r, T)
        words = thick_words(T)
        els = [r.element(w) for w in words]
        got = ([g.apply(h) for g in els], [g.apply(wt) for g in els])
        cache[T] = got
    return got


def _peel_thick(r, T, P, vals, integral, where):
    wh, wwt = _thick_tables(r, T)
    G0, G1, ys = [], [], []
    for rep in _THICK_REPS:
        partner = _THICK_T_PARTNER[rep]
        den = twist(r, P, wwt[rep] - wwt[partner])
        g1 = _require_poly((vals[rep] - vals[partner]) / den, where, integral)
        g0 = vals[rep] - g1 * twist(r, P, wwt[rep])
        G0.append(g0)
        G1.append(g1)
        ys.append(twist(r, P, wh[rep]))
    U = [None] * 6
    for G, b in ((G0, 0), (G1, 1)):
        y0, y1, y2 = ys
        d01 = _require_poly((G[1] - G[0]) / (y1 - y0), where, integral)
        d12 = _require_poly((G[2] - G[1]) / (y2 - y1), where, integral)
        u2 = _require_poly((d12 - d01) / (y2 - y0), where, integral)
        u1 = d01 - u2 * (y0 + y1)
        u0 = G[0] - u1 * y0 - u2 * (y0 * y0)
        for a, u in enumerate((u0, u1, u2)):
            U[_THICK_BASIS.index((a, b))] = u
    return U


def expand_integral(obj: LocObject, vec: Mapping[Comp, object]) -> Dict[Comp, Poly]:
    return expand(obj, vec, integral=True)


# ---------------------------------------------------------------------------
# maps in the left bases
# ---------------------------------------------------------------------------

class IntegralMap:
    """A bimodule map recorded by the images of the left basis: F(b_J) = sum_L rows[J][L] b'_L."""

    __slots__ = ("source", "target", "rows")

    def __init__(self, source: LocObject, target: LocObject, rows: Mapping[Comp, Mapping[Comp, Poly]]):
        self.source = source
        self.target = target
        clean = {}
        for J, row in rows.items():
            rr = {L: p for L, p in row.items() if not p.is_zero()}
            if rr:
                clean[J] = rr
        self.rows = clean

    @property
    def r(self):
        return self.source.r

    @classmethod
    def identity(cls, obj: LocObject) -> "IntegralMap":
        one = obj.r.one()
        return cls(obj, obj, {J: {J: one} for J in obj.basis})

    @classmethod
    def zero(cls, source, target):
        return cls(source, target, {})

    def is_zero(self) -> bool:
        return not self.rows

    def __add__(self, other: "IntegralMap") -> "IntegralMap":
        out = {J: dict(row) for J, row in self.rows.items()}
        for J, row in other.rows.items():
            tgt = out.setdefault(J, {})
            for L, p in row.items():
                tgt[L] = tgt[L] + p if L in tgt else p
        return IntegralMap(self.source, self.target, out)

    def scale(self, c) -> "IntegralMap":
        return IntegralMap(self.source, self.target,
                           {J: {L: p.scale(c) for L, p in row.items()} for J, row in self.rows.items()})

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, c):
        return self.scale(c)

    def __matmul__(self, other: "IntegralMap") -> "IntegralMap":
        """self o other."""
        if other.target.word != self.source.word:
            raise ValueError(f"cannot compose {self.source} with {other.target}")
        out = {}
        for J, row in other.rows.items():
            acc: Dict[Comp, Poly] = {}
            for L, p in row.items():
                for M, q in self.rows.get(L, {}).items():
                    t = p * q
                    acc[M] = acc[M] + t if M in acc else t
            out[J] = acc
        return IntegralMap(other.source, self.target, out)

    def __eq__(self, other):
        if not isinstance(other, IntegralMap):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def multiple_of(self, other: "IntegralMap"):
        """The scalar c with self == c * other, or None."""
        if other.is_zero():
            return 0 if self.is_zero() else None
        J = min(other.rows)
        L = min(other.rows[J])
        q = other.rows[J][L]
        p = self.rows.get(J, {}).get(L)
        if p is None:
            return 0 if self.is_zero() else None
        m = max(q.terms, key=lambda mm: (sum(mm), mm))
        if m not in p.terms:
            return None
        c = p.ring.fraction_field().div(p.terms[m], q.terms[m])
        return c if self == other.scale(c) else None

    def to_loc(self) -> LocMatrix:
        return integral_to_loc(self)

    def nnz(self) -> int:
        return sum(len(r) for r in self.rows.values())


def integral_to_loc(F: IntegralMap) -> LocMatrix:
    X, Y = F.source, F.target
    images = {J: coords(Y, row) for J, row in F.rows.items()}
    cols = {}
    for e in X.comps:
        inv = expand(X, {e: 1}, integral=False)
        col: Dict[Comp, object] = {}
        for J, c in inv.items():
            img = images.get(J)
            if not img:
                continue
            for k, v in img.items():
                t = c * v
                col[k] = col[k] + t if k in col else t
        cols[e] = col
    return LocMatrix(X, Y, cols)


def loc_to_integral(M: LocMatrix) -> IntegralMap:
    X, Y = M.source, M.target
    rows = {}
    for J in X.basis:
        v = apply_matrix(M, basis_coords(X, J))
        rows[J] = expand_integral(Y, v)
    return IntegralMap(X, Y, rows)


# ---------------------------------------------------------------------------
# Hom spaces
# ---------------------------------------------------------------------------

def _monomials(n: int, deg: int) -> List[Tuple[int, ...]]:
    if n == 0:
        return [()] if deg == 0 else []
    if n == 1:
        return [(deg,)]
    out = []
    for a in range(deg, -1, -1):
        for rest in _monomials(n - 1, deg - a):
            out.append((a,) + rest)
    return out


def right_generators(r: Realization) -> List[Poly]:
    """Variables whose right action, with the invariant linear forms, generates all of R."""
    cache = _cache(r, "right_generators")
    if "v" in cache:
        return cache["v"]
    inv = _linear_invariants(r, list(r.generators))
    n = r.nvars
    rows = [dict(enumerate(v)) for v in inv]
    rows = [{i: c for i, c in row.items() if c != 0} for row in rows]
    chosen = []
    base = linalg.rank(rows, r.ring)
    for i in range(n):
        trial = rows + [{j: 1} for j in chosen] + [{i: 1}]
        if linalg.rank(trial, r.ring) > base + len(chosen):
            chosen.append(i)
        if base + len(chosen) == n:
            break
    out = [r.var(i + 1) for i in chosen]
    cache["v"] = out
    return out


def right_action_matrix(obj: LocObject, x: Poly) -> Dict[Comp, Dict[Comp, Poly]]:
    """b_J * x expanded in the left basis."""
    key = ("right", x)
    got = obj._lambda.get(key)
    if got is not None:
        return got
    r = obj.r
    out = {}
    for J in obj.basis:
        v = {e: c * twist(r, obj.pi(e), x) for e, c in basis_coords(obj, J).items()}
        out[J] = expand_integral(obj, v)
    obj._lambda[key] = out
    return out


def hom_basis(X: LocObject, Y: LocObject, degree: int, cap: int = 200000) -> List[IntegralMap]:
    """Basis of the degree-``degree`` bimodule maps X -> Y over the base field."""
    r = X.r
    n = r.nvars
    F = r.ring.fraction_field()
    unknowns: Dict[Tuple[Comp, Comp], List[Tuple[Tuple[int, ...], int]]] = {}
    count = 0
    sx, sy = X.shift(), Y.shift()
    for J in X.basis:
        dj = 2 * X.basis_degree(J) - sx
        for L in Y.basis:
            m = degree + dj - (2 * Y.basis_degree(L) - sy)
            if m < 0 or m % 2:
                continue
            monos = _monomials(n, m // 2)
            unknowns[(J, L)] = [(mu, count + i) for i, mu in enumerate(monos)]
            count += len(monos)
            if count > cap:
                raise HomCapExceeded(f"Hom({X}, {Y}) in degree {degree} needs more than {cap} unknowns")
    if count == 0:
        return []
    by_J: Dict[Comp, List[Comp]] = {}
    for (J, L) in unknowns:
        by_J.setdefault(J, []).append(L)
    rows: Dict[tuple, Dict[int, object]] = {}

    def add(key, u, c):
        row = rows.setdefault(key, {})
        v = row.get(u, 0) + c
        if v == 0:
            row.pop(u, None)
        else:
            row[u] = v

    for xi, x in enumerate(right_generators(r)):
        RX = right_action_matrix(X, x)
        RY = right_action_matrix(Y, x)
        for J in X.basis:
            # sum_K RX[J][K] c_{K M}
            for K, rp in RX[J].items():
                for M in by_J.get(K, ()):
                    for mu, u in unknowns[(K, M)]:
                        for nu, a in rp.terms.items():
                            add((J, xi, M, tuple(p + q for p, q in zip(mu, nu))), u, a)
            # - sum_L c_{J L} RY[L][M]
            for L in by_J.get(J, ()):
                for M, rp in RY[L].items():
                    for mu, u in unknowns[(J, L)]:
                        for nu, a in rp.terms.items():
                            add((J, xi, M, tuple(p + q for p, q in zip(mu, nu))), u, -a)
    eqs = [row for row in rows.values() if row]
    null = linalg.nullspace(eqs, count, F)
    out = []
    for vec in null:
        maprows: Dict[Comp, Dict[Comp, Poly]] = {}
        for (J, L), monos in unknowns.items():
            terms = {mu: vec[u] for mu, u in monos if vec.get(u)}
            if terms:
                maprows.setdefault(J, {})[L] = Poly(r.ring, n, terms)
        out.append(IntegralMap(X, Y, maprows))
    return out


def hom_dimension(X: LocObject, Y: LocObject, degree: int, cap: int = 200000) -> int:
    return len(hom_basis(X, Y, degree, cap))


# ---------------------------------------------------------------------------
# generator matrices
# ---------------------------------------------------------------------------

def generator_columns(r: Realization, g: Generator) -> Dict[Comp, Dict[Comp, object]]:
    """Matrix of a single generator on its own boundary, as columns."""
    cache = _cache(r, "generators")
    got = cache.get(g)
    if got is not None:
        return got
    k = g.kind
    c = g.colors
    if k == "poly":
        out = {(): {(): _simplify(RatFunc.from_poly(g.poly))}}
    elif k == "id":
        n = 6 if isinstance(c[0], Thick) else 2
        out = {(i,): {(i,): 1} for i in range(n)}
    elif k == "enddot":
        out = {(0,): {(): 1}}
    elif k == "startdot":
        out = {(): {(0,): RatFunc.from_poly(r.alpha[c[0]])}}
    elif k == "split":
        out = {(0,): {(0, 0): 1, (1, 1): 1}, (1,): {(0, 1): 1, (1, 0): 1}}
    elif k == "merge":
        inv = RatFunc.inverse_linear(r.alpha[c[0]])
        out = {(0, 0): {(0,): inv}, (1, 1): {(0,): -inv}, (0, 1): {(1,): inv}, (1, 0): {(1,): -inv}}
    elif k == "cross":
        if r.graph.m(c[0], c[1]) != 2:
            raise ValueError(f"crossing needs commuting colors, got {c}")
        out = {(a, b): {(b, a): 1} for a in (0, 1) for b in (0, 1)}
    elif k == "six":
        out = _six_columns(r, c[0], c[1])
    elif k == "tsplit":
        out = _tsplit_columns(r, c[0], c[1])
    elif k == "tmerge":
        out = _tmerge_columns(r, c[0], c[1])
    elif k in ("tmerge_r", "tmerge_l", "tsplit_r", "tsplit_l"):
        out = evaluate(r, thick_trivalent_composite(g)).cols
    else:
        raise ValueError(f"unknown generator {k}")
    cache[g] = out
    return out


def generator_matrix(r: Realization, g: Generator) -> LocMatrix:
    return LocMatrix(loc_object(r, g.source), loc_object(r, g.target), generator_columns(r, g))


def _six_columns(r: Realization, a: str, b: str):
    if r.graph.m(a, b) != 3:
        raise ValueError(f"six-valent vertex needs m = 3, got colors {a}, {b}")
    X = loc_object(r, (a, b, a))
    Y = loc_object(r, (b, a, b))
    basis = hom_basis(X, Y, 0)
    if len(basis) != 1:
        raise ArithmeticError(f"degree-0 Hom({a}{b}{a}, {b}{a}{b}) has dimension {len(basis)}, expected 1")
    F = basis[0]
    one = (0, 0, 0)
    lead = F.rows.get(one, {}).get(one)
    if lead is None or not lead.is_constant():
        raise ArithmeticError("six-valent map does not send 1(x)1(x)1(x)1 to a multiple of itself")
    F = F.scale(r.ring.fraction_field().inv(lead.constant_value()))
    return integral_to_loc(F).cols


def _tsplit_columns(r: Realization, a: str, b: str):
    T = thick(a, b)
    src = loc_object(r, (T,))
    tgt = loc_object(r, (a, b, a))
    words = thick_words(T)
    els = [r.element(w) for w in words]
    out = {}
    for e in tgt.comps:
        p = tgt.pi(e)
        w = els.index(p)
        out.setdefault((w,), {})[e] = 1
    return out


def _tmerge_columns(r: Realization, a: str, b: str):
    T = thick(a, b)
    X = loc_object(r, (a, b, a))
    Y = loc_object(r, (T,))
    basis = hom_basis(X, Y, 0)
    if len(basis) != 1:
        raise ArithmeticError(f"degree-0 Hom({a}{b}{a}, {T}) has dimension {len(basis)}, expected 1")
    M = integral_to_loc(basis[0])
    split = LocMatrix(Y, X, _tsplit_columns(r, a, b))
    c = (M @ split).multiple_of(LocMatrix.identity(Y))
    if not c:
        raise ArithmeticError("thick merge o thick split is not an invertible multiple of the identity")
    return M.scale(r.ring.fraction_field().inv(c)).cols


def thick_trivalent_composite(g: Generator) -> MorphismSum:
    """Thick trivalent vertices as composites of thick splits/merges and thin trivalents."""
    from .diagrams import compose_all, identity, merge, split, tensor_all, tmerge, tsplit

    k, c = g.kind, g.colors
    if k in ("tmerge_r", "tsplit_r"):
        T, x = c
        y = T.t if x == T.s else T.s
        if k == "tmerge_r":
            # T x -> (x y x) x -> x y x -> T
            return compose_all(tmerge(x, y), tensor_all(identity([x, y]), merge(x)),
                               tensor_all(tsplit(x, y), identity([x])))
        return compose_all(tensor_all(tmerge(x, y), identity([x])), tensor_all(identity([x, y]), split(x)),
                           tsplit(x, y))
    x, T = c
    y = T.t if x == T.s else T.s
    if k == "tmerge_l":
        return compose_all(tmerge(x, y), tensor_all(merge(x), identity([y, x])),
                           tensor_all(identity([x]), tsplit(x, y)))
    return compose_all(tensor_all(identity([x]), tmerge(x, y)), tensor_all(split(x), identity([y, x])),
                       tsplit(x, y))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def apply_slice(r: Realization, sl, src: LocObject, vec: Mapping[Comp, object]) -> Dict[Comp, object]:
    out: Dict[Comp, object] = {}
    arities = [len(g.source) for g in sl]
    cols = [None if g.is_identity else generator_columns(r, g) for g in sl]
    for e, v in vec.items():
        states = [((), v)]
        pos = 0
        for g, ar, gc in zip(sl, arities, cols):
            ge = e[pos:pos + ar]
            if gc is None:
                states = [(tc + ge, c) for tc, c in states]
            else:
                col = gc.get(ge)
                if not col:
                    states = []
                    break
                P = None
                new = []
                for tg, ent in col.items():
                    if not _is_scalar(ent):
                        if P is None:
                            P = src.prefix_pi(e[:pos])
                        ent = twist(r, P, ent)
                    for tc, c in states:
                        new.append((tc + tg, _mul(ent, c)))
                states = new
            pos += ar
        for tc, c in states:
            out[tc] = _add(out[tc], c) if tc in out else c
    return {k: v for k, v in out.items() if not _is_zero(v)}


def evaluate(r: Realization, m: MorphismSum, columns: Optional[LocMatrix] = None) -> LocMatrix:
    """Matrix of a morphism; with ``columns`` the result is m o columns."""
    src = loc_object(r, m.source)
    tgt = loc_object(r, m.target)
    if columns is None:
        columns = LocMatrix.identity(src)
    elif columns.target.word != src.word:
        raise ValueError("columns do not land in the source of the morphism")
    total: Dict[Comp, Dict[Comp, object]] = {}
    for term, coeff in m.terms.items():
        cur = columns.cols
        word = term.source
        for sl in term.slices:
            obj = loc_object(r, word)
            cur = {k: apply_slice(r, sl, obj, vec) for k, vec in cur.items()}
            cur = {k: v for k, v in cur.items() if v}
            word = slice_target(sl)
        for k, vec in cur.items():
            tgt_col = total.setdefault(k, {})
            for e, v in vec.items():
                t = _mul(coeff, v)
                tgt_col[e] = _add(tgt_col[e], t) if e in tgt_col else t
    return LocMatrix(columns.source, tgt, total)


def equal_morphisms(r: Realization, a: MorphismSum, b: MorphismSum) -> bool:
    return evaluate(r, a) == evaluate(r, b)


# ---------------------------------------------------------------------------
# the differential on localized maps
# ---------------------------------------------------------------------------

def derive_entry(pd, x):
    """d on the fraction field; denominators are roots, so d(l)/l is a polynomial."""
    if _is_scalar(x):
        return 0
    r = pd.realization
    if isinstance(x, Poly):
        return pd.derive_poly(x)
    num = pd.derive_poly(x.num)
    corr = Poly.zero(r.ring.fraction_field(), r.nvars)
    for l, e in x.den:
        try:
            q = exact_div(pd.derive_poly(l), l)
        except NotDivisible as exc:
            raise ArithmeticError(f"d({l}) is not a multiple of {l}; cannot differentiate {x}") from exc
        corr = corr + q.scale(e)
    num = num - x.num * corr
    return _simplify(RatFunc(num, x.den))


def thin_lambda(pd, s: str) -> Tuple[Poly, Poly]:
    """Connection on the two pieces of B_s: d acts on the coordinate at e as d + lambda(e)."""
    g = pd.g[s]
    return (-g, -pd.realization.reflect(s, g))


def thick_lambda(pd, T: Thick) -> List[Poly]:
    """Connection on the six pieces of B_{s,t}, read off from the split that d kills."""
    from .differential import orientation_of

    r = pd.realization
    cache = _cache(r, "thick_lambda")
    key = (id(pd), T)
    got = cache.get(key)
    if got is not None:
        return got[1]
    o = orientation_of(pd, T.s, T.t)
    if pd.is_zero():
        out = [r.zero()] * 6
    else:
        if o is None:
            raise ValueError("the thick connection needs a good differential")
        x, y = (T.s, T.t) if o == "forward" else (T.t, T.s)
        obj = loc_object(r, (x, y, x))
        els = [r.element(w) for w in thick_words(T)]
        out = [None] * 6
        for e in obj.comps:
            w = els.index(obj.pi(e))
            lam = component_lambda(pd, obj, e)
            if out[w] is None:
                out[w] = lam
            elif out[w] != lam:
                raise ArithmeticError(f"thick connection is inconsistent at {thick_words(T)[w]}")
    cache[key] = (pd, out)
    return out


def component_lambda(pd, obj: LocObject, e: Comp) -> Poly:
    r = pd.realization
    total = r.zero()
    for k, letter in enumerate(obj.word):
        if isinstance(letter, Thick):
            lam = thick_lambda(pd, letter)[e[k]]
        else:
            lam = thin_lambda(pd, letter)[e[k]]
        if not lam.is_zero():
            total = total + obj.prefix_pi(e[:k]).apply(lam)
    return total


def object_lambda(pd, obj: LocObject) -> Dict[Comp, Poly]:
    key = ("Lambda", id(pd))
    got = obj._lambda.get(key)
    if got is None or got[0] is not pd:
        got = (pd, {e: component_lambda(pd, obj, e) for e in obj.comps})
        obj._lambda[key] = got
    return got[1]


def derive_matrix(pd, M: LocMatrix) -> LocMatrix:
    """d(M) = (entrywise d) + Lambda_target * M - M * Lambda_source."""
    LX = object_lambda(pd, M.source) if M.cols else {}
    LY = object_lambda(pd, M.target) if M.cols else {}
    out = {}
    for e, col in M.cols.items():
        new = {}
        for k, v in col.items():
            lam = LY[k] - LX[e]
            t = derive_entry(pd, v)
            if not lam.is_zero():
                t = _add(t, _mul(_rf(M.r, lam), v))
            new[k] = t
        out[e] = new
    return LocMatrix(M.source, M.target, out)


def derive_vector(pd, obj: LocObject, vec: Mapping[Comp, object]) -> Dict[Comp, object]:
    L = object_lambda(pd, obj)
    out = {}
    for e, v in vec.items():
        t = derive_entry(pd, v)
        if not L[e].is_zero():
            t = _add(t, _mul(_rf(obj.r, L[e]), v))
        out[e] = t
    return {e: v for e, v in out.items() if not _is_zero(v)}


def basis_derivative(pd, obj: LocObject) -> Dict[Comp, Dict[Comp, Poly]]:
    """d(b_J) expanded in the left basis."""
    key = ("dbasis", id(pd))
    got = obj._lambda.get(key)
    if got is not None and got[0] is pd:
        return got[1]
    out = {}
    for J in obj.basis:
        out[J] = expand_integral(obj, derive_vector(pd, obj, basis_coords(obj, J)))
    obj._lambda[key] = (pd, out)
    return out


def derive_integral(pd, F: IntegralMap) -> IntegralMap:
    """d(F)(b_J) = d(F(b_J)) - F(d(b_J)), all in the left bases."""
    DX = basis_derivative(pd, F.source)
    DY = basis_derivative(pd, F.target)
    out: Dict[Comp, Dict[Comp, Poly]] = {}

    def acc(J, M, p):
        row = out.setdefault(J, {})
        row[M] = row[M] + p if M in row else p

    for J, row in F.rows.items():
        for L, p in row.items():
            dp = pd.derive_poly(p)
            if not dp.is_zero():
                acc(J, L, dp)
            for M, q in DY.get(L, {}).items():
                acc(J, M, p * q)
    for J, drow in DX.items():
        for K, q in drow.items():
            for M, p in F.rows.get(K, {}).items():
                acc(J, M, -(q * p))
    return IntegralMap(F.source, F.target, out)
