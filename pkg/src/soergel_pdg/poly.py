"""Sparse multivariate polynomials, root-denominator fractions and derivations.

Polynomials live in k[x1..xn] with every variable in degree 2.  A ``Poly`` is
a map from exponent tuples to nonzero scalars; it is never mutated after
construction.  ``RatFunc`` is a fraction whose denominator is a product of
linear forms (in practice: roots), which is all the localization ever needs.
"""

from __future__ import annotations

import re
from fractions import Fraction
from itertools import product
from math import comb
from typing import Dict, Iterable, Iterator, Mapping, Sequence, Tuple

from .scalars import Q, Z, ScalarRing

Monomial = Tuple[int, ...]


class NotDivisible(ArithmeticError):
    """Raised by ``exact_div``; carries the nonzero remainder."""

    def __init__(self, dividend: "Poly", divisor: "Poly", remainder: "Poly"):
        self.dividend = dividend
        self.divisor = divisor
        self.remainder = remainder
        super().__init__(f"not divisible: ({dividend}) / ({divisor}) leaves remainder {remainder}")


class NonIntegralDividedPower(ArithmeticError):
    """A divided power d^k/k! left the integral form."""

    def __init__(self, k: int, witness):
        self.k = k
        self.witness = witness
        super().__init__(f"divided power of order {k} is not integral at {witness}")


def _mono_key(m: Monomial):
    return (sum(m), m)


class Poly:
    __slots__ = ("ring", "nvars", "terms", "_hash")

    def __init__(self, ring: ScalarRing, nvars: int, terms: Mapping[Monomial, object] | None = None,
                 _clean: bool = False):
        self.ring = ring
        self.nvars = nvars
        if terms is None:
            self.terms: Dict[Monomial, object] = {}
        elif _clean:
            self.terms = dict(terms)
        else:
            norm = ring.normalize
            out = {}
            for m, c in terms.items():
                c = norm(c)
                if c != 0:
                    if len(m) != nvars:
                        raise ValueError(f"monomial {m} has wrong length for {nvars} variables")
                    out[tuple(m)] = c
            self.terms = out
        self._hash = None

    # constructors ----------------------------------------------------------
    @classmethod
    def zero(cls, ring: ScalarRing, nvars: int) -> "Poly":
        return cls(ring, nvars, {}, _clean=True)

    @classmethod
    def const(cls, ring: ScalarRing, nvars: int, c) -> "Poly":
        return cls(ring, nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, ring: ScalarRing, nvars: int, i: int) -> "Poly":
        """The variable x_i (1-based)."""
        if not 1 <= i <= nvars:
            raise ValueError(f"variable x{i} out of range 1..{nvars}")
        e = [0] * nvars
        e[i - 1] = 1
        return cls(ring, nvars, {tuple(e): 1}, _clean=True)

    @classmethod
    def linear(cls, ring: ScalarRing, coeffs: Sequence) -> "Poly":
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = c
        return cls(ring, n, terms)

    @classmethod
    def parse(cls, text: str, ring: ScalarRing, nvars: int) -> "Poly":
        return _Parser(text, ring, nvars).parse()

    # basic queries ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_value(self):
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self.terms.get((0,) * self.nvars, 0)

    def degree(self) -> int:
        """Total degree in the variables (-1 for zero)."""
        return max((sum(m) for m in self.terms), default=-1)

    def grading(self) -> int:
        """Degree in the grading with deg x_i = 2; only meaningful when homogeneous."""
        return 2 * self.degree()

    def is_homogeneous(self) -> bool:
        degs = {sum(m) for m in self.terms}
        return len(degs) <= 1

    def is_linear_form(self) -> bool:
        return bool(self.terms) and all(sum(m) == 1 for m in self.terms)

    def linear_coeffs(self) -> list:
        """Coefficient vector of a linear form (the degree-one part)."""
        out = [0] * self.nvars
        for m, c in self.terms.items():
            if sum(m) == 1:
                out[m.index(1)] = c
        return out

    def coeff(self, m: Monomial):
        return self.terms.get(tuple(m), 0)

    def homogeneous_part(self, d: int) -> "Poly":
        return Poly(self.ring, self.nvars, {m: c for m, c in self.terms.items() if sum(m) == d}, _clean=True)

    def change_ring(self, ring: ScalarRing) -> "Poly":
        return Poly(ring, self.nvars, self.terms)

    def is_integral(self) -> bool:
        return all(isinstance(c, int) for c in self.terms.values())

    # arithmetic ------------------------------------------------------------
    def _check(self, other: "Poly"):
        if other.nvars != self.nvars:
            raise ValueError("polynomials in different numbers of variables")

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.ring, self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        norm = self.ring.normalize
        for m, c in other.terms.items():
            v = norm(out.get(m, 0) + c)
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return Poly(self.ring, self.nvars, out, _clean=True)

    __radd__ = __add__

    def __neg__(self):
        norm = self.ring.normalize
        return Poly(self.ring, self.nvars, {m: norm(-c) for m, c in self.terms.items()}, _clean=True)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def scale(self, c) -> "Poly":
        c = self.ring.normalize(c)
        if c == 0:
            return Poly.zero(self.ring, self.nvars)
        norm = self.ring.normalize
        return Poly(self.ring, self.nvars, {m: norm(v * c) for m, v in self.terms.items()}, _clean=True)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Poly):
            return NotImplemented
        self._check(other)
        if not self.terms or not other.terms:
            return Poly.zero(self.ring, self.nvars)
        out: Dict[Monomial, object] = {}
        n = self.nvars
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(m1[i] + m2[i] for i in range(n))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(self.ring, self.nvars, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = Poly.const(self.ring, self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.ring, self.nvars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def sort_key(self):
        return tuple(sorted(((_mono_key(m), str(c)) for m, c in self.terms.items()), reverse=True))

    # substitution and calculus --------------------------------------------
    def substitute(self, images: Sequence["Poly"]) -> "Poly":
        """Replace x_i by images[i-1] (a ring homomorphism)."""
        if len(images) != self.nvars:
            raise ValueError("wrong number of images")
        if not self.terms:
            return self
        ring = self.ring
        m_images = images[0].nvars
        result: Dict[Monomial, object] = {}
        powers: Dict[Tuple[int, int], Poly] = {}
        for m, c in self.terms.items():
            term = Poly.const(ring, m_images, c)
            for i, e in enumerate(m):
                if e:
                    key = (i, e)
                    if key not in powers:
                        powers[key] = images[i] ** e
                    term = term * powers[key]
            for mm, cc in term.terms.items():
                result[mm] = result.get(mm, 0) + cc
        return Poly(ring, m_images, result)

    def permute(self, perm: Sequence[int]) -> "Poly":
        """Apply x_i -> x_{perm[i]} (0-based images) to every monomial."""
        n = self.nvars
        out = {}
        for m, c in self.terms.items():
            e = [0] * n
            for i, a in enumerate(m):
                if a:
                    e[perm[i]] = a
            out[tuple(e)] = c
        return Poly(self.ring, n, out, _clean=True)

    def partial(self, i: int) -> "Poly":
        """Partial derivative with respect to x_i (1-based)."""
        j = i - 1
        out = {}
        for m, c in self.terms.items():
            if m[j]:
                e = list(m)
                e[j] -= 1
                out[tuple(e)] = c * m[j]
        return Poly(self.ring, self.nvars, out)

    def evaluate(self, point: Sequence):
        total = 0
        for m, c in self.terms.items():
            v = c
            for x, e in zip(point, m):
                if e:
                    v = v * x ** e
            total += v
        return self.ring.normalize(total)

    # text ------------------------------------------------------------------
    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"Poly({format_poly(self)!r})"


def format_poly(f: Poly) -> str:
    """Canonical text: graded order, larger monomials first, e.g. ``x1^2*x2 - 3*x3``."""
    if not f.terms:
        return "0"
    pieces = []
    for m in sorted(f.terms, key=_mono_key, reverse=True):
        c = f.terms[m]
        mono = "*".join(f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}" for i, e in enumerate(m) if e)
        neg = False
        if f.ring.kind != "Fp" and c < 0:
            neg, c = True, -c
        if mono:
            body = mono if c == 1 else f"{c}*{mono}"
        else:
            body = str(c)
        if not pieces:
            pieces.append(("-" if neg else "") + body)
        else:
            pieces.append((" - " if neg else " + ") + body)
    return "".join(pieces)


class _Parser:
    _token = re.compile(r"\s*(?:(\d+)|x(\d+)|(.))")

    def __init__(self, text: str, ring: ScalarRing, nvars: int):
        self.ring = ring
        self.n = nvars
        self.tokens = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            mt = self._token.match(text, pos)
            if mt is None or mt.end() == pos:
                break
            num, var, sym = mt.groups()
            if num is not None:
                self.tokens.append(("num", int(num)))
            elif var is not None:
                self.tokens.append(("var", int(var)))
            elif sym is not None and not sym.isspace():
                self.tokens.append(("sym", sym))
            pos = mt.end()
        self.i = 0
        self.text = text

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def _take(self):
        tok = self._peek()
        self.i += 1
        return tok

    def _fail(self, msg):
        raise ValueError(f"cannot parse polynomial {self.text!r}: {msg}")

    def parse(self) -> Poly:
        if not self.tokens:
            self._fail("empty input")
        out = self._sum()
        if self.i != len(self.tokens):
            self._fail(f"unexpected token {self._peek()[1]!r}")
        return out

    def _sum(self) -> Poly:
        sign = 1
        kind, val = self._peek()
        if kind == "sym" and val in "+-":
            self._take()
            sign = -1 if val == "-" else 1
        acc = self._product().scale(sign)
        while True:
            kind, val = self._peek()
            if kind == "sym" and val in "+-":
                self._take()
                term = self._product()
                acc = acc + term if val == "+" else acc - term
            else:
                return acc

    def _product(self) -> Poly:
        acc = self._power()
        while True:
            kind, val = self._peek()
            if kind == "sym" and val == "*":
                self._take()
                acc = acc * self._power()
            elif kind == "sym" and val == "/":
                self._take()
                kind2, den = self._take()
                if kind2 != "num":
                    self._fail("only numeric denominators are allowed")
                acc = acc.scale(Fraction(1, den) if self.ring.kind != "Fp" else self.ring.inv(den))
            elif kind in ("var", "num") or (kind == "sym" and val == "("):
                acc = acc * self._power()
            else:
                return acc

    def _power(self) -> Poly:
        base = self._atom()
        kind, val = self._peek()
        if kind == "sym" and val == "^":
            self._take()
            kind2, e = self._take()
            if kind2 != "num":
                self._fail("exponent must be a nonnegative integer")
            return base ** e
        return base

    def _atom(self) -> Poly:
        kind, val = self._take()
        if kind == "num":
            return Poly.const(self.ring, self.n, val)
        if kind == "var":
            if not 1 <= val <= self.n:
                self._fail(f"variable x{val} outside x1..x{self.n}")
            return Poly.var(self.ring, self.n, val)
        if kind == "sym" and val == "(":
            inner = self._sum()
            kind2, val2 = self._take()
            if not (kind2 == "sym" and val2 == ")"):
                self._fail("missing ')'")
            return inner
        if kind == "sym" and val == "-":
            return -self._atom()
        self._fail(f"unexpected token {val!r}")


# ---------------------------------------------------------------------------
# exact division
# ---------------------------------------------------------------------------

def _lex_lead(f: Poly) -> Monomial:
    return max(f.terms)


def exact_div(f: Poly, g: Poly) -> Poly:
    """Return h with f = g*h, or raise ``NotDivisible`` carrying the remainder."""
    if g.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    f._check(g)
    ring = f.ring
    if not f.terms:
        return f
    lg = _lex_lead(g)
    cg = g.terms[lg]
    g_items = list(g.terms.items())
    rem = dict(f.terms)
    quot: Dict[Monomial, object] = {}
    leftover: Dict[Monomial, object] = {}
    n = f.nvars
    norm = ring.normalize
    while rem:
        lm = max(rem)
        lc = rem[lm]
        shift = tuple(lm[i] - lg[i] for i in range(n))
        ok = all(s >= 0 for s in shift)
        if ok:
            try:
                qc = ring.exact_div(lc, cg)
            except ArithmeticError:
                ok = False
        if not ok:
            leftover[lm] = lc
            del rem[lm]
            continue
        quot[shift] = qc
        for m, c in g_items:
            mm = tuple(m[i] + shift[i] for i in range(n))
            v = norm(rem.get(mm, 0) - qc * c)
            if v:
                rem[mm] = v
            else:
                rem.pop(mm, None)
    if leftover:
        raise NotDivisible(f, g, Poly(ring, n, leftover))
    return Poly(ring, n, quot, _clean=True)


def divides(g: Poly, f: Poly) -> bool:
    try:
        exact_div(f, g)
        return True
    except NotDivisible:
        return False


# ---------------------------------------------------------------------------
# fractions with linear-form denominators
# ---------------------------------------------------------------------------

def normalize_linear(lf: Poly) -> Tuple[Poly, object]:
    """Write a linear form as unit * monic form (first nonzero coefficient 1)."""
    if not lf.is_linear_form():
        raise ValueError(f"{lf} is not a linear form")
    lead = max(lf.terms)  # lexicographically largest = smallest variable index
    c = lf.terms[lead]
    ring = lf.ring.fraction_field()
    monic = Poly(ring, lf.nvars, {m: ring.div(v, c) for m, v in lf.terms.items()})
    return monic, c


class RatFunc:
    """num / prod(factor^exp) with monic linear factors, reduced.

    The representation is canonical: numerator coefficients live in the
    fraction field of the ground ring and no factor divides the numerator.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly, den: Tuple[Tuple[Poly, int], ...] = (), _reduced: bool = False):
        if num.ring.kind == "Z":
            num = num.change_ring(Q)
        if not _reduced:
            num, den = _reduce(num, den)
        self.num = num
        self.den = den
        self._hash = None

    @classmethod
    def from_poly(cls, f: Poly) -> "RatFunc":
        return cls(f, (), _reduced=True) if f.ring.kind != "Z" else cls(f.change_ring(Q), (), _reduced=True)

    @classmethod
    def inverse_linear(cls, lf: Poly) -> "RatFunc":
        monic, c = normalize_linear(lf)
        ring = monic.ring
        return cls(Poly.const(ring, lf.nvars, ring.inv(c)), ((monic, 1),), _reduced=True)

    @property
    def ring(self) -> ScalarRing:
        return self.num.ring

    @property
    def nvars(self) -> int:
        return self.num.nvars

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self):
        return not self.num.is_zero()

    def is_poly(self) -> bool:
        return not self.den

    def to_poly(self) -> Poly:
        if self.den:
            raise ValueError(f"{self} is not a polynomial")
        return self.num

    def den_poly(self) -> Poly:
        out = Poly.const(self.num.ring, self.num.nvars, 1)
        for f, e in self.den:
            out = out * f ** e
        return out

    def degree(self) -> int:
        """Homogeneous degree (numerator minus denominator); None for zero."""
        if self.num.is_zero():
            return None
        return self.num.degree() - sum(e for _, e in self.den)

    def _combine(self, other: "RatFunc", sign: int) -> "RatFunc":
        if not other.den and not self.den:
            return RatFunc(self.num + other.num if sign > 0 else self.num - other.num, (), _reduced=True)
        da = dict(self.den)
        db = dict(other.den)
        keys = set(da) | set(db)
        lcm = {k: max(da.get(k, 0), db.get(k, 0)) for k in keys}
        na = self.num
        nb = other.num
        for k in keys:
            ea = lcm[k] - da.get(k, 0)
            eb = lcm[k] - db.get(k, 0)
            if ea:
                na = na * k ** ea
            if eb:
                nb = nb * k ** eb
        num = na + nb if sign > 0 else na - nb
        return RatFunc(num, _sorted_den(lcm))

    def __add__(self, other):
        other = _as_ratfunc(other, self)
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_ratfunc(other, self)
        if other.num.is_zero():
            return self
        return self._combine(other, -1)

    def __rsub__(self, other):
        return _as_ratfunc(other, self) - self

    def __neg__(self):
        return RatFunc(-self.num, self.den, _reduced=True)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return RatFunc(self.num.scale(other), self.den, _reduced=True) if other else RatFunc.from_poly(
                Poly.zero(self.ring, self.nvars))
        other = _as_ratfunc(other, self)
        if self.num.is_zero() or other.num.is_zero():
            return RatFunc.from_poly(Poly.zero(self.ring, self.nvars))
        den = dict(self.den)
        for k, e in other.den:
            den[k] = den.get(k, 0) + e
        num = self.num * other.num
        return RatFunc(num, _sorted_den(den), _reduced=not den)

    __rmul__ = __mul__

    def divide_linear(self, lf: Poly) -> "RatFunc":
        return self * RatFunc.inverse_linear(lf)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return RatFunc(self.num.scale(self.ring.inv(other)), self.den, _reduced=True)
        if isinstance(other, Poly):
            other = RatFunc.from_poly(other)
        if not isinstance(other, RatFunc):
            return NotImplemented
        # the divisor must be scalar times a product of linear forms
        result = self
        for k, e in other.den:
            result = result * RatFunc.from_poly(k ** e)
        num = other.num
        if num.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        if num.is_constant():
            return result * num.ring.inv(num.constant_value())
        if not num.is_linear_form():
            raise ArithmeticError(f"cannot divide by {num}: only scalars and linear forms are supported")
        return result.divide_linear(num)

    def apply_linear_map(self, fn) -> "RatFunc":
        """Apply a ring automorphism (given on polynomials) to numerator and denominator."""
        num = fn(self.num)
        den = {}
        for k, e in self.den:
            monic, c = normalize_linear(fn(k))
            den[monic] = den.get(monic, 0) + e
            if c != 1:
                num = num.scale(num.ring.inv(c) ** e)
        return RatFunc(num, _sorted_den(den), _reduced=True)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            other = _as_ratfunc(other, self)
        if not isinstance(other, RatFunc):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __str__(self):
        if not self.den:
            return str(self.num)
        den = "*".join(f"({k})" if e == 1 else f"({k})^{e}" for k, e in self.den)
        return f"({self.num})/({den})"

    __repr__ = __str__


def _sorted_den(den: Mapping[Poly, int]) -> Tuple[Tuple[Poly, int], ...]:
    return tuple(sorted(((k, e) for k, e in den.items() if e), key=lambda ke: ke[0].sort_key()))


def _as_ratfunc(x, like: RatFunc) -> RatFunc:
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, Poly):
        return RatFunc.from_poly(x)
    if isinstance(x, (int, Fraction)):
        return RatFunc.from_poly(Poly.const(like.ring, like.nvars, x))
    raise TypeError(f"cannot combine RatFunc with {type(x).__name__}")


def _reduce(num: Poly, den) -> Tuple[Poly, Tuple[Tuple[Poly, int], ...]]:
    if isinstance(den, dict):
        items = list(den.items())
    else:
        items = list(den)
    merged: Dict[Poly, int] = {}
    for k, e in items:
        if e:
            monic, c = normalize_linear(k)
            if c != 1:
                num = num.scale(num.ring.inv(c) ** e)
            merged[monic] = merged.get(monic, 0) + e
    if num.is_zero():
        return num, ()
    for k in list(merged):
        while merged[k] > 0:
            try:
                num = exact_div(num, k)
            except NotDivisible:
                break
            merged[k] -= 1
    return num, _sorted_den(merged)


# ---------------------------------------------------------------------------
# derivations
# ---------------------------------------------------------------------------

class RingDerivation:
    """A derivation of k[x1..xn] given by the images of the variables."""

    __slots__ = ("images", "ring", "nvars", "_standard")

    def __init__(self, images: Sequence[Poly], check_degree: bool = True):
        if not images:
            raise ValueError("a derivation needs at least one variable")
        self.images = tuple(images)
        self.ring = images[0].ring
        self.nvars = len(images)
        for im in images:
            if im.nvars != self.nvars:
                raise ValueError("derivation images live in the wrong ring")
            if check_degree and not im.is_zero() and not (im.is_homogeneous() and im.degree() == 2):
                raise ValueError(f"derivation image {im} is not homogeneous quadratic")
        self._standard = all(im == Poly.var(self.ring, self.nvars, i + 1) ** 2
                             for i, im in enumerate(self.images))

    @classmethod
    def standard(cls, ring: ScalarRing, n: int) -> "RingDerivation":
        return cls([Poly.var(ring, n, i) ** 2 for i in range(1, n + 1)])

    @classmethod
    def zero(cls, ring: ScalarRing, n: int) -> "RingDerivation":
        return cls([Poly.zero(ring, n) for _ in range(n)])

    @property
    def is_standard(self) -> bool:
        return self._standard

    def __call__(self, f: Poly) -> Poly:
        return derive(self, f)

    def __eq__(self, other):
        return isinstance(other, RingDerivation) and self.images == other.images

    def __hash__(self):
        return hash(self.images)

    def change_ring(self, ring: ScalarRing) -> "RingDerivation":
        return RingDerivation([im.change_ring(ring) for im in self.images], check_degree=False)

    def __repr__(self):
        return "RingDerivation(" + ", ".join(f"d(x{i + 1})={im}" for i, im in enumerate(self.images)) + ")"


def derive(D: RingDerivation, f: Poly) -> Poly:
    """Apply D with the Leibniz rule."""
    if f.nvars != D.nvars:
        raise ValueError("derivation and polynomial in different rings")
    out = Poly.zero(f.ring, f.nvars)
    for i in range(1, f.nvars + 1):
        img = D.images[i - 1]
        if img.is_zero():
            continue
        p = f.partial(i)
        if p:
            out = out + p * img
    return out


def iterate(D: RingDerivation, k: int, f: Poly) -> Poly:
    for _ in range(k):
        f = derive(D, f)
    return f


def _standard_divided_power_monomial(ring: ScalarRing, m: Monomial, k: int) -> Dict[Monomial, int]:
    n = len(m)
    out: Dict[Monomial, int] = {}
    active = [i for i in range(n) if m[i]]
    if not active:
        return {m: 1} if k == 0 else {}
    for split in _compositions(k, len(active)):
        coeff = 1
        e = list(m)
        for idx, kk in zip(active, split):
            coeff *= comb(m[idx] + kk - 1, kk)
            e[idx] += kk
        if coeff:
            t = tuple(e)
            out[t] = out.get(t, 0) + coeff
    return out


def _compositions(k: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, parts - 1):
            yield (first,) + rest


def divided_power(D: RingDerivation, k: int, f: Poly) -> Poly:
    """D^k(f)/k!, exact.

    The standard derivation uses the closed binomial formula (valid over any
    ring); other derivations divide the iterate by k! and raise
    ``NonIntegralDividedPower`` when the quotient leaves the ground ring.
    """
    if k < 0:
        raise ValueError("negative order")
    ring = f.ring
    if D.is_standard:
        out: Dict[Monomial, object] = {}
        for m, c in f.terms.items():
            for mm, b in _standard_divided_power_monomial(ring, m, k).items():
                out[mm] = out.get(mm, 0) + c * b
        return Poly(ring, f.nvars, out)
    fact = ring.factorial(k)
    if ring.kind == "Fp" and fact == 0:
        raise NonIntegralDividedPower(k, "k! vanishes in the ground field")
    it = iterate(D, k, f)
    out = {}
    for m, c in it.terms.items():
        try:
            out[m] = ring.exact_div(c, fact)
        except ArithmeticError:
            raise NonIntegralDividedPower(k, Poly(ring, f.nvars, {m: 1})) from None
    return Poly(ring, f.nvars, out)


def binom_general(top: int, k: int) -> int:
    """Binomial coefficient C(top, k) for any integer top (falling factorial / k!)."""
    if k < 0:
        return 0
    num = 1
    for i in range(k):
        num *= top - i
    den = 1
    for i in range(2, k + 1):
        den *= i
    return num // den
