"""Indecomposable objects B_w as images of idempotents on Bott-Samelson
objects, and the decomposition of B_w B_s.

Everything here works with maps recorded in the left bases (IntegralMap),
so no denominators appear.  For ws > w the summands of B_w B_s are B_{ws}
and the B_z with mu(z, w) != 0, all in degree 0; each B_z is split off with
a projection/inclusion pair taken from the degree-0 Hom spaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import hecke
from .coxeter import Realization, generator_index, perm_length, reduced_word, word_to_perm
from .localize import IntegralMap, LocObject, _cache, hom_basis, loc_object

Perm = Tuple[int, ...]


class DecompositionError(ArithmeticError):
    pass


class MultiplicityError(DecompositionError):
    pass


@dataclass
class KaroubiObject:
    """(BS(word), idem) with idem^2 = idem."""

    word: Tuple[str, ...]
    idem: IntegralMap
    label: str = ""

    @property
    def obj(self) -> LocObject:
        return self.idem.source

    def is_idempotent(self) -> bool:
        return self.idem @ self.idem == self.idem


@dataclass
class Summand:
    element: Perm
    name: str
    object: KaroubiObject
    incl: IntegralMap   # object.word -> ambient word
    proj: IntegralMap   # ambient word -> object.word


@dataclass
class Decomposition:
    ambient: KaroubiObject
    summands: List[Summand]
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def names(self) -> List[str]:
        return [s.name for s in self.summands]


def extend_right(F: IntegralMap, letters: Sequence[str]) -> IntegralMap:
    """F (x) id on extra letters to the right; the left bases simply concatenate."""
    r = F.r
    X = loc_object(r, F.source.word + tuple(letters))
    Y = loc_object(r, F.target.word + tuple(letters))
    tails = loc_object(r, tuple(letters)).basis
    rows = {}
    for J, row in F.rows.items():
        for t in tails:
            rows[J + t] = {L + t: p for L, p in row.items()}
    return IntegralMap(X, Y, rows)


def element_name(perm: Perm, names: Optional[Dict[str, str]] = None) -> str:
    """Name of a permutation by a reduced word, optionally with letters renamed."""
    word = reduced_word(perm)
    if not word:
        return "e"
    if names:
        return "".join(names.get(s, s) for s in word)
    return "".join(word)


def _perm_of(word, n) -> Perm:
    return word_to_perm(word, n)


def realize(r: Realization, w: Perm) -> KaroubiObject:
    """B_w as (BS(reduced word), idempotent), built recursively and cached."""
    cache = _cache(r, "indecomposables")
    got = cache.get(w)
    if got is not None:
        return got
    word = reduced_word(w)
    n = len(w)
    if len(word) <= 1:
        obj = loc_object(r, word)
        out = KaroubiObject(word, IntegralMap.identity(obj), element_name(w))
    else:
        parent = _perm_of(word[:-1], n)
        dec = decompose_product(r, parent, word[-1])
        top = dec.summands[0]
        out = top.object
    cache[w] = out
    return out


def _pairing_scalar(M: IntegralMap, e: IntegralMap):
    return M.multiple_of(e)


def decompose_product(r: Realization, w: Perm, s: str) -> Decomposition:
    """B_w B_s for ws > w: the top summand B_{ws} first, then the lower B_z in Bruhat order."""
    cache = _cache(r, "product_decompositions")
    key = (w, s)
    got = cache.get(key)
    if got is not None:
        return got
    n = len(w)
    i = generator_index(s)
    ws = list(w)
    ws[i - 1], ws[i] = ws[i], ws[i - 1]
    ws = tuple(ws)
    if perm_length(ws) < perm_length(w):
        raise ValueError("decompose_product needs ws > w")
    parent = realize(r, w)
    eX = extend_right(parent.idem, (s,))
    X = eX.source
    ambient = KaroubiObject(parent.word + (s,), eX, element_name(w) + "*" + s)
    lower = hecke.bruhat_sorted(hecke.lower_summands(w, s, n))
    pieces: List[Summand] = []
    for z in lower:
        K = realize(r, z)
        Z = K.obj
        incs = [eX @ h @ K.idem for h in hom_basis(Z, X, 0)]
        projs = [K.idem @ h @ eX for h in hom_basis(X, Z, 0)]
        found = None
        nonzero = 0
        for a, p in enumerate(projs):
            for b, inc in enumerate(incs):
                c = _pairing_scalar(p @ inc, K.idem)
                if c is None:
                    raise DecompositionError(f"p o i is not a multiple of e_z for {element_name(z)}")
                if c != 0:
                    nonzero += 1
                    if found is None:
                        found = (p.scale(r.ring.fraction_field().inv(c)), inc)
        if found is None:
            raise DecompositionError(f"B_{element_name(z)} is not a summand: the degree-0 pairing vanishes")
        rank = _pairing_rank(projs, incs, K.idem, r)
        if rank != 1:
            raise MultiplicityError(f"B_{element_name(z)} appears with multiplicity {rank}")
        pieces.append(Summand(z, element_name(z), K, found[1], found[0]))
    # triangular orthogonalization in Bruhat order
    ortho: List[Summand] = []
    for piece in pieces:
        inc, proj = piece.incl, piece.proj
        for prev in ortho:
            inc = inc - prev.incl @ (prev.proj @ inc)
            proj = proj - (proj @ prev.incl) @ prev.proj
        ortho.append(Summand(piece.element, piece.name, piece.object, inc, proj))
    e_top = eX
    for piece in ortho:
        e_top = e_top - piece.incl @ piece.proj
    top_obj = KaroubiObject(ambient.word, e_top, element_name(ws))
    top = Summand(ws, element_name(ws), top_obj, e_top, e_top)
    dec = Decomposition(ambient, [top] + ortho)
    dec.checks = verify_decomposition(dec)
    if not dec.ok:
        bad = [k for k, v in dec.checks.items() if not v]
        raise DecompositionError(f"decomposition of B_{element_name(w)} B_{s} fails: {bad}")
    cache[key] = dec
    return dec


def _pairing_rank(projs, incs, e, r) -> int:
    from . import linalg
    rows = []
    for p in projs:
        rows.append({b: c for b, inc in enumerate(incs) if (c := _pairing_scalar(p @ inc, e))})
    return linalg.rank(rows, r.ring) if rows else 0


def verify_decomposition(dec: Decomposition) -> Dict[str, bool]:
    """p_j i_k = delta_jk e_k and sum_j i_j p_j = e_X."""
    checks = {}
    total = None
    for j, a in enumerate(dec.summands):
        for k, b in enumerate(dec.summands):
            prod = a.proj @ b.incl
            if j == k:
                checks[f"p{a.name} i{b.name} = e"] = prod == a.object.idem
            else:
                checks[f"p{a.name} i{b.name} = 0"] = prod.is_zero()
        term = a.incl @ a.proj
        total = term if total is None else total + term
    checks["sum i p = e_X"] = total == dec.ambient.idem
    return checks


def top_idempotent(r: Realization, word: Sequence[str]) -> Tuple[IntegralMap, List[str]]:
    """Idempotent on BS(word) cutting out B_w, and the names of the summands peeled on the way.

    The word must be reduced; it is the word used for the realization when it
    matches the canonical reduced word, otherwise peeling is done along the
    given word.
    """
    word = tuple(word)
    n = len(r.generators) + 1
    if perm_length(word_to_perm(word, n)) != len(word):
        raise ValueError(f"{word} is not reduced")
    if len(word) <= 1:
        return IntegralMap.identity(loc_object(r, word)), []
    peeled: List[str] = []
    e = IntegralMap.identity(loc_object(r, word[:1]))
    for k in range(1, len(word)):
        prefix = word[:k]
        w = word_to_perm(prefix, n)
        s = word[k]
        eX = extend_right(e, (s,))
        X = eX.source
        lower = hecke.bruhat_sorted(hecke.lower_summands(w, s, n))
        for z in lower:
            K = realize(r, z)
            Z = K.obj
            incs = [eX @ h @ K.idem for h in hom_basis(Z, X, 0)]
            projs = [K.idem @ h @ eX for h in hom_basis(X, Z, 0)]
            pair = None
            for p in projs:
                for inc in incs:
                    c = _pairing_scalar(p @ inc, K.idem)
                    if c:
                        pair = (p.scale(r.ring.fraction_field().inv(c)), inc)
                        break
                if pair:
                    break
            if pair is None:
                raise DecompositionError(f"B_{element_name(z)} is not a summand of BS({''.join(word[:k + 1])})")
            p, inc = pair
            eX = eX - inc @ p
            peeled.append(element_name(z))
        e = eX
    return e, peeled
