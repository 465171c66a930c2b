"""Hecke algebra of S_n in the standard basis, the Kazhdan-Lusztig basis, and
the graded ranks of Hom spaces between Bott-Samelson objects.

Normalization: H_s^2 = 1 + (v^{-1} - v) H_s and b_s = H_s + v, so that
b_w = H_w + sum_{y<w} h_{y,w} H_y with h_{y,w} in v Z[v].  The graded rank of
Hom(BS(x), BS(y)) as a free left R-module is tau(b_{x reversed} b_y), where
tau picks the coefficient of H_e; v^k counts generators of degree k.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb
from typing import Dict, List, Sequence, Tuple

from .coxeter import bruhat_leq, enumerate_sn, generator_index, perm_length, word_to_perm

Perm = Tuple[int, ...]
Laurent = Dict[int, int]
Element = Dict[Perm, Laurent]


def _ladd(a: Laurent, b: Laurent, scale: int = 1, shift: int = 0) -> None:
    for k, c in b.items():
        v = a.get(k + shift, 0) + scale * c
        if v:
            a[k + shift] = v
        else:
            a.pop(k + shift, None)


def _swap(w: Perm, i: int) -> Perm:
    w = list(w)
    w[i - 1], w[i] = w[i], w[i - 1]
    return tuple(w)


def times_h(x: Element, i: int) -> Element:
    """x * H_{s_i}."""
    out: Element = {}
    for w, c in x.items():
        ws = _swap(w, i)
        if w[i - 1] < w[i]:  # ws > w
            _ladd(out.setdefault(ws, {}), c)
        else:
            _ladd(out.setdefault(ws, {}), c)
            _ladd(out.setdefault(w, {}), c, 1, -1)
            _ladd(out.setdefault(w, {}), c, -1, 1)
    return {w: c for w, c in out.items() if c}


def times_b(x: Element, i: int) -> Element:
    """x * b_{s_i}."""
    out = times_h(x, i)
    for w, c in x.items():
        _ladd(out.setdefault(w, {}), c, 1, 1)
    return {w: c for w, c in out.items() if c}


def identity_element(n: int) -> Element:
    return {tuple(range(1, n + 1)): {0: 1}}


def bott_samelson(word: Sequence[str], n: int) -> Element:
    x = identity_element(n)
    for s in word:
        x = times_b(x, generator_index(s))
    return x


def tau(x: Element, n: int) -> Laurent:
    return dict(x.get(tuple(range(1, n + 1)), {}))


def add(a: Element, b: Element, scale: int = 1) -> Element:
    out = {w: dict(c) for w, c in a.items()}
    for w, c in b.items():
        _ladd(out.setdefault(w, {}), c, scale)
    return {w: c for w, c in out.items() if c}


def scale_laurent(x: Element, p: Laurent) -> Element:
    out: Element = {}
    for w, c in x.items():
        acc: Laurent = {}
        for k, a in c.items():
            for j, b in p.items():
                acc[k + j] = acc.get(k + j, 0) + a * b
        acc = {k: v for k, v in acc.items() if v}
        if acc:
            out[w] = acc
    return out


@lru_cache(maxsize=None)
def kl_basis(n: int) -> Dict[Perm, Dict[Perm, Tuple[Tuple[int, int], ...]]]:
    """b_w for every w in S_n, built by b_w = b_{w'} b_s - sum mu(z, w') b_z."""
    elems = sorted(enumerate_sn(n).items(), key=lambda kv: len(kv[1]))
    basis: Dict[Perm, Element] = {}
    for w, word in elems:
        if not word:
            basis[w] = identity_element(n)
            continue
        wp = word_to_perm(word[:-1], n)
        i = generator_index(word[-1])
        x = times_b(basis[wp], i)
        for z, bz in sorted(basis.items(), key=lambda kv: -perm_length(kv[0])):
            if z == w:
                continue
            coeff = x.get(z, {})
            c0 = coeff.get(0, 0)
            if c0:
                x = add(x, bz, -c0)
        basis[w] = x
    return {w: {y: tuple(sorted(c.items())) for y, c in b.items()} for w, b in basis.items()}


def kl_element(w: Perm, n: int) -> Element:
    return {y: dict(c) for y, c in kl_basis(n)[w].items()}


def kl_poly(y: Perm, w: Perm, n: int) -> Laurent:
    """h_{y,w}: the coefficient of H_y in b_w."""
    return dict(kl_basis(n)[w].get(y, ()))


def mu(z: Perm, w: Perm, n: int) -> int:
    return kl_poly(z, w, n).get(1, 0)


def decompose(x: Element, n: int) -> Dict[Perm, Laurent]:
    """Write x in the KL basis (x must be self-dual with positive coefficients for a real decomposition)."""
    x = {w: dict(c) for w, c in x.items()}
    out: Dict[Perm, Laurent] = {}
    while x:
        w = max(x, key=perm_length)
        c = x[w]
        out[w] = dict(c)
        x = add(x, scale_laurent(kl_element(w, n), c), -1)
    return out


def product_decomposition(w: Perm, s: str, n: int) -> Dict[Perm, int]:
    """b_w b_s in the KL basis (all coefficients are constants when ws > w)."""
    x = times_b(kl_element(w, n), generator_index(s))
    dec = decompose(x, n)
    out = {}
    for z, c in dec.items():
        if set(c) != {0}:
            raise ValueError(f"b_w b_s has a shifted summand at {z}: {c}")
        out[z] = c[0]
    return out


def hom_graded_rank(x: Sequence[str], y: Sequence[str], n: int) -> Laurent:
    """Graded rank of Hom(BS(x), BS(y)) as a free left R-module."""
    return tau(bott_samelson(tuple(reversed(x)) + tuple(y), n), n)


def hom_dimension_oracle(x: Sequence[str], y: Sequence[str], n: int, degree: int, nvars: int) -> int:
    """Dimension over the base field of the degree-``degree`` part of Hom(BS(x), BS(y))."""
    total = 0
    for j, c in hom_graded_rank(x, y, n).items():
        m = degree - j
        if m >= 0 and m % 2 == 0:
            total += c * comb(m // 2 + nvars - 1, nvars - 1)
    return total


def lower_summands(w: Perm, s: str, n: int) -> List[Perm]:
    """The z != ws with B_z a summand of B_w B_s (for ws > w)."""
    ws = _swap(w, generator_index(s))
    dec = product_decomposition(w, s, n)
    out = []
    for z, c in dec.items():
        if z == ws:
            continue
        if c != 1:
            raise ValueError(f"multiplicity {c} for {z} in B_w B_s")
        out.append(z)
    return sorted(out, key=lambda z: (perm_length(z), z))


def bruhat_sorted(perms: Sequence[Perm]) -> List[Perm]:
    """A linear extension of the Bruhat order (shorter first)."""
    return sorted(perms, key=lambda p: (perm_length(p), p))


__all__ = [
    "times_h", "times_b", "bott_samelson", "tau", "kl_basis", "kl_poly", "mu", "decompose",
    "product_decomposition", "hom_graded_rank", "hom_dimension_oracle", "lower_summands",
    "bruhat_sorted", "bruhat_leq",
]
