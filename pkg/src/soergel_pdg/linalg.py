"""Exact sparse linear algebra over Q or F_p.

Rows are dicts ``{column: value}``.  Everything here is plain Gaussian
elimination; the systems that show up are large but extremely sparse, so
pivots are chosen to keep fill-in low.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, Sequence

from .scalars import ScalarRing

Row = Dict[int, object]


def _field(ring: ScalarRing) -> ScalarRing:
    return ring.fraction_field()


def echelon(rows: Iterable[Row], ring: ScalarRing) -> Dict[int, Row]:
    """Reduced row echelon form as ``{pivot column: row}`` (pivot entry 1)."""
    F = _field(ring)
    norm = F.normalize
    pivots: Dict[int, Row] = {}
    for row in rows:
        r = {c: norm(v) for c, v in row.items()}
        r = {c: v for c, v in r.items() if v != 0}
        # reduce against existing pivots
        changed = True
        while changed and r:
            changed = False
            for c in [c for c in r if c in pivots]:
                v = r.get(c)
                if not v:
                    continue
                for cc, pv in pivots[c].items():
                    nv = norm(r.get(cc, 0) - v * pv)
                    if nv:
                        r[cc] = nv
                    else:
                        r.pop(cc, None)
                changed = True
        if not r:
            continue
        # pick the sparsest-looking pivot: smallest column for determinism
        pc = min(r)
        inv = F.inv(r[pc])
        r = {c: norm(v * inv) for c, v in r.items()}
        # back-substitute into existing pivots to keep the form reduced
        for key, prow in pivots.items():
            v = prow.get(pc)
            if v:
                for cc, rv in r.items():
                    nv = norm(prow.get(cc, 0) - v * rv)
                    if nv:
                        prow[cc] = nv
                    else:
                        prow.pop(cc, None)
        pivots[pc] = r
    return pivots


def rank(rows: Iterable[Row], ring: ScalarRing) -> int:
    return len(echelon(rows, ring))


def nullspace(rows: Iterable[Row], ncols: int, ring: ScalarRing) -> List[Row]:
    """Basis of {v : row . v = 0 for all rows}, one vector per free column."""
    piv = echelon(rows, ring)
    F = _field(ring)
    basis = []
    for free in range(ncols):
        if free in piv:
            continue
        v = {free: 1}
        for pc, prow in piv.items():
            c = prow.get(free)
            if c:
                v[pc] = F.normalize(-c)
        basis.append(v)
    return basis


def dense_rows(matrix: Sequence[Sequence]) -> List[Row]:
    return [{j: v for j, v in enumerate(row) if v != 0} for row in matrix]


def solve(rows: Sequence[Row], rhs: Sequence, ncols: int, ring: ScalarRing):
    """One solution of A x = b, or None when inconsistent."""
    aug = []
    for r, b in zip(rows, rhs):
        rr = dict(r)
        if b != 0:
            rr[ncols] = b
        aug.append(rr)
    piv = echelon(aug, ring)
    if ncols in piv:
        return None
    F = _field(ring)
    x = [0] * ncols
    for pc, prow in piv.items():
        x[pc] = F.normalize(prow.get(ncols, 0))
    return x


def determinant(matrix: Sequence[Sequence], ring: ScalarRing):
    F = _field(ring)
    m = [[F.normalize(v) for v in row] for row in matrix]
    n = len(m)
    det = 1
    for i in range(n):
        p = next((r for r in range(i, n) if m[r][i] != 0), None)
        if p is None:
            return 0
        if p != i:
            m[i], m[p] = m[p], m[i]
            det = -det
        det = F.normalize(det * m[i][i])
        inv = F.inv(m[i][i])
        for r in range(i + 1, n):
            f = F.normalize(m[r][i] * inv)
            if f:
                m[r] = [F.normalize(a - f * b) for a, b in zip(m[r], m[i])]
    return F.normalize(det)
