"""The length-14 Bott-Samelson object in S_8 whose summand B_y admits no
filtration compatible with the standard differential.

X = BS(s3 s2 s1 s5 s4 s3 s2 s6 s5 s4 s3 s7 s6 s5) and B_y = B_{s3s2s3} B_{s5s6s5},
written with the thick letters T(s2,s3) and T(s5,s6).  The projection p dots
off the strands colored 1, 4, 7, moves the {2,3} strands left of the {5,6}
strands with crossings, and merges each group into its thick strand; i is p
turned upside down.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional

from . import diagrams as D
from .coxeter import Realization, standard_type_a
from .diagrams import MorphismSum, compose_all, compose_v, identity, on_strand, poly_on, tensor_all, thick
from .differential import standard_good
from .localize import LocMatrix, derive_matrix, evaluate
from .scalars import Z

WORD = tuple(f"s{i}" for i in (3, 2, 1, 5, 4, 3, 2, 6, 5, 4, 3, 7, 6, 5))
DOTTED = ("s1", "s4", "s7")
LEFT = ("s2", "s3")


def projection() -> MorphismSum:
    word = WORD
    m = identity(word)

    def step(pos, g):
        nonlocal word, m
        sl = on_strand(word, pos, g)
        m = compose_v(sl, m)
        word = sl.target

    for pos in sorted((k for k, c in enumerate(WORD) if c in DOTTED), reverse=True):
        step(pos, D.enddot(word[pos]))
    moved = True
    while moved:
        moved = False
        for k in range(len(word) - 1):
            if word[k] not in LEFT and word[k + 1] in LEFT:
                step(k, D.cross(word[k], word[k + 1]))
                moved = True
                break
    T, U = thick("s2", "s3"), thick("s5", "s6")
    step(0, D.tmerge("s3", "s2"))
    step(0, MorphismSum.gen(D.gen("tmerge_r", T, "s2")))
    step(0, MorphismSum.gen(D.gen("tmerge_r", T, "s3")))
    step(1, D.tmerge("s5", "s6"))
    step(1, MorphismSum.gen(D.gen("tmerge_r", U, "s6")))
    step(1, MorphismSum.gen(D.gen("tmerge_r", U, "s5")))
    return m


def inclusion() -> MorphismSum:
    return D.flip(projection())


def break_strand(word, pos) -> MorphismSum:
    return on_strand(word, pos, D.broken(word[pos]))


def minus_dp_closed_form(r: Realization, p: MorphismSum) -> MorphismSum:
    """Breaks on the second s3 strand and the last s6 strand, and x6 - x1 just right of the first s5 strand."""
    x = r.var
    return (compose_v(p, break_strand(WORD, 5)) + compose_v(p, break_strand(WORD, 12))
            + compose_v(p, poly_on(WORD, 4, x(6) - x(1))))


def di_closed_form(r: Realization, i: MorphismSum) -> MorphismSum:
    """The 180-degree rotation of the previous form composed with the diagram flip s_k <-> s_{8-k}."""
    x = r.var
    return (compose_v(break_strand(WORD, 8), i) + compose_v(break_strand(WORD, 1), i)
            + compose_v(poly_on(WORD, 10, x(8) - x(3)), i))


def _broken_split_merge(a: str, b: str, pos: int) -> MorphismSum:
    return compose_all(D.tmerge(a, b), on_strand((a, b, a), pos, D.broken(a)), D.tsplit(a, b))


def dpi_closed_form(r: Realization) -> MorphismSum:
    """x1 + x3 - x6 - x8 between the thick strands, minus each thick strand split open with its inner leg broken."""
    x = r.var
    T, U = thick("s2", "s3"), thick("s5", "s6")
    Y = (T, U)
    return (poly_on(Y, 1, x(1) + x(3) - x(6) - x(8))
            - tensor_all(_broken_split_merge("s3", "s2", 2), identity((U,)))
            - tensor_all(identity((T,)), _broken_split_merge("s5", "s6", 0)))


@dataclass
class S8Result:
    checks: Dict[str, bool] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(self.checks.values())

    def to_dict(self) -> dict:
        return {"checks": dict(self.checks), "ok": self.ok}


STAGES = ("pi = 2 id", "-d(p) closed form", "d(p) two routes agree", "d(i) closed form",
          "d(p)i closed form", "d(p)i nonzero")


def run(checkpoint: Optional[Path] = None, log: Callable[[str], None] = lambda s: None) -> S8Result:
    """Run every check, skipping stages already recorded in the checkpoint file."""
    done: Dict[str, bool] = {}
    if checkpoint and checkpoint.exists():
        done = json.loads(checkpoint.read_text()).get("checks", {})
    res = S8Result(dict(done))
    if all(s in done for s in STAGES):
        return res
    r = standard_type_a(8, Z)
    pd = standard_good(r)
    state: Dict[str, object] = {}

    def lazy(name, fn):
        if name not in state:
            state[name] = fn()
        return state[name]

    p = lazy("p", projection)
    i = lazy("i", inclusion)
    P = lambda: lazy("P", lambda: evaluate(r, p))
    I = lambda: lazy("I", lambda: evaluate(r, i))
    dP = lambda: lazy("dP", lambda: derive_matrix(pd, P()))

    def stage(name, fn):
        if name in res.checks:
            return
        t = time.perf_counter()
        res.checks[name] = bool(fn())
        res.timings[name] = time.perf_counter() - t
        log(f"{name}: {res.checks[name]}")
        if checkpoint:
            checkpoint.write_text(json.dumps({"checks": res.checks}, indent=1, sort_keys=True))

    stage("pi = 2 id", lambda: P() @ I() == LocMatrix.identity(P().target).scale(2))
    stage("-d(p) closed form", lambda: evaluate(r, minus_dp_closed_form(r, p)) == dP().scale(-1))
    stage("d(p) two routes agree", lambda: evaluate(r, D.derive(pd, p)) == dP())
    stage("d(i) closed form", lambda: evaluate(r, di_closed_form(r, i)) == derive_matrix(pd, I()))
    stage("d(p)i closed form", lambda: evaluate(r, dpi_closed_form(r)) == dP() @ I())
    stage("d(p)i nonzero", lambda: not (dP() @ I()).is_zero())
    return res
