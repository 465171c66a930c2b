"""Differential data: the derivation on R, the linear forms g_s and gbar_s,
the constraint checks, the six-valent coefficients and the classifier of
good differentials."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import isqrt
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import linalg
from .coxeter import Check, Orientation, Realization, consistent_orientations, orientation_ok
from .poly import Poly, RingDerivation, derive
from .scalars import ScalarRing


class StrictModeError(ValueError):
    """A differential that failed its potential checks was used downstream."""


@dataclass(frozen=True)
class PotentialDifferential:
    realization: Realization
    d: RingDerivation
    g: Mapping[str, Poly]
    gbar: Mapping[str, Poly]
    label: str = ""

    @property
    def ring(self) -> ScalarRing:
        return self.realization.ring

    def z(self, s: str) -> Poly:
        return self.g[s] + self.gbar[s]

    def _scalar(self, p: Poly):
        return p.constant_value() if not p.is_zero() else 0

    def kappa(self, s: str, t: str):
        """kappa_{st} = d_s(g_t)."""
        return self._scalar(self.realization.demazure(s, self.g[t]))

    def kappa_bar(self, s: str, t: str):
        """kappa-bar_{st} = d_s(gbar_t)."""
        return self._scalar(self.realization.demazure(s, self.gbar[t]))

    def derive_poly(self, f: Poly) -> Poly:
        return derive(self.d, f)

    def is_zero(self) -> bool:
        return all(im.is_zero() for im in self.d.images) and all(
            self.g[s].is_zero() and self.gbar[s].is_zero() for s in self.realization.generators)

    def change_ring(self, ring: ScalarRing) -> "PotentialDifferential":
        r = self.realization.change_ring(ring)
        return PotentialDifferential(r, self.d.change_ring(ring),
                                     {s: p.change_ring(ring) for s, p in self.g.items()},
                                     {s: p.change_ring(ring) for s, p in self.gbar.items()}, self.label)

    def to_dict(self) -> dict:
        gens = self.realization.generators
        return {
            "d": [str(im) for im in self.d.images],
            "g": {s: str(self.g[s]) for s in gens},
            "gbar": {s: str(self.gbar[s]) for s in gens},
            "label": self.label,
        }


def differential_from_dict(r: Realization, data: Mapping) -> PotentialDifferential:
    """Read a differential block: d images per variable plus g and gbar per generator.

    The shortcut ``{"preset": "standard"|"reverse"|"zero"}`` is also accepted.
    """
    preset = data.get("preset")
    if preset:
        if preset == "standard":
            return standard_good(r, forward=True)
        if preset == "reverse":
            return standard_good(r, forward=False)
        if preset == "zero":
            return zero_differential(r)
        raise ValueError(f"unknown differential preset {preset!r}")
    d_images = [r.poly(t) for t in data["d"]]
    if len(d_images) != r.nvars:
        raise ValueError(f"differential lists {len(d_images)} images for {r.nvars} variables")
    d = RingDerivation(d_images)
    g = {s: r.poly(data["g"][s]) for s in r.generators}
    if "gbar" in data:
        gbar = {s: r.poly(data["gbar"][s]) for s in r.generators}
    else:
        gbar = {s: r.reflect(s, g[s]) for s in r.generators}
    return PotentialDifferential(r, d, g, gbar, data.get("label", "config"))


def standard_derivation(r: Realization) -> RingDerivation:
    return RingDerivation.standard(r.ring, r.nvars)


def zero_differential(r: Realization) -> PotentialDifferential:
    zero = r.zero()
    return PotentialDifferential(r, RingDerivation.zero(r.ring, r.nvars),
                                 {s: zero for s in r.generators}, {s: zero for s in r.generators}, "zero")


def standard_good(r: Realization, forward: bool = True) -> PotentialDifferential:
    """Type A with d(x_i) = x_i^2 and g_{s_i} = x_i (forward) or x_{i+1} (reverse)."""
    g, gbar = {}, {}
    for s in r.generators:
        i = int(s[1:])
        gi = r.var(i) if forward else r.var(i + 1)
        g[s] = gi
        gbar[s] = r.reflect(s, gi)
    return PotentialDifferential(r, standard_derivation(r), g, gbar, "standard" if forward else "reverse")


def z_from_derivation(r: Realization, d: RingDerivation, s: str) -> Optional[Poly]:
    """The z_s with d(alpha_s) = alpha_s z_s, or None when alpha_s does not divide."""
    from .poly import NotDivisible, exact_div
    try:
        return exact_div(derive(d, r.alpha[s]), r.alpha[s])
    except NotDivisible:
        return None


# ---------------------------------------------------------------------------
# potential checks
# ---------------------------------------------------------------------------

@dataclass
class Report:
    checks: List[Check]
    flags: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failed(self) -> List[Check]:
        return [c for c in self.checks if not c.ok]

    def first_failure(self) -> Optional[Check]:
        return next((c for c in self.checks if not c.ok), None)


def check_potential(pd: PotentialDifferential) -> Report:
    r = pd.realization
    checks: List[Check] = []
    xs = [r.var(i) for i in range(1, r.nvars + 1)]
    for s in r.generators:
        for name, p in (("g", pd.g[s]), ("gbar", pd.gbar[s])):
            ok = p.is_zero() or p.is_linear_form()
            checks.append(Check(f"linear:{name}_{s}", ok, "" if ok else f"{name}_{s} = {p} is not linear"))
    for s in r.generators:
        bad = next((x for x in xs if pd.derive_poly(r.reflect(s, x)) != r.reflect(s, pd.derive_poly(x))), None)
        checks.append(Check(f"commutes:{s}", bad is None,
                            "" if bad is None else f"d({s}({bad})) != {s}(d({bad}))"))
    for s in r.generators:
        lhs = pd.derive_poly(r.alpha[s])
        rhs = r.alpha[s] * pd.z(s)
        checks.append(Check(f"d-alpha:{s}", lhs == rhs,
                            "" if lhs == rhs else f"d(alpha_{s}) = {lhs} but alpha_{s} z_{s} = {rhs}"))
        zs = pd.z(s)
        ok = r.is_invariant(s, zs)
        checks.append(Check(f"z-invariant:{s}", ok, "" if ok else f"{s}(z_{s}) = {r.reflect(s, zs)} != {zs}"))
    for s, t in combinations(r.generators, 2):
        m = r.graph.m(s, t)
        if m == 2:
            for a, b in ((s, t), (t, s)):
                ok = r.is_invariant(b, pd.z(a))
                checks.append(Check(f"z-distant:{a},{b}", ok, "" if ok else f"z_{a} not fixed by {b}"))
        else:
            for a, b in ((s, t), (t, s)):
                lhs = r.reflect(a, r.alpha[b]) * r.demazure(a, pd.z(b))
                rhs = r.demazure(a, r.alpha[b]) * (pd.z(a) - pd.z(b))
                checks.append(Check(f"proportional:{a},{b}", lhs == rhs,
                                    "" if lhs == rhs else f"{lhs} != {rhs}"))
            lhs = r.demazure(s, pd.z(t))
            rhs = -r.demazure(t, pd.z(s))
            checks.append(Check(f"zszt:{s},{t}", lhs == rhs, "" if lhs == rhs else f"{lhs} != {rhs}"))
    flags = []
    if r.ring.characteristic == 2:
        flags.append("characteristic-2: accepted with warning")
    return Report(checks, flags)


def require_potential(pd: PotentialDifferential, strict: bool = True) -> None:
    if not strict:
        return
    rep = check_potential(pd)
    if not rep.ok:
        c = rep.first_failure()
        raise StrictModeError(f"potential differential check {c.name} failed: {c.witness}")


# ---------------------------------------------------------------------------
# six-valent coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SixValentCoeffs:
    A: object
    B: object
    C: object
    D: object
    E: object
    f: Poly
    A2: object
    B2: object
    C2: object
    D2: object
    E2: object
    f2: Poly


def _one_vertex(pd: PotentialDifferential, s: str, t: str):
    k, kb = pd.kappa, pd.kappa_bar
    norm = pd.ring.fraction_field().normalize
    r = pd.realization
    A = norm(-k(s, t))
    B = norm(-kb(t, s))
    C = norm(kb(t, t) - k(t, s) - k(s, t))
    D = norm(k(s, s) - kb(s, t) - kb(t, s))
    f = (pd.g[s] - pd.g[t] - r.alpha[s].scale(k(s, s) + k(t, s))
         - r.alpha[t].scale(kb(t, t) - k(s, t)))
    return A, B, C, D, 0, f


def six_valent_coeffs(pd: PotentialDifferential, s: str, t: str) -> SixValentCoeffs:
    """Coefficients of d on the six-valent vertex sts -> tst (A..f) and on tst -> sts (primed)."""
    if pd.realization.graph.m(s, t) != 3:
        raise ValueError(f"{s} and {t} are not adjacent")
    A, B, C, D, E, f = _one_vertex(pd, s, t)
    A2, B2, C2, D2, E2, f2 = _one_vertex(pd, t, s)
    return SixValentCoeffs(A, B, C, D, E, f, A2, B2, C2, D2, E2, f2)


# ---------------------------------------------------------------------------
# good differentials
# ---------------------------------------------------------------------------

@dataclass
class GoodVerdict:
    good: bool
    orientation: Optional[Orientation]
    kappa: Dict[str, object]
    checks: List[Check]

    @property
    def failure(self) -> Optional[Check]:
        return next((c for c in self.checks if not c.ok), None)


def check_good(pd: PotentialDifferential) -> GoodVerdict:
    r = pd.realization
    gens = r.generators
    checks: List[Check] = []

    def add(name, ok, witness=""):
        checks.append(Check(name, bool(ok), "" if ok else witness))

    for s in gens:
        lhs, rhs = pd.derive_poly(pd.g[s]), pd.g[s] * pd.g[s]
        add(f"d(g)=g^2:{s}", lhs == rhs, f"d(g_{s}) = {lhs}, g_{s}^2 = {rhs}")
    for s in gens:
        sg = r.reflect(s, pd.g[s])
        add(f"gbar=s(g):{s}", pd.gbar[s] == sg, f"gbar_{s} = {pd.gbar[s]}, {s}(g_{s}) = {sg}")
    for s, u in combinations(gens, 2):
        if r.graph.m(s, u) == 2:
            for a, b in ((s, u), (u, s)):
                add(f"distant-fixed:{a},{b}", r.is_invariant(b, pd.g[a]), f"{b}(g_{a}) != g_{a}")
    for s in gens:
        for t in r.graph.neighbors(s):
            img = r.act((t, s), pd.g[s])  # s(t(g_s))
            add(f"st(g_s)=g_t:{s},{t}", img == pd.g[t], f"{s}{t}(g_{s}) = {img}, g_{t} = {pd.g[t]}")
    for s in gens:
        if not pd.g[s].is_zero():
            add(f"not-invariant:{s}", not r.is_invariant(s, pd.g[s]), f"g_{s} = {pd.g[s]} is {s}-invariant")
    arrows = []
    for s, t in r.graph.sorted_edges():
        if pd.g[s].is_zero() and pd.g[t].is_zero():
            continue
        sts = (s, t, s)
        a = r.is_invariant(s, pd.g[t]) and r.act(sts, pd.g[s]) == pd.g[s]  # t -> s
        b = r.is_invariant(t, pd.g[s]) and r.act(sts, pd.g[t]) == pd.g[t]  # s -> t
        add(f"dichotomy:{s},{t}", a != b, f"t-fixed/sts-fixed alternatives hold {int(a) + int(b)} times")
        if a != b:
            arrows.append((t, s) if a else (s, t))
    orientation = None
    if all(c.ok for c in checks) and arrows:
        add("consistent-orientation", orientation_ok(r.graph, arrows), f"orientation {arrows} is inconsistent")
        orientation = tuple(arrows)
    kappa = {}
    for s in gens:
        kappa[s] = pd.kappa(s, s)
    good = all(c.ok for c in checks)
    if good:
        for s, t in r.graph.sorted_edges():
            if kappa[s] != kappa[t]:
                add(f"kappa-constant:{s},{t}", False, f"kappa differs: {kappa[s]} vs {kappa[t]}")
        good = all(c.ok for c in checks)
    return GoodVerdict(good, orientation if good else None, kappa, checks)


def orientation_of(pd: PotentialDifferential, s: str, t: str) -> Optional[str]:
    """'forward' when g_s is t-fixed (s -> t), 'backward' when g_t is s-fixed, None otherwise."""
    r = pd.realization
    if pd.g[s].is_zero() and pd.g[t].is_zero():
        return None
    if r.is_invariant(t, pd.g[s]):
        return "forward"
    if r.is_invariant(s, pd.g[t]):
        return "backward"
    return None


# ---------------------------------------------------------------------------
# classifier
# ---------------------------------------------------------------------------

def _affine_solutions(r: Realization, rows: List[Dict[int, object]], rhs: List) -> Optional[Tuple[list, List[list]]]:
    n = r.nvars
    x0 = linalg.solve(rows, rhs, n, r.ring)
    if x0 is None:
        return None
    kernel = linalg.nullspace(rows, n, r.ring)
    return x0, [[v.get(i, 0) for i in range(n)] for v in kernel]


def _rational_roots_quadratic(a, b, c) -> List[Fraction]:
    """Roots in Q of a y^2 + b y + c (a, b, c rational, not all zero)."""
    if a == 0:
        if b == 0:
            return []
        return [Fraction(-c) / b]
    disc = Fraction(b) ** 2 - 4 * Fraction(a) * c
    if disc < 0:
        return []
    num, den = disc.numerator, disc.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn != num or rd * rd != den:
        return []
    sq = Fraction(rn, rd)
    roots = {(-Fraction(b) + sq) / (2 * a), (-Fraction(b) - sq) / (2 * a)}
    return sorted(roots)


def _solve_quadratic_system(r: Realization, d: RingDerivation, x0: list, kernel: List[list]) -> List[list]:
    """All coefficient vectors x0 + sum c_j v_j with d(g) = g^2 for the linear form g."""
    ring = r.ring
    n = r.nvars
    if not kernel:
        g = Poly.linear(ring, x0)
        return [x0] if derive(d, g) == g * g else []
    if ring.kind == "Fp":
        out = []
        for cs in product(range(ring.p), repeat=len(kernel)):
            vec = [ring.normalize(x0[i] + sum(c * v[i] for c, v in zip(cs, kernel))) for i in range(n)]
            g = Poly.linear(ring, vec)
            if derive(d, g) == g * g:
                out.append(vec)
        return out
    if len(kernel) > 1:
        raise NotImplementedError("over Q the classifier handles at most a one-parameter family per color")
    # one parameter: d(g0 + c v) - (g0 + c v)^2 = P0 + c P1 + c^2 P2 coefficientwise
    v = kernel[0]
    g0 = Poly.linear(ring, x0)
    gv = Poly.linear(ring, v)
    P0 = derive(d, g0) - g0 * g0
    P1 = derive(d, gv) - (g0 * gv).scale(2)
    P2 = -(gv * gv)
    monos = set(P0.terms) | set(P1.terms) | set(P2.terms)
    candidates = None
    for m in sorted(monos):
        a, b, c = P2.coeff(m), P1.coeff(m), P0.coeff(m)
        if a == 0 and b == 0:
            if c != 0:
                return []
            continue
        roots = set(_rational_roots_quadratic(a, b, c))
        candidates = roots if candidates is None else candidates & roots
    if candidates is None:
        raise ArithmeticError("d(g) = g^2 holds along the whole family; classification is not finite")
    out = []
    for c in sorted(candidates):
        vec = [ring.normalize(x0[i] + c * v[i]) for i in range(n)]
        g = Poly.linear(ring, vec)
        if derive(d, g) == g * g:
            out.append(vec)
    return out


def classify_good(r: Realization, d: RingDerivation) -> List[PotentialDifferential]:
    """All good differentials with d_R = d, preceded by the zero differential.

    The zero differential is always listed (with the zero derivation on R).
    Nonzero candidates: for the first generator s, solve g + s(g) = z_s
    (a linear condition) and d(g) = g^2 (quadratic), then propagate
    g_t = s t (g_s) along the graph and keep the candidates that pass
    check_potential and check_good.
    """
    gens = r.generators
    out = [zero_differential(r)]
    if not gens:
        return out
    s0 = gens[0]
    z0 = z_from_derivation(r, d, s0)
    if z0 is None or z0.is_zero():
        return out
    n = r.nvars
    M = r.action[s0].rows
    # coefficient vector a of g: g + s(g) has coefficients a_k + sum_i a_i M[i][k]
    rows = []
    rhs = []
    zc = z0.linear_coeffs()
    for k in range(n):
        row = {i: M[i][k] + (1 if i == k else 0) for i in range(n)}
        rows.append({i: v for i, v in row.items() if v != 0})
        rhs.append(zc[k])
    sol = _affine_solutions(r, rows, rhs)
    if sol is None:
        return out
    x0, kernel = sol
    found = []
    for vec in _solve_quadratic_system(r, d, x0, kernel):
        g = {s0: Poly.linear(r.ring, vec)}
        order = [s0]
        queue = [s0]
        while queue:
            s = queue.pop(0)
            for t in r.graph.neighbors(s):
                if t not in g:
                    g[t] = r.act((t, s), g[s])
                    order.append(t)
                    queue.append(t)
        if len(g) != len(gens):
            # other components: only the zero solution is propagated here
            for s in gens:
                g.setdefault(s, r.zero())
        gbar = {s: r.reflect(s, g[s]) for s in gens}
        pd = PotentialDifferential(r, d, g, gbar, "classified")
        if check_potential(pd).ok and check_good(pd).good:
            found.append(pd)
    found.sort(key=lambda p: [str(p.g[s]) for s in gens])
    return out + found


def equivariant_derivations(r: Realization) -> List[RingDerivation]:
    """Basis of degree-2 derivations of R commuting with the W-action."""
    n = r.nvars
    quad = [m for m in _monomials(n, 2)]
    # unknown c[i][m]: coefficient of monomial m in d(x_i)
    idx = {(i, m): k for k, (i, m) in enumerate((i, m) for i in range(n) for m in quad)}
    rows = []
    for s in r.generators:
        act = r.action[s]
        for i in range(n):
            # d(s(x_i)) - s(d(x_i)) = 0, expressed linearly in the unknowns
            acc: Dict[Tuple[int, tuple], Dict[int, object]] = {}
            for j, cij in enumerate(act.rows[i]):
                if cij:
                    for m in quad:
                        acc.setdefault(m, {})
                        acc[m][idx[(j, m)]] = acc[m].get(idx[(j, m)], 0) + cij
            for m in quad:
                img = act.apply(Poly(r.ring, n, {m: 1}))
                for mm, c in img.terms.items():
                    acc.setdefault(mm, {})
                    acc[mm][idx[(i, m)]] = acc[mm].get(idx[(i, m)], 0) - c
            for row in acc.values():
                row = {k: v for k, v in row.items() if r.ring.normalize(v) != 0}
                if row:
                    rows.append(row)
    basis = linalg.nullspace(rows, len(idx), r.ring)
    out = []
    for vec in basis:
        images = []
        for i in range(n):
            images.append(Poly(r.ring, n, {m: vec.get(idx[(i, m)], 0) for m in quad}))
        out.append(RingDerivation(images))
    return out


def _monomials(n: int, deg: int):
    if n == 1:
        yield (deg,)
        return
    for first in range(deg, -1, -1):
        for rest in _monomials(n - 1, deg - first):
            yield (first,) + rest


def random_potential(r: Realization, rng: random.Random, coeff_range: int = 3) -> PotentialDifferential:
    """A random potential differential on a type A standard realization.

    The derivation is a random scalar multiple of the standard one (possibly
    zero); g_s is a random linear form and gbar_s = z_s - g_s.
    """
    c = rng.randint(-2, 2)
    base = standard_derivation(r)
    d = RingDerivation([im.scale(c) for im in base.images], check_degree=False)
    g, gbar = {}, {}
    for s in r.generators:
        z = z_from_derivation(r, d, s)
        vec = [rng.randint(-coeff_range, coeff_range) for _ in range(r.nvars)]
        g[s] = Poly.linear(r.ring, vec)
        gbar[s] = z - g[s]
    return PotentialDifferential(r, d, g, gbar, "random")
