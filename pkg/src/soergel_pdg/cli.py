"""Command line entry point: ``soergel-pdg <command> [options]``.

Exit codes: 0 all checks pass, 1 some check fails, 2 bad configuration,
3 a resource cap was hit (or a long run was not allowed).
"""

from __future__ import annotations

import json
import random
import sys
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, Optional

import click

from . import fc, relations
from .coxeter import (CoxeterGraph, Realization, affine_a_graph, consistent_orientations, d4_graph,
                      realization_from_dict, reduced_word, type_a_graph)
from .differential import (StrictModeError, check_good, check_potential, classify_good, differential_from_dict,
                           equivariant_derivations, orientation_of, standard_derivation)
from .idempotents import DecompositionError
from .localize import HomCapExceeded
from .poly import RingDerivation
from .reports import Report
from .scalars import ScalarRing

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3
TYPE_A_NAMES = {"s1": "s", "s2": "t", "s3": "u"}


class ConfigError(click.ClickException):
    exit_code = EXIT_CONFIG


class CapExceeded(click.ClickException):
    exit_code = EXIT_CAP


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

class RunConfig:
    """Parsed and validated settings shared by every command."""

    def __init__(self, data: Dict[str, Any], ring: Optional[str], seed: int, allow_long: bool, timings: bool):
        self.data = data
        try:
            self.ring = ScalarRing.parse(ring or data.get("ring", "Q"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.seed = seed
        self.allow_long = allow_long
        self.timings = timings
        self.caps = dict(data.get("caps", {}))
        self.strict = bool(data.get("strict", True))

    def get(self, key, default=None):
        return self.data.get(key, default)

    def realization(self, default: Optional[dict] = None) -> Realization:
        block = self.data.get("realization", default or {"type": "A", "n": 3})
        try:
            if isinstance(block, str):
                block = json.loads(Path(block).read_text())
            return realization_from_dict(block, self.ring)
        except (KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"realization: {exc}") from None

    def differential(self, r: Realization):
        block = self.data.get("differential", {"preset": "standard"})
        try:
            return differential_from_dict(r, block)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"differential: {exc}") from None

    def echo(self) -> Dict[str, Any]:
        out = {"ring": repr(self.ring), "seed": self.seed}
        for key in ("realization", "differential", "graph", "word", "n", "colors", "grid", "caps", "strict"):
            if key in self.data:
                out[key] = self.data[key]
        return out


def _load(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _set_memory_cap(mb: Optional[int]) -> None:
    if not mb:
        return
    import resource
    limit = int(mb) * 1024 * 1024
    resource.setrlimit(resource.RLIMIT_AS, (limit, limit))


def _emit(report: Report, fmt: str) -> None:
    click.echo(report.to_json() if fmt == "structured" else report.to_text(), nl=False)
    sys.exit(EXIT_OK if report.ok else EXIT_FAIL)


def common(f):
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON run configuration.")(f)
    f = click.option("--ring", default=None, help="Scalar ring: Z, Q or Fp:p.")(f)
    f = click.option("--report", "fmt", type=click.Choice(["text", "structured"]), default="text")(f)
    f = click.option("--seed", type=int, default=None, help="Seed for sampled checks (default 0).")(f)
    f = click.option("--allow-long", is_flag=True, help="Permit long-running experiments.")(f)
    f = click.option("--timings", is_flag=True, help="Record wall-clock timings in the report.")(f)
    return f


def _config(config_path, ring, seed, allow_long, timings) -> RunConfig:
    data = _load(config_path)
    cfg = RunConfig(data, ring, seed if seed is not None else int(data.get("seed", 0)), allow_long, timings)
    _set_memory_cap(cfg.caps.get("memory_mb"))
    return cfg


def _run(command: str, cfg: RunConfig, fmt: str, body) -> None:
    report = Report(command, cfg.echo(), record_timings=cfg.timings)
    try:
        body(report)
    except StrictModeError as exc:
        raise ConfigError(f"strict mode: {exc}") from None
    except (HomCapExceeded, MemoryError) as exc:
        raise CapExceeded(f"resource cap exceeded: {exc}") from None
    _emit(report, fmt)


@click.group()
def main():
    """Differentials on the diagrammatic Hecke category: relation checks,
    classification, Fc-filtration analysis and divided powers."""


# ---------------------------------------------------------------------------
# verify-relations
# ---------------------------------------------------------------------------

@main.command("verify-relations")
@common
def verify_relations(config_path, ring, fmt, seed, allow_long, timings):
    """Check that every relation holds and that d preserves it."""
    cfg = _config(config_path, ring, seed, allow_long, timings)

    def body(report: Report):
        r = cfg.realization()
        pd = cfg.differential(r)
        if cfg.strict:
            pot = check_potential(pd)
            if not pot.ok:
                raise StrictModeError(f"not a potential differential: {[c.name for c in pot.failed()]}")
        rng = random.Random(cfg.seed)
        colors = cfg.get("colors")
        rels = relations.relation_catalog(r, colors, rng) if colors else relations.full_catalog(r, rng)
        sane = report.section("relations hold")
        kept = report.section("relations preserved by d")
        with report.timed("relations"):
            for rel in rels:
                v = relations.check_relation_holds(r, rel)
                sane.add(v.to_dict(), v.ok)
                w = relations.check_preservation(pd, rel, strict=False)
                kept.add(w.to_dict(), w.ok)

    _run("verify-relations", cfg, fmt, body)


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def _graph(block) -> CoxeterGraph:
    kind = block.get("type", "A")
    if kind == "A":
        return type_a_graph(int(block["rank"]))
    if kind == "D4":
        return d4_graph()
    if kind in ("affineA", "affine-A"):
        return affine_a_graph(int(block["k"]))
    raise ConfigError(f"unknown graph type {kind!r}")


@main.command()
@common
def classify(config_path, ring, fmt, seed, allow_long, timings):
    """Good differentials for the configured realization and the orientation census of its graph."""
    cfg = _config(config_path, ring, seed, allow_long, timings)

    def body(report: Report):
        block = cfg.get("graph")
        graph = _graph(block) if block else None
        census = report.section("consistent orientations")
        g = graph
        r = None
        if graph is None or block.get("type", "A") in ("A", "D4"):
            r = cfg.realization(_default_realization(block))
            g = r.graph
        orients = consistent_orientations(g)
        census.add({"graph": repr(g), "count": len(orients),
                    "orientations": [[list(e) for e in o] for o in orients]})
        if r is None:
            return
        sec = report.section("good differentials")
        derivs = equivariant_derivations(r)
        if block and block.get("type") == "D4" or not _is_type_a(r):
            d = derivs[0] if derivs else RingDerivation.zero(r.ring, r.nvars)
            sec.add({"equivariant derivations": len(derivs)})
        else:
            d = standard_derivation(r)
        with report.timed("classify"):
            for pd in classify_good(r, d):
                kappas = sorted({str(pd.kappa(s, s)) for s in r.generators})
                entry = {"label": pd.label, "g": {s: str(pd.g[s]) for s in r.generators},
                         "kappa": kappas[0] if len(kappas) == 1 else kappas}
                if not pd.is_zero():
                    entry["orientation"] = [[a, b] for a, b in _arrows(pd)]
                sec.add(entry)

    _run("classify", cfg, fmt, body)


def _default_realization(block) -> dict:
    if not block:
        return {"type": "A", "n": 4}
    if block.get("type") == "D4":
        return {"type": "D4"}
    return {"type": "A", "n": int(block["rank"]) + 1}


def _is_type_a(r: Realization) -> bool:
    names = [f"s{i}" for i in range(1, len(r.generators) + 1)]
    return list(r.generators) == names and r.graph.sorted_edges() == type_a_graph(len(names)).sorted_edges()


def _arrows(pd):
    r = pd.realization
    out = []
    for a, b in r.graph.sorted_edges():
        o = orientation_of(pd, a, b)
        if o == "forward":
            out.append((a, b))
        elif o is not None:
            out.append((b, a))
    return out


# ---------------------------------------------------------------------------
# fc-analyze
# ---------------------------------------------------------------------------

@main.command("fc-analyze")
@common
@click.option("--word", default=None, help="Comma-separated reduced word w followed by s, e.g. s1,s2,s1.")
@click.option("--grid", default=None, help="Comma-separated gauge grid, e.g. 0,1,-1,kappa.")
def fc_analyze(config_path, ring, fmt, seed, allow_long, timings, word, grid):
    """Fc graph of the decomposition of B_w B_s, with a gauge search if it is cyclic."""
    cfg = _config(config_path, ring, seed, allow_long, timings)

    def body(report: Report):
        X = tuple(word.split(",")) if word else tuple(cfg.get("word", ()))
        if not X:
            raise ConfigError("fc-analyze needs a word (--word or config 'word')")
        n = max(int(s[1:]) for s in X) + 1
        r = cfg.realization({"type": "A", "n": max(n, 3)})
        pd = cfg.differential(r)
        g = tuple(grid.split(",")) if grid else tuple(cfg.get("grid", fc.DEFAULT_GRID))
        report.inputs.update({"word": list(X), "grid": list(g)})
        sec = report.section("fc graph")
        try:
            res = fc.fc_search(pd, X, grid=g, names=TYPE_A_NAMES if len(r.generators) <= 3 else None,
                               max_candidates=int(cfg.caps.get("gauge_grid", 10000)))
        except (ValueError, DecompositionError) as exc:
            raise ConfigError(str(exc)) from None
        sec.add({"status": res.status, "tried": res.tried, **({"detail": res.detail} if res.detail else {})},
                res.ok)
        sec.add(res.graph.to_dict())

    _run("fc-analyze", cfg, fmt, body)


# ---------------------------------------------------------------------------
# small-n
# ---------------------------------------------------------------------------

@main.command("small-n")
@common
def small_n(config_path, ring, fmt, seed, allow_long, timings):
    """Local analyses and the Fc search over every B_w B_s with ws > w for n = 2, 3, 4."""
    cfg = _config(config_path, ring, seed, allow_long, timings)

    def body(report: Report):
        ns = cfg.get("n", [2, 3, 4])
        ns = [ns] if isinstance(ns, int) else list(ns)
        preset = cfg.get("differential", {"preset": "standard"})
        graphs = []
        for n in ns:
            r = realization_from_dict({"type": "A", "n": n}, cfg.ring)
            pd = differential_from_dict(r, preset)
            local = report.section(f"n={n} local analyses")
            for s in r.generators:
                qa = fc.analyze_quadratic(pd, s)
                local.add({"quadratic": s, **qa.to_dict()}, qa.ok)
            for a, b in combinations(r.generators, 2):
                if r.graph.m(a, b) == 2:
                    cv = fc.analyze_commuting(pd, a, b)
                    local.add({"commuting": [a, b], **cv.to_dict()}, cv.ok)
                else:
                    for x, y in ((a, b), (b, a)):
                        ba = fc.analyze_braid(pd, x, y)
                        local.add({"braid": [x, y], **ba.to_dict()}, ba.ok)
            sec = report.section(f"n={n} fc search")
            with report.timed(f"n={n}"):
                for w, s in fc.small_n_instances(n):
                    X = tuple(reduced_word(w)) + (s,)
                    res = fc.fc_search(pd, X, names=TYPE_A_NAMES)
                    item = {"word": "".join(TYPE_A_NAMES.get(c, c) for c in X), "status": res.status,
                            "relations": [list(e) for e in res.graph.relations()]}
                    if not res.ok:
                        item["detail"] = res.detail
                    sec.add(item, res.ok)
                    if res.ok:
                        graphs.append(res.graph)
            agg = fc.aggregate_orders([g for g in graphs if all(v in _names_upto(n) for v in g.vertices)])
            ag = report.section(f"n<={n} aggregate")
            ag.add({"edges": [list(e) for e in agg.edges], "cycles": agg.cycles, "acyclic": agg.acyclic})

    _run("small-n", cfg, fmt, body)


def _names_upto(n):
    from .coxeter import enumerate_sn
    from .idempotents import element_name
    return {element_name(w, TYPE_A_NAMES) for w in enumerate_sn(n)}


# ---------------------------------------------------------------------------
# s8
# ---------------------------------------------------------------------------

@main.command()
@common
@click.option("--checkpoint", type=click.Path(dir_okay=False), default=None,
              help="File recording finished stages; rerunning resumes from it.")
def s8(config_path, ring, fmt, seed, allow_long, timings, checkpoint):
    """The length-14 S_8 example: pi = 2 id and the closed forms of d(p), d(i), d(p)i."""
    cfg = _config(config_path, ring, seed, allow_long, timings)
    if not cfg.allow_long:
        raise CapExceeded("s8 is long-running; pass --allow-long")
    from . import s8_example

    def body(report: Report):
        sec = report.section("S8 checks")
        with report.timed("s8"):
            res = s8_example.run(Path(checkpoint) if checkpoint else None)
        for name in s8_example.STAGES:
            sec.add({"check": name, "ok": res.checks.get(name, False)}, res.checks.get(name, False))

    _run("s8", cfg, fmt, body)


# ---------------------------------------------------------------------------
# divided-powers
# ---------------------------------------------------------------------------

@main.command("divided-powers")
@common
def divided_powers(config_path, ring, fmt, seed, allow_long, timings):
    """Integrality of d^k/k!, the closed form of d^k on the six-valent vertex, and d^p = 0 over F_p."""
    cfg = _config(config_path, ring, seed, allow_long, timings)

    def body(report: Report):
        kmax = int(cfg.get("kmax", 8))
        closed = int(cfg.get("closed_form_kmax", 5))
        primes = list(cfg.get("primes", [2, 3, 5]))
        samples = int(cfg.get("samples", 50))
        r = realization_from_dict(cfg.get("realization", {"type": "A", "n": 3}), ScalarRing("Z"))
        pd = differential_from_dict(r, cfg.get("differential", {"preset": "standard"}))
        report.inputs["ring"] = "Z (integrality), Fp (nilpotence)"
        integ = report.section(f"d^k/k! integral for k <= {kmax}")
        for g in relations.generator_samples(r, thick=check_good(pd).good):
            bad = None
            for k in range(1, kmax + 1):
                try:
                    relations.divided_power_integral(pd, g, k)
                except ArithmeticError as exc:
                    bad = f"k={k}: {exc}"
                    break
            integ.add({"generator": str(next(iter(g.terms))), "ok": bad is None,
                       **({"witness": bad} if bad else {})}, bad is None)
        cf = report.section(f"d^k(six) closed form for k <= {closed}")
        for a, b in r.graph.sorted_edges():
            for x, y in ((a, b), (b, a)):
                if orientation_of(pd, x, y) != "forward":
                    continue
                got = relations.check_phi_closed_form(pd, x, y, closed)
                cf.add({"vertex": [x, y], "ok": all(got.values()), "by_k": {str(k): v for k, v in got.items()}},
                       all(got.values()))
        nil = report.section("d^p on sampled morphisms")
        for p in primes:
            v = relations.nilpotence_over(pd, int(p), samples, cfg.seed)
            nil.add(v.to_dict(), v.ok)

    _run("divided-powers", cfg, fmt, body)


if __name__ == "__main__":
    main()
