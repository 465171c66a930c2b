import json

import pytest
from click.testing import CliRunner

from soergel_pdg.cli import main
from soergel_pdg.reports import SCHEMA, VERSION


@pytest.fixture
def run(tmp_path):
    def go(*args, config=None):
        argv = list(args)
        if config is not None:
            path = tmp_path / "config.json"
            path.write_text(json.dumps(config))
            argv += ["--config", str(path)]
        return CliRunner().invoke(main, argv)
    return go


S3_COLORS = {"realization": {"type": "A", "n": 3}, "colors": ["s1", "s2"], "ring": "Z"}
PERTURBED = {**S3_COLORS, "differential": {"d": ["x1^2", "x2^2", "x3^2"], "g": {"s1": "x1", "s2": "x2"},
                                           "gbar": {"s1": "x1 + x2", "s2": "x3"}}}


def test_verify_relations_pass(run):
    res = run("verify-relations", config=S3_COLORS)
    assert res.exit_code == 0, res.output
    assert res.output.startswith("verify-relations: PASS")


def test_verify_relations_failure_exit_code(run):
    res = run("verify-relations", config={**PERTURBED, "strict": False})
    assert res.exit_code == 1
    assert "FAIL relation=needle[s1]" in res.output


def test_verify_relations_strict_refusal(run):
    res = run("verify-relations", config=PERTURBED)
    assert res.exit_code == 2 and "strict mode" in res.output


def test_bad_config_exit_code(run, tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    res = CliRunner().invoke(main, ["verify-relations", "--config", str(bad)])
    assert res.exit_code == 2
    assert run("verify-relations", "--ring", "F4").exit_code == 2


def test_s8_requires_allow_long(run):
    res = run("s8")
    assert res.exit_code == 3 and "--allow-long" in res.output


def test_structured_report_schema_and_determinism(run):
    a = run("verify-relations", "--report", "structured", config=S3_COLORS)
    b = run("verify-relations", "--report", "structured", config=S3_COLORS)
    assert a.output == b.output
    data = json.loads(a.output)
    assert data["schema"] == SCHEMA and data["version"] == VERSION and "timings" not in data
    assert [s["name"] for s in data["sections"]] == ["relations hold", "relations preserved by d"]
    assert data["inputs"]["seed"] == 0


def test_timings_only_on_request(run):
    data = json.loads(run("verify-relations", "--report", "structured", "--timings", config=S3_COLORS).output)
    assert "relations" in data["timings"]


def _classify(run, graph, **extra):
    res = run("classify", "--report", "structured", config={"graph": graph, **extra})
    return res, json.loads(res.output)


@pytest.mark.parametrize("rank", [1, 2, 3, 4])
def test_classify_type_a(run, rank):
    res, data = _classify(run, {"type": "A", "rank": rank})
    assert res.exit_code == 0
    census, good = data["sections"]
    assert census["items"][0]["count"] == (2 if rank > 1 else 1)
    items = good["items"]
    assert items[0]["label"] == "zero"
    fams = {(tuple(i["g"].values()), i["kappa"]) for i in items[1:]}
    n = rank + 1
    assert fams == {(tuple(f"x{i}" for i in range(1, n)), "1"), (tuple(f"x{i + 1}" for i in range(1, n)), "-1")}


def test_classify_d4(run):
    res, data = _classify(run, {"type": "D4"})
    census, good = data["sections"]
    assert census["items"][0]["count"] == 0
    assert [i for i in good["items"] if "label" in i] == [
        {"label": "zero", "g": {s: "0" for s in ("s1", "s2", "s3", "s4")}, "kappa": "0"}]


def test_classify_affine_cycle(run):
    _, data = _classify(run, {"type": "affineA", "k": 5})
    assert data["sections"][0]["items"][0]["count"] == 2


def test_fc_analyze_word(run):
    res = run("fc-analyze", "--word", "s1,s2,s1", "--report", "structured")
    assert res.exit_code == 0
    graph = json.loads(res.output)["sections"][0]["items"][1]
    assert graph["relations"] == [["s", "sts"]] and graph["acyclic"]


def test_fc_analyze_needs_reduced_word(run):
    assert run("fc-analyze", "--word", "s1,s1").exit_code == 2


def test_small_n_rank_two(run):
    res = run("small-n", "--report", "structured", config={"n": [3]})
    assert res.exit_code == 0
    data = json.loads(res.output)
    agg = data["sections"][-1]["items"][0]
    assert agg["acyclic"] and ["s", "sts"] in agg["edges"] and ["sts", "t"] in agg["edges"]


def test_divided_powers_small(run):
    res = run("divided-powers", config={"kmax": 3, "closed_form_kmax": 2, "primes": [2], "samples": 4})
    assert res.exit_code == 0, res.output
