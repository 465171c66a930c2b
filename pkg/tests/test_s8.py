import json

import pytest

from soergel_pdg import s8_example as s8
from soergel_pdg.coxeter import standard_type_a
from soergel_pdg.scalars import Z


def test_object_shapes():
    p = s8.projection()
    T, U = s8.thick("s2", "s3"), s8.thick("s5", "s6")
    assert p.source == s8.WORD and p.target == (T, U)
    assert s8.inclusion().source == (T, U) and s8.inclusion().target == s8.WORD
    assert s8.dpi_closed_form(standard_type_a(8, Z)).source == (T, U)


def test_complete_checkpoint_skips_all_work(tmp_path):
    ck = tmp_path / "s8.json"
    ck.write_text(json.dumps({"checks": {s: True for s in s8.STAGES}}))
    res = s8.run(ck)
    assert res.ok and res.timings == {}


@pytest.mark.slow
def test_resume_runs_only_missing_stages(tmp_path):
    ck = tmp_path / "s8.json"
    ck.write_text(json.dumps({"checks": {s: True for s in s8.STAGES[:-2]}}))
    res = s8.run(ck)
    assert set(res.timings) == set(s8.STAGES[-2:])
    assert res.ok
    assert json.loads(ck.read_text())["checks"] == {s: True for s in s8.STAGES}

