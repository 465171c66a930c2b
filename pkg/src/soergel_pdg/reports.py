"""Structured run reports with a fixed schema version.

A report is an ordered tree: an ``inputs`` echo, then one section per check
group, each holding verdicts and witnesses.  Output is deterministic for a
fixed config and seed; timings are recorded only when requested, because
they are the one field that changes between identical runs.

Schema (version 1)::

    {
      "schema": "soergel-pdg-report",
      "version": 1,
      "command": str,
      "inputs": {...},
      "sections": [{"name": str, "ok": bool, "items": [...]}, ...],
      "ok": bool,
      "timings": {section name: seconds}      # only with timings enabled
    }
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

SCHEMA = "soergel-pdg-report"
VERSION = 1


@dataclass
class Section:
    name: str
    items: List[Any] = field(default_factory=list)
    ok: bool = True

    def add(self, item: Any, ok: Optional[bool] = None) -> None:
        self.items.append(item)
        if ok is False:
            self.ok = False

    def to_dict(self) -> dict:
        return {"name": self.name, "ok": self.ok, "items": self.items}


@dataclass
class Report:
    command: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    sections: List[Section] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    record_timings: bool = False

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.sections)

    def section(self, name: str) -> Section:
        sec = Section(name)
        self.sections.append(sec)
        return sec

    @contextmanager
    def timed(self, name: str):
        t = time.perf_counter()
        try:
            yield
        finally:
            if self.record_timings:
                self.timings[name] = round(time.perf_counter() - t, 3)

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA,
            "version": VERSION,
            "command": self.command,
            "inputs": self.inputs,
            "sections": [s.to_dict() for s in self.sections],
            "ok": self.ok,
        }
        if self.record_timings:
            out["timings"] = self.timings
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=str) + "\n"

    def to_text(self) -> str:
        lines = [f"{self.command}: {'PASS' if self.ok else 'FAIL'}"]
        for key, val in self.inputs.items():
            lines.append(f"  {key} = {_short(val)}")
        for sec in self.sections:
            lines.append(f"[{'ok' if sec.ok else 'FAIL'}] {sec.name}")
            for item in sec.items:
                lines.append("    " + _item_text(item))
        if self.record_timings:
            for name, t in self.timings.items():
                lines.append(f"  time {name}: {t}s")
        return "\n".join(lines) + "\n"


def _short(val: Any, limit: int = 120) -> str:
    text = val if isinstance(val, str) else json.dumps(val, default=str, sort_keys=False)
    return text if len(text) <= limit else text[:limit - 3] + "..."


def _item_text(item: Any) -> str:
    if isinstance(item, dict):
        flag = item.get("ok")
        mark = "" if flag is None else ("PASS " if flag else "FAIL ")
        rest = {k: v for k, v in item.items() if k != "ok"}
        return mark + ", ".join(f"{k}={_short(v, 200)}" for k, v in rest.items())
    return _short(item, 200)
