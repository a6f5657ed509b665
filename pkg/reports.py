"""
REPORTS - Relator Lab
Structured verdicts for every bounded check, with a canonical JSON form.
"""

from __future__ import annotations

import hashlib
import json
from enum import Enum
from typing import Any, Dict, Iterable, List

from pydantic import BaseModel, Field

from error_handler import EXIT_COUNTEREXAMPLE, EXIT_INCONCLUSIVE, EXIT_PASS
from monads import render

SCHEMA_VERSION = 1


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"

    @property
    def exit_code(self) -> int:
        return {Verdict.PASS: EXIT_PASS, Verdict.FAIL: EXIT_COUNTEREXAMPLE,
                Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE}[self]


class Counterexample(BaseModel):
    clause: str
    witness: Dict[str, Any] = Field(default_factory=dict)


class CheckReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    check: str
    verdict: Verdict = Verdict.PASS
    bounds: Dict[str, Any] = Field(default_factory=dict)
    counterexamples: List[Counterexample] = Field(default_factory=list)
    inconclusive: List[Dict[str, Any]] = Field(default_factory=list)
    stats: Dict[str, Any] = Field(default_factory=dict)

    def fail(self, clause: str, **witness) -> "CheckReport":
        self.counterexamples.append(Counterexample(clause=clause, witness=render(witness)))
        self.verdict = Verdict.FAIL
        return self

    def unsure(self, reason: str, **witness) -> "CheckReport":
        self.inconclusive.append({"reason": reason, **render(witness)})
        if self.verdict == Verdict.PASS:
            self.verdict = Verdict.INCONCLUSIVE
        return self

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def clauses(self) -> List[str]:
        return [c.clause for c in self.counterexamples]

    def to_dict(self) -> Dict[str, Any]:
        return render(self.model_dump(mode="json"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=2)


def merge_reports(check: str, parts: Iterable[CheckReport], **bounds) -> CheckReport:
    """Combines sub-reports in input order; the worst verdict wins."""
    merged = CheckReport(check=check, bounds=render(bounds))
    for part in parts:
        for c in part.counterexamples:
            merged.counterexamples.append(Counterexample(clause=f"{part.check}:{c.clause}", witness=c.witness))
        for item in part.inconclusive:
            merged.inconclusive.append({"check": part.check, **item})
        merged.stats[part.check] = {"verdict": part.verdict.value, **part.stats}
    if merged.counterexamples:
        merged.verdict = Verdict.FAIL
    elif merged.inconclusive or any(s["verdict"] == Verdict.INCONCLUSIVE.value for s in merged.stats.values()):
        merged.verdict = Verdict.INCONCLUSIVE
    return merged


def digest(items: Iterable[Any]) -> str:
    """Order-independent hash of a finite collection (closing sets, test arguments)."""
    rendered = sorted(json.dumps(render(x), sort_keys=True, ensure_ascii=False) for x in items)
    return hashlib.sha256("\n".join(rendered).encode("utf-8")).hexdigest()[:16]
