from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    """Collection of named pass/fail checks; never raises on failure."""

    subject: str
    checks: list[Check] = field(default_factory=list)

    def add(self, name, passed, value=None, detail=""):
        self.checks.append(Check(name, bool(passed), None if value is None else float(value), detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "value": c.value, "detail": c.detail}
                for c in self.checks
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)
