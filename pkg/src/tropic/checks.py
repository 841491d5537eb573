"""Result record shared by the verifier batteries."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Report:
    name: str
    passed: bool
    checked: int = 0
    witness: object = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "check": self.name,
            "pass": self.passed,
            "checked": self.checked,
            "witness": self.witness,
            **({"details": self.details} if self.details else {}),
        }
