"""A1-style policy documents that drive the xApp.

Schema (YAML or an equivalent dict)::

    mode: adaptive            # static | adaptive
    static_policy: pf         # required in static mode
    evaluation_period: 1      # evaluate every N report windows
    hysteresis: 5             # min report windows between two switches
    rules:                    # adaptive mode; first matching rule wins
      - when: "jain < 0.6"
        then: pf

Conditions are ``<kpi> <op> <number>`` with op one of < <= > >= (or the
unicode forms). Valid KPI names are listed in ``protocol.KPI_FIELDS``.
"""
from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from ..sched import POLICY_NAMES
from .protocol import KPI_FIELDS, Indication


class A1PolicyError(ValueError):
    pass


_OPS = {
    "<": operator.lt, "<=": operator.le, "≤": operator.le,
    ">": operator.gt, ">=": operator.ge, "≥": operator.ge,
}
_COND = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(<=|>=|≤|≥|<|>)\s*(\S+)\s*$")


@dataclass(frozen=True)
class Condition:
    field: str
    op: str
    threshold: float

    @classmethod
    def parse(cls, text: str) -> "Condition":
        m = _COND.match(str(text))
        if not m:
            raise A1PolicyError(f"cannot parse condition {text!r}; expected '<kpi> <op> <number>'")
        name, op, num = m.groups()
        if name not in KPI_FIELDS:
            raise A1PolicyError(f"condition {text!r} references unknown KPI {name!r}; "
                                f"known: {', '.join(KPI_FIELDS)}")
        try:
            threshold = float(num)
        except ValueError:
            raise A1PolicyError(f"condition {text!r}: threshold {num!r} is not a number") from None
        return cls(name, op, threshold)

    def holds(self, report: Indication) -> bool:
        return _OPS[self.op](getattr(report, self.field), self.threshold)

    def __str__(self) -> str:
        return f"{self.field} {self.op} {self.threshold:g}"


@dataclass(frozen=True)
class Rule:
    condition: Condition
    target: str


@dataclass(frozen=True)
class A1Policy:
    mode: str = "static"
    static_policy: str | None = None
    rules: tuple[Rule, ...] = ()
    evaluation_period: int = 1
    hysteresis: int = 1

    def __post_init__(self):
        if self.mode not in ("static", "adaptive"):
            raise A1PolicyError(f"mode must be 'static' or 'adaptive', got {self.mode!r}")
        if self.static_policy is not None and self.static_policy not in POLICY_NAMES:
            raise A1PolicyError(f"unknown static_policy {self.static_policy!r}")
        if self.evaluation_period < 1:
            raise A1PolicyError("evaluation_period must be >= 1")
        if self.hysteresis < 1:
            raise A1PolicyError("hysteresis must be >= 1")
        for r in self.rules:
            if r.target not in POLICY_NAMES:
                raise A1PolicyError(f"rule target {r.target!r} is not a known policy")

    @classmethod
    def static(cls, policy: str) -> "A1Policy":
        return cls(mode="static", static_policy=policy)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "A1Policy":
        if not isinstance(data, dict):
            raise A1PolicyError("A1 policy document must be a mapping")
        unknown = set(data) - {"mode", "static_policy", "rules", "evaluation_period", "hysteresis"}
        if unknown:
            raise A1PolicyError(f"unknown A1 policy keys: {sorted(unknown)}")
        rules = []
        for i, raw in enumerate(data.get("rules") or []):
            if not isinstance(raw, dict) or set(raw) != {"when", "then"}:
                raise A1PolicyError(f"rule #{i} must have exactly 'when' and 'then'")
            rules.append(Rule(Condition.parse(raw["when"]), str(raw["then"])))
        mode = data.get("mode", "static")
        if mode == "static" and data.get("static_policy") is None:
            raise A1PolicyError("static mode needs static_policy")
        return cls(
            mode=mode,
            static_policy=data.get("static_policy"),
            rules=tuple(rules),
            evaluation_period=int(data.get("evaluation_period", 1)),
            hysteresis=int(data.get("hysteresis", 1)),
        )


def load_a1_policy(path: str | Path) -> A1Policy:
    with open(path, encoding="utf-8") as fh:
        return A1Policy.from_dict(yaml.safe_load(fh) or {})
