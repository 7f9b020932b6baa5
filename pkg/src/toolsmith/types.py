"""Core domain types and canonical serialization.

Everything downstream (parsing, rewards, curation, evaluation, the service)
moves these structures around, so the canonical JSON form is pinned here:
sorted keys, compact separators, raw UTF-8. Equal values serialize to equal
bytes, which is what dedup signatures and golden files rely on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

Primitive = str | int | float | bool | None

PRIMITIVE_TYPES = (str, int, float, bool, type(None))


def canonical_json(value: Any) -> str:
    """Serialize to the pinned canonical form: sorted keys, compact, UTF-8."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def is_flat_primitive_map(mapping: Any) -> bool:
    """True when mapping is a dict of string keys to primitive values."""
    if not isinstance(mapping, dict):
        return False
    for key, val in mapping.items():
        if not isinstance(key, str):
            return False
        if not isinstance(val, PRIMITIVE_TYPES):
            return False
    return True


@dataclass(slots=True)
class ToolCall:
    """One canonical tool call: a name and a flat map of primitive arguments."""

    name: str
    arguments: dict[str, Primitive] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "arguments": dict(sorted(self.arguments.items()))}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ToolCall":
        return cls(name=data["name"], arguments=dict(data.get("arguments", {})))

    def canonical(self) -> str:
        return canonical_json(self.to_dict())


def serialize_calls(calls: list[ToolCall]) -> str:
    """Wire form for a call list: canonical objects, argument keys sorted."""
    return canonical_json([c.to_dict() for c in calls])


@dataclass(slots=True)
class ToolSpec:
    """One tool-menu entry: name, description, parameter schema, required list."""

    name: str
    description: str = ""
    parameters: dict[str, dict[str, Any]] = field(default_factory=dict)
    required: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "parameters": self.parameters,
            "required": list(self.required),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ToolSpec":
        return cls(
            name=data["name"],
            description=data.get("description", ""),
            parameters=dict(data.get("parameters", {})),
            required=list(data.get("required", [])),
        )


def serialize_menu(tools: list[ToolSpec], indent: int | None = 2) -> str:
    """Readable, order-preserving JSON for a tool menu (prompt rendering)."""
    return json.dumps([t.to_dict() for t in tools], indent=indent, ensure_ascii=False)


VALID_CONTEXT_TYPES = ("single_turn", "multi_turn")


@dataclass(slots=True)
class TaskSpec:
    """Control tuple for one synthesized task: domain, context, menu size, call count."""

    domain: str
    context_type: str
    tool_menu_size: int
    num_gold_calls: int

    def validate(self) -> None:
        if self.context_type not in VALID_CONTEXT_TYPES:
            raise ValueError(f"invalid context_type: {self.context_type!r}")
        if self.tool_menu_size < 1 or self.num_gold_calls < 1:
            raise ValueError("tool_menu_size and num_gold_calls must be positive")
        if self.context_type == "multi_turn" and self.num_gold_calls != 1:
            raise ValueError("multi_turn specs must have exactly one gold call")
        if self.num_gold_calls > 1 and self.tool_menu_size not in (3, 4, 5):
            raise ValueError("multi-call specs must use a menu of 3, 4, or 5 tools")
        if (
            self.num_gold_calls == 1
            and self.context_type == "single_turn"
            and not 2 <= self.tool_menu_size <= 8
        ):
            raise ValueError("single-call single-turn specs must use 2..8 tools")

    def to_dict(self) -> dict[str, Any]:
        return {
            "domain": self.domain,
            "context_type": self.context_type,
            "tool_menu_size": self.tool_menu_size,
            "num_gold_calls": self.num_gold_calls,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TaskSpec":
        return cls(
            domain=data["domain"],
            context_type=data["context_type"],
            tool_menu_size=int(data["tool_menu_size"]),
            num_gold_calls=int(data["num_gold_calls"]),
        )


@dataclass(slots=True)
class GeneratedTask:
    """Fully parsed generator output."""

    think: str
    question: str
    tools: list[ToolSpec]
    gold_calls: list[ToolCall]
    raw: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "question": self.question,
            "tools": [t.to_dict() for t in self.tools],
            "gold_calls": [c.to_dict() for c in self.gold_calls],
        }


@dataclass(slots=True)
class ParseOutcome:
    """Stage flags plus whatever values the successful stages produced.

    tools_json_ok is None for solver-side parses, where no menu block exists.
    Flag monotonicity: normalized_ok implies gold_json_ok implies the answer
    block was extractable.
    """

    tags_ok: bool = False
    tools_json_ok: bool | None = None
    gold_json_ok: bool = False
    normalized_ok: bool = False
    blocks: dict[str, str] = field(default_factory=dict)
    think: str | None = None
    question: str | None = None
    tools: list[ToolSpec] | None = None
    calls: list[ToolCall] | None = None
    diagnostics: list[str] = field(default_factory=list)

    @property
    def task(self) -> GeneratedTask | None:
        """The complete task, only when every stage succeeded."""
        if (
            self.tags_ok
            and self.tools_json_ok
            and self.gold_json_ok
            and self.normalized_ok
            and self.question is not None
            and self.tools is not None
            and self.calls
        ):
            return GeneratedTask(
                think=self.think or "",
                question=self.question,
                tools=self.tools,
                gold_calls=self.calls,
            )
        return None


@dataclass(slots=True)
class GenRewardBreakdown:
    """Generator-side component scores for one completion."""

    fmt: int
    valid: float
    diff: float
    sem: float
    p_succ: float
    valid_flags: dict[str, bool] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    @property
    def curr(self) -> float:
        return self.diff + self.sem

    @property
    def total_raw(self) -> float:
        return self.fmt + self.valid + self.curr

    @property
    def total_normalized(self) -> float:
        return (self.fmt / 3.0 + self.valid + self.curr / 2.0) / 3.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "role": "generator",
            "fmt": self.fmt,
            "valid": self.valid,
            "diff": self.diff,
            "sem": self.sem,
            "curr": self.curr,
            "p_succ": self.p_succ,
            "total_raw": self.total_raw,
            "total_normalized": self.total_normalized,
            "valid_flags": dict(sorted(self.valid_flags.items())),
            "diagnostics": list(self.diagnostics),
        }


@dataclass(slots=True)
class SolRewardBreakdown:
    """Solver-side component scores for one completion."""

    fmt: float
    acc: float
    tag_ok: bool
    parse_ok: bool
    norm_ok: bool
    base_accuracy: float
    penalty_factor: float
    diagnostics: list[str] = field(default_factory=list)

    @property
    def total_raw(self) -> float:
        return self.fmt + self.acc

    @property
    def total_normalized(self) -> float:
        return self.total_raw / 2.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "role": "solver",
            "fmt": self.fmt,
            "acc": self.acc,
            "tag_ok": self.tag_ok,
            "parse_ok": self.parse_ok,
            "norm_ok": self.norm_ok,
            "base_accuracy": self.base_accuracy,
            "penalty_factor": self.penalty_factor,
            "total_raw": self.total_raw,
            "total_normalized": self.total_normalized,
            "diagnostics": list(self.diagnostics),
        }
