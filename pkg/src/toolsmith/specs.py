"""Task-spec sampling and prompt rendering.

A master seed fans out to one sub-seed per draw index, so sampled batches are
reproducible and independent of batch size. Rendering is a single substitution
pass over each template: injected user text is never rescanned for slots.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field
from importlib import resources

from .types import TaskSpec, ToolCall, ToolSpec, serialize_calls, serialize_menu

GENERATOR_SLOTS = ("domain", "context_type", "tool_menu_size", "num_calls")
SOLVER_SLOTS = ("USER_QUERY", "TOOL_MENU")

_SLOT_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")
_SOLVER_SLOT_RE = re.compile("|".join(SOLVER_SLOTS))


class TemplateError(ValueError):
    pass


@dataclass(slots=True)
class SpecDistribution:
    """Sampling distribution over control specs; weights are unnormalized."""

    domain_weights: dict[str, float]
    p_multi_turn: float = 0.1
    p_two_calls: float = 0.2
    menu_bucket_split: float = 0.5

    def validate(self) -> None:
        if not self.domain_weights:
            raise ValueError("domain_weights is empty")
        if any(w < 0 for w in self.domain_weights.values()):
            raise ValueError("domain weights must be non-negative")
        if not any(w > 0 for w in self.domain_weights.values()):
            raise ValueError("at least one domain weight must be positive")
        for name in ("p_multi_turn", "p_two_calls", "menu_bucket_split"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")


def derive_seed(master_seed: int, index: int) -> int:
    """Stable per-draw sub-seed: a splittable counter over the master seed."""
    digest = hashlib.sha256(f"{master_seed}:{index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def sample_spec(dist: SpecDistribution, rng_seed: int) -> TaskSpec:
    """Draw one spec. Draw order is fixed: domain, context, calls, menu size."""
    dist.validate()
    rng = random.Random(rng_seed)
    total = sum(dist.domain_weights.values())
    pick = rng.random() * total
    domain = next(iter(dist.domain_weights))
    acc = 0.0
    for name, weight in dist.domain_weights.items():
        acc += weight
        if pick < acc:
            domain = name
            break
    multi_turn = rng.random() < dist.p_multi_turn
    context_type = "multi_turn" if multi_turn else "single_turn"
    if multi_turn:
        num_calls = 1
    else:
        num_calls = 2 if rng.random() < dist.p_two_calls else 1
    if num_calls > 1:
        menu_size = rng.randint(3, 5)
    elif rng.random() < dist.menu_bucket_split:
        menu_size = rng.randint(2, 4)
    else:
        menu_size = rng.randint(5, 8)
    spec = TaskSpec(
        domain=domain,
        context_type=context_type,
        tool_menu_size=menu_size,
        num_gold_calls=num_calls,
    )
    spec.validate()
    return spec


def sample_specs(dist: SpecDistribution, master_seed: int, count: int) -> list[TaskSpec]:
    return [sample_spec(dist, derive_seed(master_seed, i)) for i in range(count)]


def _load_template(name: str) -> str:
    return (resources.files("toolsmith") / "templates" / name).read_text("utf-8")


@dataclass(slots=True)
class PromptBundle:
    """The three prompt templates; defaults ship as pinned package assets."""

    generator_template: str
    solver_template: str
    judge_template: str

    @classmethod
    def default(cls) -> "PromptBundle":
        return cls(
            generator_template=_load_template("generator_prompt.txt"),
            solver_template=_load_template("solver_prompt.txt"),
            judge_template=_load_template("judge_prompt.txt"),
        )

    def validate(self) -> None:
        # every declared slot must occur at least once; the default generator
        # template repeats some slots, so "exactly once" is deliberately not
        # enforced
        for slot in GENERATOR_SLOTS:
            if f"{{{slot}}}" not in self.generator_template:
                raise TemplateError(f"generator template is missing {{{slot}}}")
        for token in SOLVER_SLOTS:
            if token not in self.solver_template:
                raise TemplateError(f"solver template is missing {token}")


def render_generator_prompt(spec: TaskSpec, bundle: PromptBundle) -> str:
    values = {
        "domain": spec.domain,
        "context_type": spec.context_type,
        "tool_menu_size": str(spec.tool_menu_size),
        "num_calls": str(spec.num_gold_calls),
    }

    def substitute(match: re.Match[str]) -> str:
        slot = match.group(1)
        if slot not in values:
            raise TemplateError(f"unknown slot {{{slot}}} in generator template")
        return values[slot]

    return _SLOT_RE.sub(substitute, bundle.generator_template)


def render_solver_prompt(
    question: str, menu: list[ToolSpec], bundle: PromptBundle
) -> str:
    if not menu:
        raise ValueError("tool menu is empty")
    replacements = {"USER_QUERY": question, "TOOL_MENU": serialize_menu(menu)}
    return _SOLVER_SLOT_RE.sub(lambda m: replacements[m.group(0)], bundle.solver_template)


def render_judge_prompt(
    question: str,
    menu: list[ToolSpec],
    gold_calls: list[ToolCall],
    bundle: PromptBundle,
) -> str:
    sections = [
        bundle.judge_template.rstrip(),
        "",
        "User Question:",
        question,
        "",
        "Available Tools (JSON):",
        serialize_menu(menu),
        "",
        "Tool Call Answer:",
        serialize_calls(gold_calls),
    ]
    return "\n".join(sections)


_CONTROL_RES = {
    "domain": re.compile(r"^- Domain: (.+)$", re.MULTILINE),
    "context_type": re.compile(r"^- Context type: (\S+)", re.MULTILINE),
    "tool_menu_size": re.compile(r"^- Number of available tools: (\d+)", re.MULTILINE),
    "num_gold_calls": re.compile(r"^- Number of gold tool calls: (\d+)", re.MULTILINE),
}


def extract_control_spec(prompt: str) -> TaskSpec:
    """Recover (domain, context, menu size, call count) from a rendered prompt."""
    found: dict[str, str] = {}
    for key, pattern in _CONTROL_RES.items():
        match = pattern.search(prompt)
        if not match:
            raise ValueError(f"control-spec field {key} not found in prompt")
        found[key] = match.group(1).strip()
    return TaskSpec(
        domain=found["domain"],
        context_type=found["context_type"],
        tool_menu_size=int(found["tool_menu_size"]),
        num_gold_calls=int(found["num_gold_calls"]),
    )
