"""Tagged-block extraction and canonicalization of menus and tool calls.

Extraction is order-insensitive and takes the first occurrence of each block.
Missing blocks are reported through flags and diagnostics, never exceptions;
the reward layers turn flags into scores. Normalization and menu parsing do
raise, because their callers need the failure reason.
"""

from __future__ import annotations

import re
from typing import Any

from .relaxed import PlaceholderError, RelaxedParseError, parse_relaxed
from .types import PRIMITIVE_TYPES, ParseOutcome, ToolCall, ToolSpec

GENERATOR_TAGS = ("think", "question", "available_tools", "tool_call_answer")
ANSWER_TAG = "tool_call_answer"

_BLOCK_RES = {
    tag: re.compile(rf"<{tag}>(.*?)</{tag}>", re.DOTALL) for tag in GENERATOR_TAGS
}


class NormalizationError(ValueError):
    pass


class MenuError(ValueError):
    pass


def _find_block(tag: str, completion: str) -> tuple[str | None, str | None]:
    """Return (content, diagnostic); exactly one side is None."""
    match = _BLOCK_RES[tag].search(completion)
    if match:
        return match.group(1), None
    if f"<{tag}>" in completion:
        return None, f"missing closing tag </{tag}>"
    return None, f"missing block <{tag}>"


def extract_blocks(completion: str) -> ParseOutcome:
    """Pull the four tagged blocks out of a generator completion."""
    outcome = ParseOutcome()
    for tag in GENERATOR_TAGS:
        content, diagnostic = _find_block(tag, completion)
        if content is not None:
            outcome.blocks[tag] = content
        else:
            outcome.diagnostics.append(diagnostic or f"missing block <{tag}>")
    outcome.tags_ok = len(outcome.blocks) == len(GENERATOR_TAGS)
    return outcome


def normalize_calls(parsed: Any) -> list[ToolCall]:
    """Coerce a parsed value into the canonical non-empty list of tool calls.

    All-or-nothing: if any entry fails, the whole normalization fails, matching
    the single-indicator semantics of the format rewards.
    """
    entries = parsed if isinstance(parsed, list) else [parsed]
    if not entries:
        raise NormalizationError("no tool calls present")
    calls: list[ToolCall] = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise NormalizationError(f"call {i}: not an object")
        body = entry
        inner = entry.get("function")
        if isinstance(inner, dict):
            body = inner
        name = body.get("name")
        if not isinstance(name, str) or not name:
            raise NormalizationError(f"call {i}: no recognizable name field")
        if "arguments" in body:
            arguments = body["arguments"]
            if not isinstance(arguments, dict):
                raise NormalizationError(f"call {i}: arguments field is not an object")
        else:
            arguments = {k: v for k, v in body.items() if k != "name"}
        for key, value in arguments.items():
            if not isinstance(key, str):
                raise NormalizationError(f"call {i}: non-string argument key {key!r}")
            if not isinstance(value, PRIMITIVE_TYPES):
                raise NormalizationError(
                    f"call {i}: argument {key!r} is not a flat primitive"
                )
        calls.append(ToolCall(name=name, arguments=dict(arguments)))
    return calls


def _deep_sorted(value):
    if isinstance(value, dict):
        return {key: _deep_sorted(value[key]) for key in sorted(value)}
    if isinstance(value, list):
        return [_deep_sorted(item) for item in value]
    return value


def parse_tool_menu(block: str) -> list[ToolSpec]:
    """Parse a menu block into validated ToolSpecs.

    Accepts the flat parameter map the generator template asks for and the
    JSON-Schema style (type/properties/required) that models emit anyway.

    Parameter maps are stored in deep-sorted key order, matching the
    canonical dataset serialization. A task probed right after parsing and
    the same task reloaded from a dataset file must render byte-identical
    prompts, otherwise measured pass rates would not transfer.
    """
    try:
        parsed = parse_relaxed(block)
    except RelaxedParseError as err:
        raise MenuError(f"menu does not parse: {err}") from err
    if not isinstance(parsed, list):
        raise MenuError("menu top level is not a list")
    tools: list[ToolSpec] = []
    for i, entry in enumerate(parsed):
        if not isinstance(entry, dict):
            raise MenuError(f"tool {i}: not an object")
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise MenuError(f"tool {i}: missing name")
        description = entry.get("description", "")
        if not isinstance(description, str):
            raise MenuError(f"tool {i} ({name}): description is not a string")
        parameters = entry.get("parameters", {})
        required = entry.get("required", [])
        if isinstance(parameters, dict) and isinstance(parameters.get("properties"), dict):
            required = parameters.get("required", required)
            parameters = parameters["properties"]
        if not isinstance(parameters, dict):
            raise MenuError(f"tool {i} ({name}): parameters is not a map")
        for param, desc in parameters.items():
            if not isinstance(param, str):
                raise MenuError(f"tool {i} ({name}): non-string parameter name")
            if not isinstance(desc, dict):
                raise MenuError(f"tool {i} ({name}): parameter {param!r} spec is not a map")
        if not isinstance(required, list) or any(not isinstance(r, str) for r in required):
            raise MenuError(f"tool {i} ({name}): required is not a list of names")
        for req in required:
            if req not in parameters:
                raise MenuError(
                    f"tool {i} ({name}): required parameter {req!r} is not declared"
                )
        tools.append(
            ToolSpec(
                name=name,
                description=description,
                parameters=_deep_sorted(parameters),
                required=list(required),
            )
        )
    return tools


def parse_generator(completion: str) -> ParseOutcome:
    """Run the full generator-side parse: blocks, menu, gold calls."""
    outcome = extract_blocks(completion)
    outcome.tools_json_ok = False
    if "think" in outcome.blocks:
        outcome.think = outcome.blocks["think"].strip()
    if "question" in outcome.blocks:
        outcome.question = outcome.blocks["question"].strip()
    if "available_tools" in outcome.blocks:
        try:
            outcome.tools = parse_tool_menu(outcome.blocks["available_tools"])
            outcome.tools_json_ok = True
        except MenuError as err:
            outcome.diagnostics.append(str(err))
    if ANSWER_TAG in outcome.blocks:
        _parse_answer_block(outcome, outcome.blocks[ANSWER_TAG])
    return outcome


def parse_solver_answer(completion: str) -> ParseOutcome:
    """Parse a solver completion; only the answer block matters for credit."""
    outcome = ParseOutcome()
    content, diagnostic = _find_block(ANSWER_TAG, completion)
    if content is None:
        outcome.diagnostics.append(diagnostic or f"missing block <{ANSWER_TAG}>")
        return outcome
    outcome.blocks[ANSWER_TAG] = content
    outcome.tags_ok = bool(content.strip())
    if not outcome.tags_ok:
        outcome.diagnostics.append(f"<{ANSWER_TAG}> block is empty")
    _parse_answer_block(outcome, content)
    return outcome


def _parse_answer_block(outcome: ParseOutcome, content: str) -> None:
    try:
        parsed = parse_relaxed(content)
        outcome.gold_json_ok = True
    except PlaceholderError as err:
        outcome.diagnostics.append(f"answer block placeholder: {err}")
        return
    except RelaxedParseError as err:
        outcome.diagnostics.append(f"answer block does not parse: {err}")
        return
    try:
        outcome.calls = normalize_calls(parsed)
        outcome.normalized_ok = True
    except NormalizationError as err:
        outcome.diagnostics.append(f"answer block does not normalize: {err}")
