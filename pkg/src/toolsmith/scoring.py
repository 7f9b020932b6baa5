"""Order-preserving batch scorers shared by the HTTP service and the CLI.

Two failure planes, kept strictly apart. A malformed request envelope raises
RequestError and nothing gets scored: that is the caller's bug. A failure
while scoring one well-formed item (missing probe fixture, backend outage)
is absorbed into a zero-total breakdown with diagnostics, so one bad item
never poisons its batchmates.

A completion that merely parses badly is neither: the format score keeps
whatever partial credit the parse earned, and the downstream components
score zero without touching any backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

from .config import (
    build_accuracy_weights,
    build_backend,
    build_band,
    build_bundle,
    build_decode_params,
    build_solver_format_weights,
    build_validity_weights,
)
from .gateway import JUDGE_PARAMS, PROBE_PARAMS, DecodeParams, judge_semantics, probe_solver
from .genrewards import (
    DifficultyBand,
    ValidityWeights,
    difficulty_reward,
    format_reward,
    semantic_reward,
    validity_reward,
)
from .parsing import parse_generator, parse_solver_answer
from .solrewards import AccuracyWeights, SolverFormatWeights, accuracy_reward, solver_format_reward
from .specs import PromptBundle
from .types import GenRewardBreakdown, SolRewardBreakdown, ToolCall

__all__ = [
    "RequestError",
    "ScoringContext",
    "build_scoring_context",
    "parse_generator_request",
    "parse_solver_request",
    "score_generator_batch",
    "score_solver_batch",
]


class RequestError(ValueError):
    """The request envelope is malformed; nothing in it was scored."""


@dataclass
class ScoringContext:
    """Everything a batch scorer needs, resolved once per process."""

    validity: ValidityWeights
    band: DifficultyBand
    solver_format: SolverFormatWeights
    accuracy: AccuracyWeights
    bundle: PromptBundle
    solver_backend: Any = None
    judge_backend: Any = None
    probe_params: DecodeParams = PROBE_PARAMS
    judge_params: DecodeParams = JUDGE_PARAMS


def build_scoring_context(
    cfg: dict[str, Any],
    solver_backend: Any = None,
    judge_backend: Any = None,
) -> ScoringContext:
    return ScoringContext(
        validity=build_validity_weights(cfg),
        band=build_band(cfg),
        solver_format=build_solver_format_weights(cfg),
        accuracy=build_accuracy_weights(cfg),
        bundle=build_bundle(cfg),
        solver_backend=(
            solver_backend if solver_backend is not None else build_backend(cfg, "solver")
        ),
        judge_backend=(
            judge_backend if judge_backend is not None else build_backend(cfg, "judge")
        ),
        probe_params=build_decode_params(cfg, "probe"),
        judge_params=build_decode_params(cfg, "judge_decode"),
    )


# --- request envelopes ---------------------------------------------------------


def _items_of(payload: Any) -> list[dict[str, Any]]:
    if not isinstance(payload, dict):
        raise RequestError("request body must be a JSON object")
    items = payload.get("items")
    if not isinstance(items, list) or not items:
        raise RequestError("items must be a non-empty array")
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise RequestError(f"items[{i}] must be an object")
        if not isinstance(item.get("completion"), str):
            raise RequestError(f"items[{i}].completion must be a string")
    return items


def parse_generator_request(payload: Any) -> list[str]:
    """Completions in request order; generator items carry no required context."""
    return [item["completion"] for item in _items_of(payload)]


def parse_solver_request(payload: Any) -> list[tuple[str, list[ToolCall]]]:
    pairs: list[tuple[str, list[ToolCall]]] = []
    for i, item in enumerate(_items_of(payload)):
        context = item.get("context")
        if not isinstance(context, dict):
            raise RequestError(f"items[{i}].context must be an object")
        raw_calls = context.get("gold_calls")
        if not isinstance(raw_calls, list) or not raw_calls:
            raise RequestError(f"items[{i}].context.gold_calls must be a non-empty array")
        golds: list[ToolCall] = []
        for j, raw in enumerate(raw_calls):
            where = f"items[{i}].context.gold_calls[{j}]"
            if not isinstance(raw, dict) or not isinstance(raw.get("name"), str):
                raise RequestError(f"{where} needs a string name")
            arguments = raw.get("arguments", {})
            if not isinstance(arguments, dict):
                raise RequestError(f"{where}.arguments must be an object")
            golds.append(ToolCall(raw["name"], arguments))
        pairs.append((item["completion"], golds))
    return pairs


# --- batch scoring -------------------------------------------------------------

_ZERO_FLAGS = {"menu": False, "gold": False, "value": False}


def _zero_generator(diagnostics: list[str]) -> GenRewardBreakdown:
    return GenRewardBreakdown(
        fmt=0,
        valid=0.0,
        diff=0.0,
        sem=0.0,
        p_succ=0.0,
        valid_flags=dict(_ZERO_FLAGS),
        diagnostics=diagnostics,
    )


def _zero_solver(diagnostics: list[str]) -> SolRewardBreakdown:
    return SolRewardBreakdown(
        fmt=0.0,
        acc=0.0,
        tag_ok=False,
        parse_ok=False,
        norm_ok=False,
        base_accuracy=0.0,
        penalty_factor=1.0,
        diagnostics=diagnostics,
    )


def score_generator_batch(
    completions: Sequence[str], ctx: ScoringContext
) -> list[GenRewardBreakdown]:
    if ctx.solver_backend is None or ctx.judge_backend is None:
        raise RequestError("generator scoring needs solver and judge backends")
    results = []
    for completion in completions:
        try:
            results.append(_score_generator(completion, ctx))
        except Exception as exc:
            results.append(_zero_generator([f"scoring failure: {exc}"]))
    return results


def _score_generator(completion: str, ctx: ScoringContext) -> GenRewardBreakdown:
    outcome = parse_generator(completion)
    fmt = format_reward(outcome)
    diagnostics = list(outcome.diagnostics)
    task = outcome.task
    if task is None:
        return GenRewardBreakdown(
            fmt=fmt,
            valid=0.0,
            diff=0.0,
            sem=0.0,
            p_succ=0.0,
            valid_flags=dict(_ZERO_FLAGS),
            diagnostics=diagnostics,
        )
    valid, flags = validity_reward(task, ctx.validity)
    probe = probe_solver(
        ctx.solver_backend,
        task.question,
        task.tools,
        task.gold_calls,
        band=ctx.band,
        params=ctx.probe_params,
        bundle=ctx.bundle,
    )
    judge = judge_semantics(
        ctx.judge_backend,
        task.question,
        task.tools,
        task.gold_calls,
        params=ctx.judge_params,
        bundle=ctx.bundle,
    )
    if judge.parse_failed:
        diagnostics.append("judge reply had no usable score; floor of 1 applied")
    return GenRewardBreakdown(
        fmt=fmt,
        valid=valid,
        diff=difficulty_reward(probe.p_succ, ctx.band),
        sem=semantic_reward(judge.score),
        p_succ=probe.p_succ,
        valid_flags=flags,
        diagnostics=diagnostics,
    )


def score_solver_batch(
    items: Sequence[tuple[str, list[ToolCall]]], ctx: ScoringContext
) -> list[SolRewardBreakdown]:
    results = []
    for completion, golds in items:
        try:
            results.append(_score_solver(completion, golds, ctx))
        except Exception as exc:
            results.append(_zero_solver([f"scoring failure: {exc}"]))
    return results


def _score_solver(
    completion: str, golds: list[ToolCall], ctx: ScoringContext
) -> SolRewardBreakdown:
    outcome = parse_solver_answer(completion)
    report = accuracy_reward(list(outcome.calls or []), golds, ctx.accuracy)
    return SolRewardBreakdown(
        fmt=solver_format_reward(outcome, ctx.solver_format),
        acc=report.r_acc,
        tag_ok=outcome.tags_ok,
        parse_ok=outcome.gold_json_ok,
        norm_ok=outcome.normalized_ok,
        base_accuracy=report.base_accuracy,
        penalty_factor=report.penalty_factor,
        diagnostics=list(outcome.diagnostics),
    )
