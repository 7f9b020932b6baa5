"""Benchmark evaluation: strict structural matching plus a three-way
failure taxonomy (format, structural, semantic) with sub-causes.

Precedence is fixed: format beats structural beats semantic, and within
structural the order is call count, then tool name, then argument keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .parsing import parse_solver_answer
from .solrewards import gold_value_oracle, multiset_match
from .types import ToolCall, ToolSpec

__all__ = [
    "BenchmarkItem",
    "EvalReport",
    "IngestionError",
    "ItemVerdict",
    "ast_match",
    "classify_error",
    "evaluate_file",
]


class IngestionError(ValueError):
    pass


@dataclass
class BenchmarkItem:
    id: str
    question: str
    tools: list[ToolSpec]
    gold_calls: list[ToolCall]
    history: list[dict] | None = None

    def validate(self) -> None:
        if not self.id:
            raise ValueError("benchmark item needs an id")
        if not self.gold_calls:
            raise ValueError("benchmark item needs at least one gold call")


@dataclass(frozen=True)
class ItemVerdict:
    item_id: str
    correct: bool
    label: str | None
    sub_cause: str | None


@dataclass
class EvalReport:
    accuracy: float
    verdicts: list[ItemVerdict]
    histogram: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "total": len(self.verdicts),
            "correct": sum(v.correct for v in self.verdicts),
            "histogram": self.histogram,
            "verdicts": [
                {
                    "id": v.item_id,
                    "correct": v.correct,
                    "label": v.label,
                    "sub_cause": v.sub_cause,
                }
                for v in self.verdicts
            ],
        }


def ast_match(pred_completion: str, item: BenchmarkItem) -> bool:
    """Strict verdict: prediction multiset equals the gold multiset."""
    outcome = parse_solver_answer(pred_completion)
    if not outcome.normalized_ok or not outcome.calls:
        return False
    return gold_value_oracle(list(outcome.calls), item.gold_calls)


def _keys_alignable(pred: ToolCall, gold: ToolCall) -> bool:
    return pred.name == gold.name and set(pred.arguments) == set(gold.arguments)


def classify_error(pred_completion: str, item: BenchmarkItem) -> tuple[str, str]:
    """Taxonomy label for an incorrect prediction."""
    outcome = parse_solver_answer(pred_completion)
    if not outcome.tags_ok:
        return ("format", "no_answer_tag")
    if not outcome.gold_json_ok:
        if any("placeholder" in d for d in outcome.diagnostics):
            return ("format", "placeholder")
        return ("format", "unparseable")
    if not outcome.normalized_ok:
        return ("format", "normalization")

    preds = list(outcome.calls or [])
    golds = item.gold_calls
    if len(preds) != len(golds):
        return ("structural", "wrong_call_count")
    if sorted(p.name for p in preds) != sorted(g.name for g in golds):
        return ("structural", "wrong_tool_name")
    if not multiset_match(preds, golds, _keys_alignable):
        return ("structural", "argument_keys_mismatch")
    return ("semantic", "wrong_argument_value")


def _item_from_obj(obj: dict) -> BenchmarkItem:
    if not isinstance(obj, dict):
        raise ValueError("record must be an object")
    item_id = obj["id"]
    question = obj["question"]
    if not isinstance(item_id, str) or not isinstance(question, str):
        raise ValueError("id and question must be strings")
    tools = [ToolSpec.from_dict(t) for t in obj["tools"]]
    gold_calls = []
    for call in obj["gold_calls"]:
        name = call["name"]
        arguments = call.get("arguments", {})
        if not isinstance(name, str) or not isinstance(arguments, dict):
            raise ValueError("gold call needs a string name and object arguments")
        gold_calls.append(ToolCall(name, arguments))
    item = BenchmarkItem(
        id=item_id,
        question=question,
        tools=tools,
        gold_calls=gold_calls,
        history=obj.get("history"),
    )
    item.validate()
    return item


def _scan_lines(path: Path, build) -> tuple[list, list[str]]:
    rows: list = []
    errors: list[str] = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append(build(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            errors.append(f"line {number}: {exc}")
    return rows, errors


def _load_benchmark(path: Path) -> list[BenchmarkItem]:
    items, errors = _scan_lines(path, _item_from_obj)
    if errors:
        raise IngestionError(f"benchmark file {path} has bad lines: " + "; ".join(errors))
    if not items:
        raise IngestionError(f"benchmark file {path} holds no items")
    return items


def _prediction_from_obj(obj: dict) -> tuple[str, str]:
    item_id, completion = obj["id"], obj["completion"]
    if not isinstance(item_id, str) or not isinstance(completion, str):
        raise ValueError("prediction needs string id and completion")
    return item_id, completion


def _load_predictions(path: Path) -> dict[str, str]:
    rows, errors = _scan_lines(path, _prediction_from_obj)
    if errors:
        raise IngestionError(f"predictions file {path} has bad lines: " + "; ".join(errors))
    # later duplicates win
    return dict(rows)


def evaluate_file(bench_path: str | Path, preds_path: str | Path) -> EvalReport:
    """Score every benchmark item against a predictions file."""
    items = _load_benchmark(Path(bench_path))
    predictions = _load_predictions(Path(preds_path))

    verdicts: list[ItemVerdict] = []
    histogram: dict[str, dict[str, int]] = {}

    def record_failure(item_id: str, label: str, sub_cause: str) -> None:
        verdicts.append(ItemVerdict(item_id, False, label, sub_cause))
        bucket = histogram.setdefault(label, {})
        bucket[sub_cause] = bucket.get(sub_cause, 0) + 1

    correct = 0
    for item in items:
        text = predictions.get(item.id)
        if text is None:
            record_failure(item.id, "format", "missing_prediction")
            continue
        if ast_match(text, item):
            correct += 1
            verdicts.append(ItemVerdict(item.id, True, None, None))
        else:
            label, sub_cause = classify_error(text, item)
            record_failure(item.id, label, sub_cause)

    return EvalReport(
        accuracy=correct / len(items),
        verdicts=verdicts,
        histogram=histogram,
    )
