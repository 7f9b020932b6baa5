"""Reward components for the solver role.

Format credit mirrors the parse stages; accuracy scores predictions
against gold calls through greedy maximum matching with a multiplicative
penalty for extra calls. A separate strict oracle decides exact match
for curation and evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .types import ParseOutcome, ToolCall, canonical_json

__all__ = [
    "AccuracyWeights",
    "MatchReport",
    "PairMatch",
    "SolverFormatWeights",
    "accuracy_reward",
    "gold_value_oracle",
    "multiset_match",
    "pair_score",
    "solver_format_reward",
    "values_equal",
]


@dataclass(frozen=True)
class SolverFormatWeights:
    lambda_tag: float = 0.3
    lambda_parse: float = 0.3
    lambda_norm: float = 0.4

    def validate(self) -> None:
        for name in ("lambda_tag", "lambda_parse", "lambda_norm"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class AccuracyWeights:
    lambda_name: float = 0.2
    lambda_key: float = 0.3
    lambda_val: float = 0.5
    alpha: float = 0.25

    def validate(self) -> None:
        for name in ("lambda_name", "lambda_key", "lambda_val", "alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class PairMatch:
    gold_index: int
    pred_index: int | None
    s_name: float
    s_key: float
    s_val: float
    score: float


@dataclass(frozen=True)
class MatchReport:
    matches: tuple[PairMatch, ...]
    base_accuracy: float
    penalty_factor: float
    r_acc: float


def solver_format_reward(outcome: ParseOutcome, w: SolverFormatWeights) -> float:
    w.validate()
    value = w.lambda_tag * int(outcome.tags_ok)
    value += w.lambda_parse * int(outcome.gold_json_ok)
    value += w.lambda_norm * int(outcome.normalized_ok)
    return value


_IDENTIFIER_DIGITS = 15


def _is_identifier_string(value: object) -> bool:
    return isinstance(value, str) and value.strip().isdigit() and len(value.strip()) > _IDENTIFIER_DIGITS


def _normalized_text(value: object) -> str:
    if isinstance(value, str):
        return value.strip()
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def _as_number(value: object) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except (ValueError, OverflowError):
            return None
    return None


def values_equal(a: object, b: object) -> bool:
    """Forgiving equality for argument values.

    Checks run in order: exact, numeric coercion (blocked for long
    digit strings, which act as identifiers and compare textually),
    trimmed-string, canonical-serialization fallback. Booleans only
    ever equal booleans.
    """
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    if isinstance(a, bool):
        return a is b
    if a == b:
        return True
    if _is_identifier_string(a) or _is_identifier_string(b):
        return _normalized_text(a) == _normalized_text(b)
    na, nb = _as_number(a), _as_number(b)
    if na is not None and nb is not None and math.isfinite(na) and math.isfinite(nb):
        if na == nb:
            return True
    if isinstance(a, str) and isinstance(b, str):
        if a.strip() == b.strip():
            return True
    return canonical_json(a) == canonical_json(b)


def pair_score(
    pred: ToolCall, gold: ToolCall, w: AccuracyWeights
) -> tuple[float, float, float, float]:
    w.validate()
    s_name = 1.0 if pred.name == gold.name else 0.0

    pred_keys = set(pred.arguments)
    gold_keys = set(gold.arguments)
    if not pred_keys and not gold_keys:
        s_key = 1.0
    else:
        overlap = len(pred_keys & gold_keys)
        s_key = 2.0 * overlap / (len(pred_keys) + len(gold_keys))

    shared = pred_keys & gold_keys
    if not shared:
        s_val = 1.0
    else:
        hits = sum(values_equal(pred.arguments[k], gold.arguments[k]) for k in shared)
        s_val = hits / len(shared)

    score = w.lambda_name * s_name + w.lambda_key * s_key + w.lambda_val * s_val
    return s_name, s_key, s_val, score


def accuracy_reward(
    preds: list[ToolCall], golds: list[ToolCall], w: AccuracyWeights
) -> MatchReport:
    """Greedy maximum matching: golds in order, best unused prediction.

    Ties break to the lowest prediction index. Unmatched golds score
    zero; extra predictions shrink the total multiplicatively.
    """
    if not golds:
        raise ValueError("accuracy_reward requires at least one gold call")
    w.validate()

    used: set[int] = set()
    matches: list[PairMatch] = []
    for gold_index, gold in enumerate(golds):
        best_index: int | None = None
        best: tuple[float, float, float, float] | None = None
        for pred_index, pred in enumerate(preds):
            if pred_index in used:
                continue
            candidate = pair_score(pred, gold, w)
            if best is None or candidate[3] > best[3]:
                best, best_index = candidate, pred_index
        if best_index is None or best is None:
            matches.append(PairMatch(gold_index, None, 0.0, 0.0, 0.0, 0.0))
        else:
            used.add(best_index)
            matches.append(PairMatch(gold_index, best_index, *best))

    base = sum(m.score for m in matches) / len(golds)
    penalty = 1.0 / (1.0 + w.alpha * max(0, len(preds) - len(golds)))
    return MatchReport(
        matches=tuple(matches),
        base_accuracy=base,
        penalty_factor=penalty,
        r_acc=base * penalty,
    )


def _calls_equal(pred: ToolCall, gold: ToolCall) -> bool:
    if pred.name != gold.name:
        return False
    if set(pred.arguments) != set(gold.arguments):
        return False
    return all(values_equal(pred.arguments[k], gold.arguments[k]) for k in gold.arguments)


def multiset_match(preds: list[ToolCall], golds: list[ToolCall], relation) -> bool:
    """True when a perfect matching exists under the pairwise relation.

    Backtracking rather than first-fit: the relations used here are not
    transitive, so a greedy walk can strand a viable assignment.
    """
    if len(preds) != len(golds):
        return False
    if not golds:
        return True

    candidates = [
        [pi for pi, pred in enumerate(preds) if relation(pred, gold)]
        for gold in golds
    ]
    # cheapest-first ordering keeps the search shallow
    order = sorted(range(len(golds)), key=lambda gi: len(candidates[gi]))

    taken: set[int] = set()

    def assign(step: int) -> bool:
        if step == len(order):
            return True
        gi = order[step]
        for pi in candidates[gi]:
            if pi in taken:
                continue
            taken.add(pi)
            if assign(step + 1):
                return True
            taken.discard(pi)
        return False

    return assign(0)


def gold_value_oracle(preds: list[ToolCall], golds: list[ToolCall]) -> bool:
    """Strict multiset equality between predictions and gold calls."""
    return multiset_match(preds, golds, _calls_equal)
