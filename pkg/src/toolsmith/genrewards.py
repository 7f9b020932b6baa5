"""Reward components for the task generator role.

Three independent signals, kept separate so callers can log each one:
format (integer 0..3 over tag/menu/gold checks), validity (weighted
grounding checks against the menu and the question), and curriculum
(difficulty band-pass plus judge-derived semantic quality).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .types import GeneratedTask, ParseOutcome

__all__ = [
    "DifficultyBand",
    "ValidityWeights",
    "curriculum_reward",
    "difficulty_reward",
    "format_reward",
    "semantic_reward",
    "validity_reward",
    "value_in_question",
]


@dataclass(frozen=True)
class ValidityWeights:
    lambda_menu: float = 0.4
    lambda_gold: float = 0.4
    lambda_value: float = 0.2

    def validate(self) -> None:
        for name in ("lambda_menu", "lambda_gold", "lambda_value"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class DifficultyBand:
    p_low: float = 0.25
    p_high: float = 0.75
    sigma: float = 0.12
    k_samples: int = 8

    def validate(self) -> None:
        if not (0.0 <= self.p_low <= self.p_high <= 1.0):
            raise ValueError("difficulty band requires 0 <= p_low <= p_high <= 1")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.k_samples < 1:
            raise ValueError("k_samples must be at least 1")


def format_reward(outcome: ParseOutcome) -> int:
    """Integer format score: one point per structural check that holds."""
    points = int(outcome.tags_ok)
    points += int(bool(outcome.tools_json_ok))
    points += int(outcome.gold_json_ok and outcome.normalized_ok)
    return points


def _match_text(value: object) -> str:
    if isinstance(value, str):
        return value.strip()
    if isinstance(value, float):
        # integral floats ground against their integer rendering: 2.0 -> "2"
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def value_in_question(value: object, question: str) -> bool:
    """True when the value's text appears in the question at word boundaries.

    Comparison is case-insensitive. Boundaries are checked with lookarounds
    rather than \\b so values starting or ending in punctuation still anchor
    correctly.
    """
    text = _match_text(value)
    pattern = r"(?<!\w)" + re.escape(text) + r"(?!\w)"
    return re.search(pattern, question, re.IGNORECASE) is not None


def validity_reward(
    task: GeneratedTask, weights: ValidityWeights
) -> tuple[float, dict[str, bool]]:
    """Weighted sum of three grounding checks over the gold calls.

    Each check is a conjunction across all calls. A task with no gold
    calls fails everything: there is nothing to ground.
    """
    weights.validate()
    if not task.gold_calls:
        flags = {"menu": False, "gold": False, "value": False}
        return 0.0, flags

    menu_names = {tool.name for tool in task.tools}
    required_by_name = {tool.name: tool.required for tool in task.tools}

    menu_ok = all(call.name in menu_names for call in task.gold_calls)

    gold_ok = True
    for call in task.gold_calls:
        required = required_by_name.get(call.name)
        if required is None:
            # tool not on the menu: the menu check already charges for
            # that, so the required-params check passes vacuously
            continue
        if not set(required) <= set(call.arguments):
            gold_ok = False
            break

    value_ok = True
    for call in task.gold_calls:
        for arg in call.arguments.values():
            if isinstance(arg, bool) or arg is None:
                continue
            if not value_in_question(arg, task.question):
                value_ok = False
                break
        if not value_ok:
            break

    flags = {"menu": menu_ok, "gold": gold_ok, "value": value_ok}
    value = (
        weights.lambda_menu * menu_ok
        + weights.lambda_gold * gold_ok
        + weights.lambda_value * value_ok
    )
    return value, flags


def difficulty_reward(p_succ: float, band: DifficultyBand) -> float:
    """Band-pass reward on the solver success rate.

    Zero below the 1/k floor (strict), one inside [p_low, p_high],
    Gaussian falloff from the nearer band edge outside.
    """
    band.validate()
    if not (0.0 <= p_succ <= 1.0):
        raise ValueError(f"success rate out of range: {p_succ}")
    if p_succ < 1.0 / band.k_samples:
        return 0.0
    if band.p_low <= p_succ <= band.p_high:
        return 1.0
    edge = band.p_low if p_succ < band.p_low else band.p_high
    return math.exp(-((p_succ - edge) ** 2) / (2.0 * band.sigma * band.sigma))


def semantic_reward(judge_score: int) -> float:
    """Rescale a 1..5 judge rating onto [0, 1]."""
    if not isinstance(judge_score, int) or isinstance(judge_score, bool):
        raise ValueError(f"judge score must be an integer, got {judge_score!r}")
    if not 1 <= judge_score <= 5:
        raise ValueError(f"judge score out of range 1..5: {judge_score}")
    return (judge_score - 1) / 4


def curriculum_reward(difficulty: float, semantic: float) -> float:
    return difficulty + semantic
