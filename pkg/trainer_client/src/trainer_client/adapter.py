"""Reward scoring in the shape policy-gradient training loops expect.

A reward function there is a plain callable over (prompts, completions,
contexts) returning one scalar per completion. Totals come back normalized
to [0, 1] because optimizers want bounded scalars; pass raw_breakdowns=True
to receive the full per-item component dicts instead.
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Sequence

from .client import ClientConfig, RewardClient, is_fault

__all__ = ["reward_fn_adapter"]

logger = logging.getLogger("trainer_client.adapter")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _mean_line(results: list[dict]) -> str:
    keys = sorted(k for k, v in results[0].items() if _is_number(v))
    parts = []
    for key in keys:
        values = [r[key] for r in results if _is_number(r.get(key))]
        if len(values) == len(results):
            parts.append(f"{key}={sum(values) / len(values):.6g}")
    return " ".join(parts)


def reward_fn_adapter(
    config: ClientConfig | RewardClient,
    role: str,
    *,
    raw_breakdowns: bool = False,
    log_breakdowns: bool = True,
) -> Callable[..., list]:
    """Build a reward function backed by the service at config.base_url.

    Client errors (service unreachable, rejected envelope) propagate to the
    caller; per-item scoring faults come back as 0.0 like any other score.
    """
    if role not in ("generator", "solver"):
        raise ValueError(f"role must be generator or solver, not {role!r}")
    client = config if isinstance(config, RewardClient) else RewardClient(config)

    def reward_fn(
        prompts: Sequence[str] | None,
        completions: Sequence[str],
        contexts: Sequence[dict | None] | None = None,
    ) -> list:
        completions = list(completions)
        if prompts is not None and len(list(prompts)) != len(completions):
            raise ValueError("prompts and completions must have the same length")
        if contexts is not None and len(contexts) != len(completions):
            raise ValueError("contexts and completions must have the same length")
        if role == "solver" and contexts is None:
            raise ValueError("solver rewards need contexts carrying gold_calls")
        items: list[dict[str, Any]] = []
        for i, completion in enumerate(completions):
            item: dict[str, Any] = {"completion": completion}
            context = contexts[i] if contexts is not None else None
            if context:
                item["context"] = context
            items.append(item)
        results = (
            client.score_generator(items) if role == "generator" else client.score_solver(items)
        )
        if log_breakdowns and results:
            faults = sum(1 for r in results if is_fault(r))
            logger.info(
                "%s rewards for %d completions: %s faults=%d",
                role,
                len(results),
                _mean_line(results),
                faults,
            )
        if raw_breakdowns:
            return results
        return [float(r["total_normalized"]) for r in results]

    return reward_fn
