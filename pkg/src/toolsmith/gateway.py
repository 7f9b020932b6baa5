"""Model access layer.

Two interchangeable backends behind one complete() shape: a remote
chat-completion endpoint with retry, and a scripted backend replaying
fixture transcripts for deterministic runs. On top of them sit the
Monte-Carlo solver probe and the semantic judge.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import requests

from .genrewards import DifficultyBand
from .parsing import parse_solver_answer
from .solrewards import gold_value_oracle
from .specs import PromptBundle, render_judge_prompt, render_solver_prompt
from .types import ToolCall, ToolSpec, sha256_hex

__all__ = [
    "JUDGE_PARAMS",
    "PROBE_PARAMS",
    "ROLLOUT_PARAMS",
    "BackendError",
    "DecodeParams",
    "FixtureError",
    "JudgeResult",
    "ModelBackend",
    "ProbeError",
    "ProbeResult",
    "ProbeSample",
    "RecordedRequest",
    "RemoteBackend",
    "ScriptedBackend",
    "judge_semantics",
    "probe_solver",
]


@dataclass(frozen=True)
class DecodeParams:
    temperature: float
    max_tokens: int


# probe draws are hotter than judge calls and cooler than training rollouts
PROBE_PARAMS = DecodeParams(temperature=0.7, max_tokens=2048)
ROLLOUT_PARAMS = DecodeParams(temperature=1.0, max_tokens=4096)
JUDGE_PARAMS = DecodeParams(temperature=0.0, max_tokens=16)


class BackendError(RuntimeError):
    """Remote completion failed after retries, or returned junk."""


class FixtureError(RuntimeError):
    """Scripted backend has no transcript for the requested prompt."""


class ProbeError(RuntimeError):
    """The probe could not draw any samples."""


class ModelBackend(Protocol):
    def complete(self, prompt: str, n: int, params: DecodeParams) -> list[str]: ...


@dataclass(frozen=True)
class RecordedRequest:
    prompt: str
    n: int
    temperature: float
    max_tokens: int


class ScriptedBackend:
    """Replays canned completions keyed by prompt hash.

    Each request restarts the cycle at index zero, so results depend
    only on (prompt, n), never on what other callers did before.
    Every request is recorded for decode-parameter assertions.
    """

    def __init__(self, transcripts: dict[str, list[str]] | None = None) -> None:
        self._table: dict[str, list[str]] = {
            key: list(rows) for key, rows in (transcripts or {}).items()
        }
        self._lock = threading.Lock()
        self.requests: list[RecordedRequest] = []

    def register(self, prompt: str, completions: list[str]) -> None:
        if not completions:
            raise ValueError("a transcript needs at least one completion")
        self._table[sha256_hex(prompt)] = list(completions)

    @classmethod
    def from_dir(cls, path: str | Path) -> "ScriptedBackend":
        table: dict[str, list[str]] = {}
        for file in sorted(Path(path).glob("*.json")):
            data = json.loads(file.read_text(encoding="utf-8"))
            if not isinstance(data, dict):
                raise FixtureError(f"{file} must hold an object of hash -> completions")
            for key, rows in data.items():
                if not isinstance(rows, list) or not all(isinstance(r, str) for r in rows):
                    raise FixtureError(f"{file}: transcript {key} must be a list of strings")
                table[key] = rows
        return cls(table)

    def complete(self, prompt: str, n: int, params: DecodeParams) -> list[str]:
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        key = sha256_hex(prompt)
        with self._lock:
            self.requests.append(
                RecordedRequest(
                    prompt=prompt,
                    n=n,
                    temperature=params.temperature,
                    max_tokens=params.max_tokens,
                )
            )
            rows = self._table.get(key)
        if not rows:
            raise FixtureError(f"no scripted transcript for prompt hash {key}")
        return [rows[i % len(rows)] for i in range(n)]


class RemoteBackend:
    """Chat-completion HTTP backend with bounded exponential backoff.

    Transport errors and 5xx responses are retried; 4xx and malformed
    bodies surface immediately. A semaphore caps in-flight requests.
    """

    def __init__(
        self,
        endpoint: str,
        token: str | None = None,
        model: str = "default",
        max_attempts: int = 4,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
        max_in_flight: int = 8,
        timeout: float = 120.0,
    ) -> None:
        if max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        self.endpoint = endpoint
        self.token = token
        self.model = model
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.timeout = timeout
        self._gate = threading.Semaphore(max_in_flight)

    @classmethod
    def from_env(cls, **kwargs) -> "RemoteBackend":
        endpoint = os.environ.get("GATEWAY_ENDPOINT")
        if not endpoint:
            raise BackendError("GATEWAY_ENDPOINT is not set")
        kwargs.setdefault("token", os.environ.get("GATEWAY_TOKEN"))
        return cls(endpoint=endpoint, **kwargs)

    def complete(self, prompt: str, n: int, params: DecodeParams) -> list[str]:
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "n": n,
        }
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"

        last_fault: str = "no attempt made"
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(min(self.backoff_cap, self.backoff_base * (2 ** (attempt - 1))))
            with self._gate:
                try:
                    response = requests.post(
                        self.endpoint, json=payload, headers=headers, timeout=self.timeout
                    )
                except requests.RequestException as exc:
                    last_fault = f"transport error: {exc}"
                    continue
            if response.status_code >= 500:
                last_fault = f"status {response.status_code}"
                continue
            if response.status_code != 200:
                raise BackendError(
                    f"{self.endpoint} answered {response.status_code}: "
                    f"{response.text[:200]}"
                )
            return self._unpack(response, n)
        raise BackendError(
            f"giving up on {self.endpoint} after {self.max_attempts} attempts "
            f"(last fault: {last_fault})"
        )

    def _unpack(self, response: requests.Response, n: int) -> list[str]:
        try:
            body = response.json()
            completions = [choice["message"]["content"] for choice in body["choices"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendError(
                f"malformed completion body from {self.endpoint}: {exc!r}"
            ) from exc
        if len(completions) != n or not all(isinstance(c, str) for c in completions):
            raise BackendError(
                f"{self.endpoint} returned {len(completions)} completions, wanted {n}"
            )
        return completions


@dataclass(frozen=True)
class ProbeSample:
    completion: str
    calls: tuple[ToolCall, ...] | None
    ok: bool
    diagnostics: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProbeResult:
    samples: tuple[ProbeSample, ...]
    successes: int
    k: int

    @property
    def p_succ(self) -> float:
        return self.successes / self.k


def probe_solver(
    backend: ModelBackend,
    question: str,
    tools: list[ToolSpec],
    gold: list[ToolCall],
    band: DifficultyBand | None = None,
    params: DecodeParams = PROBE_PARAMS,
    bundle: PromptBundle | None = None,
) -> ProbeResult:
    """Estimate solver success rate with one K-sample draw.

    Parse failures count as plain misses; only a failed draw itself is
    an error.
    """
    if not gold:
        raise ValueError("probe requires at least one gold call")
    band = band or DifficultyBand()
    band.validate()
    bundle = bundle or PromptBundle.default()

    prompt = render_solver_prompt(question, tools, bundle)
    try:
        completions = backend.complete(prompt, band.k_samples, params)
    except BackendError as exc:
        raise ProbeError(f"probe draw failed: {exc}") from exc

    samples: list[ProbeSample] = []
    successes = 0
    for text in completions:
        outcome = parse_solver_answer(text)
        calls = tuple(outcome.calls) if outcome.normalized_ok and outcome.calls else None
        ok = calls is not None and gold_value_oracle(list(calls), gold)
        successes += int(ok)
        samples.append(
            ProbeSample(
                completion=text,
                calls=calls,
                ok=ok,
                diagnostics=tuple(outcome.diagnostics),
            )
        )
    return ProbeResult(samples=tuple(samples), successes=successes, k=band.k_samples)


@dataclass(frozen=True)
class JudgeResult:
    score: int
    parse_failed: bool


_INT_TOKEN = re.compile(r"-?\d+")


def _scan_score(text: str) -> int | None:
    for token in _INT_TOKEN.finditer(text):
        value = int(token.group())
        if 1 <= value <= 5:
            return value
    return None


def judge_semantics(
    backend: ModelBackend,
    question: str,
    tools: list[ToolSpec],
    gold_calls: list[ToolCall],
    params: DecodeParams = JUDGE_PARAMS,
    bundle: PromptBundle | None = None,
) -> JudgeResult:
    """Ask the judge for a 1..5 rating; retry once, then floor to 1."""
    bundle = bundle or PromptBundle.default()
    prompt = render_judge_prompt(question, tools, gold_calls, bundle)
    for _ in range(2):
        score = _scan_score(backend.complete(prompt, 1, params)[0])
        if score is not None:
            return JudgeResult(score=score, parse_failed=False)
    return JudgeResult(score=1, parse_failed=True)
