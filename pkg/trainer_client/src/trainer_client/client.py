"""HTTP client for the reward service.

Rollouts get scored in batches during training, so the client chunks
oversized batches, keeps a bounded number of requests in flight, and
reassembles results in submission order. Transient failures (socket errors,
5xx) are retried with exponential backoff; a 4xx means the request itself is
wrong and is surfaced immediately.

Per-item scoring failures are not exceptions. The service zero-scores the
item and says so in its diagnostics; results pass through untouched so that
client-side and offline scoring stay byte-comparable. Use is_fault() to spot
the flagged ones.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import requests

__all__ = ["ClientConfig", "ClientError", "ClientStats", "RewardClient", "is_fault"]

_MAX_RETRIES = 16
_BACKOFF_CAP = 10.0  # seconds; a misconfigured base must not stall a training step for minutes


class ClientError(RuntimeError):
    """The service could not be reached or rejected the request."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class ClientConfig:
    """Connection settings. Everything has a workable default except the URL."""

    base_url: str
    timeout: float = 30.0
    chunk_size: int = 100
    max_in_flight: int = 4
    retries: int = 2
    backoff_base: float = 0.1

    def __post_init__(self) -> None:
        if not isinstance(self.base_url, str) or not self.base_url:
            raise ValueError("base_url must be a non-empty string")
        object.__setattr__(self, "base_url", self.base_url.rstrip("/"))
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be at least 1")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")
        if not 0 <= self.retries <= _MAX_RETRIES:
            raise ValueError(f"retries must be between 0 and {_MAX_RETRIES}")
        if self.backoff_base < 0:
            raise ValueError("backoff_base must not be negative")


@dataclass
class ClientStats:
    """Counters accumulated over completed calls; a call that raises records nothing."""

    requests: int = 0  # HTTP attempts, retried ones included
    retries: int = 0
    items: int = 0
    faults: int = 0


def is_fault(result: dict) -> bool:
    """True when the service zero-scored this item instead of raising."""
    diagnostics = result.get("diagnostics") or ()
    return any(isinstance(d, str) and d.startswith("scoring failure") for d in diagnostics)


class RewardClient:
    """Scores completions against a running reward service."""

    def __init__(self, config: ClientConfig):
        self.config = config
        self.stats = ClientStats()
        self._local = threading.local()

    def _session(self) -> requests.Session:
        # One session per worker thread: sessions are not thread-safe, but
        # keep-alive within a worker is still worth having.
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            self._local.session = session
        return session

    def health(self) -> dict:
        """Single-attempt liveness probe; cheap to repeat, so no retry loop."""
        url = f"{self.config.base_url}/v1/health"
        try:
            resp = self._session().get(url, timeout=self.config.timeout)
        except requests.RequestException as exc:
            raise ClientError(f"health check failed: {exc}") from exc
        if resp.status_code != 200:
            raise ClientError(
                f"health check failed: HTTP {resp.status_code}", status=resp.status_code
            )
        return self._payload_of(resp)

    def score_generator(self, items: Sequence[dict]) -> list[dict]:
        """Score generator completions; items need only a "completion" key."""
        return self._score("generator", items)

    def score_solver(self, items: Sequence[dict]) -> list[dict]:
        """Score solver completions; items also need context.gold_calls."""
        return self._score("solver", items)

    def _score(self, role: str, items: Sequence[dict]) -> list[dict]:
        batch = list(items)
        if not batch:
            # The service treats an empty envelope as a caller bug (400);
            # locally there is simply nothing to do.
            return []
        size = self.config.chunk_size
        chunks = [batch[i : i + size] for i in range(0, len(batch), size)]
        workers = min(self.config.max_in_flight, len(chunks))
        if workers == 1:
            outcomes = [self._post_chunk(role, chunk) for chunk in chunks]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(self._post_chunk, role, chunk) for chunk in chunks]
                outcomes = [f.result() for f in futures]
        results = [r for chunk_results, _ in outcomes for r in chunk_results]
        # Stats merge on the calling thread after the futures resolve; no lock needed.
        attempts = sum(used for _, used in outcomes)
        self.stats.requests += attempts
        self.stats.retries += attempts - len(chunks)
        self.stats.items += len(results)
        self.stats.faults += sum(1 for r in results if is_fault(r))
        return results

    def _post_chunk(self, role: str, chunk: list[dict]) -> tuple[list[dict], int]:
        url = f"{self.config.base_url}/v1/rewards/{role}"
        failure = "no attempt made"
        for attempt in range(self.config.retries + 1):
            if attempt:
                # Deterministic exponential backoff, no jitter, capped.
                time.sleep(min(self.config.backoff_base * 2 ** (attempt - 1), _BACKOFF_CAP))
            try:
                resp = self._session().post(
                    url, json={"items": chunk}, timeout=self.config.timeout
                )
            except requests.RequestException as exc:
                failure = f"transport: {exc}"
                continue
            if resp.status_code == 200:
                return self._results_of(resp, expected=len(chunk)), attempt + 1
            failure = f"HTTP {resp.status_code}: {self._error_of(resp)}"
            if resp.status_code < 500:
                # The request itself is wrong; retrying cannot fix it.
                raise ClientError(f"{role} scoring rejected: {failure}", status=resp.status_code)
        raise ClientError(
            f"{role} scoring failed after {self.config.retries + 1} attempts: {failure}"
        )

    @staticmethod
    def _payload_of(resp: requests.Response) -> dict:
        try:
            payload = resp.json()
        except ValueError as exc:
            raise ClientError(
                f"service returned a non-JSON body: {exc}", status=resp.status_code
            ) from exc
        if not isinstance(payload, dict):
            raise ClientError("service returned a non-object body", status=resp.status_code)
        return payload

    def _results_of(self, resp: requests.Response, expected: int) -> list[dict]:
        results = self._payload_of(resp).get("results")
        if not isinstance(results, list) or len(results) != expected:
            got = len(results) if isinstance(results, list) else "no"
            raise ClientError(
                f"service returned {got} results for {expected} items", status=resp.status_code
            )
        return results

    @staticmethod
    def _error_of(resp: requests.Response) -> str:
        try:
            payload = resp.json()
        except ValueError:
            return resp.text[:200] or "no body"  # truncated: proxies send HTML error pages
        if isinstance(payload, dict) and isinstance(payload.get("error"), str):
            return payload["error"]
        return resp.text[:200]
