"""Threaded HTTP reward service.

Three routes:

    POST /v1/rewards/generator  {"items": [{"completion": "..."}]}
    POST /v1/rewards/solver     {"items": [{"completion": "...",
                                            "context": {"gold_calls": [...]}}]}
    GET  /v1/health

Responses are JSON with sorted keys, so identical requests produce identical
bytes. Scoring state lives entirely in the ScoringContext; handlers share it
read-only, which is what makes concurrent interleaving safe.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .scoring import (
    RequestError,
    ScoringContext,
    parse_generator_request,
    parse_solver_request,
    score_generator_batch,
    score_solver_batch,
)
from .types import canonical_json

__all__ = ["RewardService"]

_REWARD_ROUTES = ("/v1/rewards/generator", "/v1/rewards/solver")


def _make_handler(context: ScoringContext) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt: str, *args) -> None:  # noqa: A002 - stdlib name
            pass

        def _reply(self, status: int, payload: dict) -> None:
            body = canonical_json(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self) -> None:
            if self.path == "/v1/health":
                self._reply(200, {"status": "ok"})
            elif self.path in _REWARD_ROUTES:
                self._reply(405, {"error": "reward routes accept POST only"})
            else:
                self._reply(404, {"error": f"no such route: {self.path}"})

        def do_POST(self) -> None:
            if self.path == "/v1/health":
                self._reply(405, {"error": "health accepts GET only"})
                return
            if self.path not in _REWARD_ROUTES:
                self._reply(404, {"error": f"no such route: {self.path}"})
                return
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length)
            try:
                payload = json.loads(raw)
            except ValueError:
                self._reply(400, {"error": "request body is not valid JSON"})
                return
            try:
                if self.path.endswith("/generator"):
                    results = score_generator_batch(parse_generator_request(payload), context)
                else:
                    results = score_solver_batch(parse_solver_request(payload), context)
            except RequestError as exc:
                self._reply(400, {"error": str(exc)})
            except Exception as exc:
                self._reply(500, {"error": f"internal error: {exc}"})
            else:
                self._reply(200, {"results": [r.to_dict() for r in results]})

    return Handler


class RewardService:
    """Owns a ThreadingHTTPServer bound at construction time.

    Port 0 asks the OS for an ephemeral port; read the bound one from
    ``.port``. Use as a context manager or call start()/stop() directly.
    """

    def __init__(self, context: ScoringContext, host: str = "127.0.0.1", port: int = 8731):
        self._server = ThreadingHTTPServer((host, port), _make_handler(context))
        self._thread: threading.Thread | None = None

    @property
    def host(self) -> str:
        return self._server.server_address[0]

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> "RewardService":
        if self._thread is not None:
            raise RuntimeError("service already started")
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def serve_forever(self) -> None:
        """Run on the calling thread until interrupted."""
        try:
            self._server.serve_forever()
        finally:
            self._server.server_close()

    def __enter__(self) -> "RewardService":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()
