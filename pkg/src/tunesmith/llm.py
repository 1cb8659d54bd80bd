"""Minimal chat-completion client plus a scripted stub server for tests.

The client speaks the common JSON chat API: POST ``{base_url}/chat/completions``
with model, messages, and temperature.  The API key travels only in the
Authorization header, never in the body.  Transport failures and 429/5xx
responses are retried with exponential backoff; other 4xx responses are
terminal because retrying a rejected request cannot help.

The stub server speaks the same wire format from a scripted list of
responses consumed in order, so recipe outputs are reproducible offline.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import requests


class LlmError(RuntimeError):
    """Request could not be completed (terminal status or retries exhausted)."""


class LlmProtocolError(LlmError):
    """The server answered 2xx but the payload is not a usable completion."""


@dataclass(frozen=True)
class ClientConfig:
    base_url: str
    model_name: str = "default"
    api_key_env: str = "TUNESMITH_API_KEY"
    max_retries: int = 3
    timeout_seconds: float = 30.0
    temperature: float = 0.0
    backoff_seconds: float = 0.25


def complete(cfg: ClientConfig, system_prompt: str, user_prompt: str) -> str:
    """One chat completion; returns the assistant message text."""
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    payload = {
        "model": cfg.model_name,
        "messages": [
            {"role": "system", "content": system_prompt},
            {"role": "user", "content": user_prompt},
        ],
        "temperature": cfg.temperature,
    }
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(cfg.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    last_error = "no request attempted"
    for attempt in range(cfg.max_retries):
        if attempt:
            time.sleep(cfg.backoff_seconds * (2 ** (attempt - 1)))
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=cfg.timeout_seconds)
        except requests.RequestException as exc:
            last_error = f"transport error: {exc}"
            continue
        if resp.status_code == 429 or resp.status_code >= 500:
            last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
            continue
        if resp.status_code >= 400:
            raise LlmError(f"HTTP {resp.status_code} (not retryable): {resp.text[:200]}")
        try:
            data = resp.json()
        except ValueError:
            raise LlmProtocolError(f"response is not JSON: {resp.text[:200]}")
        choices = data.get("choices") or []
        if not choices:
            raise LlmProtocolError(f"response has no choices: {json.dumps(data)[:200]}")
        message = choices[0].get("message") or {}
        content = message.get("content")
        if content is None:
            raise LlmProtocolError("first choice has no message content")
        return content
    raise LlmError(f"gave up after {cfg.max_retries} attempts; last error: {last_error}")


# ── Stub server ──────────────────────────────────────────────────────────────


class StubServer:
    """Scripted chat-completion endpoint for offline tests.

    Each script entry is a dict consumed in request order:

    * ``{"content": "..."}`` answers 200 with that assistant message
    * ``{"status": 503}`` answers that status (body optional via "error")
    * ``{"echo": true}`` answers 200 echoing the request's user message
    * ``"repeat": true`` on the final entry reuses it forever

    Received request payloads and headers are kept for assertions.
    """

    def __init__(self, script: list[dict]):
        self.script = list(script)
        self.requests: list[dict] = []
        self.request_headers: list[dict] = []
        self._cursor = 0
        self._lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    @classmethod
    def from_script_file(cls, path: str) -> "StubServer":
        """Load one JSON response entry per line."""
        with open(path, encoding="utf-8") as fh:
            entries = [json.loads(line) for line in fh if line.strip()]
        return cls(entries)

    def _next_entry(self) -> dict | None:
        with self._lock:
            if self._cursor < len(self.script):
                entry = self.script[self._cursor]
                if not (entry.get("repeat") and self._cursor == len(self.script) - 1):
                    self._cursor += 1
                return entry
            return None

    @property
    def base_url(self) -> str:
        assert self._server is not None, "stub server is not running"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "StubServer":
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self) -> None:  # noqa: N802 (http.server API)
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                stub.requests.append(body)
                stub.request_headers.append(dict(self.headers))
                entry = stub._next_entry()
                if entry is None:
                    self._reply(500, {"error": "script exhausted"})
                    return
                status = int(entry.get("status", 200))
                if status != 200:
                    self._reply(status, {"error": entry.get("error", f"scripted {status}")})
                    return
                if entry.get("echo"):
                    users = [m for m in body.get("messages", []) if m.get("role") == "user"]
                    content = users[-1]["content"] if users else ""
                elif "body" in entry:
                    self._reply(200, entry["body"])
                    return
                else:
                    content = entry.get("content", "")
                self._reply(
                    200,
                    {
                        "id": "stub",
                        "object": "chat.completion",
                        "choices": [
                            {
                                "index": 0,
                                "message": {"role": "assistant", "content": content},
                                "finish_reason": "stop",
                            }
                        ],
                    },
                )

            def _reply(self, status: int, obj: dict) -> None:
                data = json.dumps(obj).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args) -> None:
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc_info) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
