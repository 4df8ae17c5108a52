"""Chat-completion client with the pipeline's sampling defaults.

Speaks the widely adopted chat-completions request/response shape so any
compatible server works, including locally hosted ones.  A deterministic
mock transport keeps the whole suite runnable offline; the real transport
retries transient failures with exponential backoff and never retries 4xx.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import requests

from .errors import (
    ConfigurationError,
    ExtractionError,
    GenerationUnavailableError,
    TransportError,
)

__all__ = [
    "GenerationParams",
    "HttpTransport",
    "MockTransport",
    "GenClient",
    "extract_code",
    "prompt_digest",
]

log = logging.getLogger(__name__)

API_KEY_ENV = "NNGEN_API_KEY"


@dataclass
class GenerationParams:
    """Sampling and transport settings for one generation endpoint."""

    model_name: str = "local-coder"
    endpoint_url: str = "http://127.0.0.1:8000/v1/chat/completions"
    temperature: float = 0.6
    top_k: int = 50
    top_p: float = 0.95
    max_tokens: int = 65536
    timeout: float = 300.0
    max_retries: int = 3
    backoff_base: float = 0.5

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if not 0 < self.top_p <= 1:
            raise ValueError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")


def prompt_digest(prompt: str) -> str:
    """Stable key for canned mock completions."""
    return hashlib.md5(prompt.encode("utf-8")).hexdigest()


class HttpTransport:
    """POSTs chat-completion payloads to a real endpoint."""

    def __init__(self, url: str, api_key: str | None = None):
        self.url = url
        self.api_key = api_key
        self._session = requests.Session()

    def send(self, payload: dict, timeout: float) -> tuple[int, Any]:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.post(
                self.url, json=payload, headers=headers, timeout=timeout
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        try:
            body = resp.json()
        except ValueError:
            body = resp.text
        return resp.status_code, body


class MockTransport:
    """Offline stand-in: scripted events first, then canned completions.

    ``script`` entries are consumed in order; each is a dict with optional
    keys ``status`` (default 200), ``content`` (the completion text), and
    ``error`` (truthy -> simulate a connection failure).  When the script
    is exhausted, prompts are answered from ``canned`` (prompt-digest ->
    completion), falling back to ``default``.
    """

    def __init__(
        self,
        script: list[dict] | None = None,
        canned: dict[str, str] | None = None,
        default: str | None = None,
    ):
        self.script = list(script or [])
        self.canned = dict(canned or {})
        self.default = default
        self.requests: list[dict] = []

    @classmethod
    def from_fixture(cls, path: str | Path) -> "MockTransport":
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            script=spec.get("script"),
            canned=spec.get("canned"),
            default=spec.get("default"),
        )

    def send(self, payload: dict, timeout: float) -> tuple[int, Any]:
        self.requests.append(payload)
        event: dict = {}
        if self.script:
            event = self.script.pop(0)
        if event.get("error"):
            raise TransportError("scripted connection failure")
        status = int(event.get("status", 200))
        if status != 200:
            return status, {"error": {"message": event.get("message", "scripted failure")}}
        content = event.get("content")
        if content is None:
            prompt = payload["messages"][-1]["content"]
            content = self.canned.get(prompt_digest(prompt), self.default)
        if content is None:
            return 404, {"error": {"message": "no canned completion for prompt"}}
        return 200, {"choices": [{"message": {"role": "assistant", "content": content}}]}


class GenClient:
    """Issues generations and optionally journals raw exchanges."""

    def __init__(
        self,
        params: GenerationParams | None = None,
        transport=None,
        api_key: str | None = None,
        replay_log: str | Path | None = None,
    ):
        self.params = params or GenerationParams()
        if api_key is None:
            api_key = os.environ.get(API_KEY_ENV)
        self.transport = transport or HttpTransport(self.params.endpoint_url, api_key)
        self.replay_log = Path(replay_log) if replay_log else None
        self._send_top_k = True

    def _build_payload(self, prompt: str) -> dict:
        payload = {
            "model": self.params.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.params.temperature,
            "top_p": self.params.top_p,
            "max_tokens": self.params.max_tokens,
        }
        if self._send_top_k:
            payload["top_k"] = self.params.top_k
        return payload

    def _record_exchange(self, payload: dict, status: int, body: Any, latency: float) -> None:
        if self.replay_log is None:
            return
        entry = {
            "ts": time.time(),
            "prompt_digest": prompt_digest(payload["messages"][-1]["content"]),
            "request": payload,
            "status": status,
            "response": body,
            "latency_s": latency,
        }
        with open(self.replay_log, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")

    def generate(self, prompt: str) -> str:
        """Return the completion text, retrying transient failures.

        Up to ``max_retries`` retries after the first attempt, exponential
        backoff between attempts.  HTTP 4xx is a configuration problem and
        is not retried (except one silent reissue without ``top_k`` when
        the server rejects that field).
        """
        attempts = 0
        last_error = "no attempt made"
        while attempts <= self.params.max_retries:
            payload = self._build_payload(prompt)
            attempts += 1
            start = time.perf_counter()
            try:
                status, body = self.transport.send(payload, self.params.timeout)
            except TransportError as exc:
                last_error = str(exc)
                log.warning("generation attempt %d failed: %s", attempts, exc)
                self._backoff(attempts)
                continue
            latency = time.perf_counter() - start
            log.info("generation attempt %d: HTTP %d in %.3fs", attempts, status, latency)
            self._record_exchange(payload, status, body, latency)

            if status == 200:
                return self._completion_text(body)
            if 400 <= status < 500:
                if status == 400 and self._send_top_k and "top_k" in _body_text(body):
                    log.warning("endpoint rejects top_k; dropping it for this client")
                    self._send_top_k = False
                    attempts -= 1  # adaptation, not a retry
                    continue
                raise ConfigurationError(f"endpoint returned HTTP {status}: {_body_text(body)[:200]}")
            last_error = f"HTTP {status}"
            self._backoff(attempts)
        raise GenerationUnavailableError(
            f"generation failed after {attempts} attempts: {last_error}"
        )

    def _backoff(self, attempts: int) -> None:
        if attempts <= self.params.max_retries and self.params.backoff_base > 0:
            time.sleep(self.params.backoff_base * (2 ** (attempts - 1)))

    @staticmethod
    def _completion_text(body: Any) -> str:
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GenerationUnavailableError(
                f"malformed completion response: {_body_text(body)[:200]}"
            ) from exc


def _body_text(body: Any) -> str:
    return body if isinstance(body, str) else json.dumps(body)


# ---------------------------------------------------------------------------
# Candidate-code extraction
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(
    r"```[ \t]*[A-Za-z0-9_+-]*[ \t]*\r?\n(.*?)(?:\r?\n)?```", re.DOTALL
)


def extract_code(response: str) -> str:
    """Pull candidate source out of a completion.

    The contents of the first fenced code block win; without a fence, the
    suffix starting at the first line that begins with ``class `` or
    ``import `` is used.  Anything else is an extraction failure.
    """
    m = _FENCE_RE.search(response)
    if m:
        body = m.group(1)
        if body.strip():
            return body
        raise ExtractionError("fenced code block is empty")

    offset = 0
    for line in response.splitlines(keepends=True):
        if line.startswith("class ") or line.startswith("import "):
            return response[offset:]
        offset += len(line)
    raise ExtractionError("no code found in response")
