"""Completion providers: the HTTPS transport and scripted stubs for tests.

A provider is anything with an ``id`` and ``complete(prompt) -> document``.
Transport-level failures raise TransportError; the generation loop decides
whether to retry or give up.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Protocol, runtime_checkable

import httpx


class TransportError(Exception):
    """The provider endpoint could not be reached or answered abnormally."""


class ProviderUnavailable(Exception):
    """Every generation attempt died at the transport level."""


@runtime_checkable
class Provider(Protocol):
    id: str

    def complete(self, prompt: str) -> str:
        ...


class HttpProvider:
    """Single-endpoint completion client.

    POSTs ``{"prompt": ...}`` to the configured URL with a bearer token read
    from the environment, and accepts either ``{"text": ...}`` /
    ``{"completion": ...}`` JSON or a raw text body.
    """

    def __init__(self, base_url: str, token_env: str = "SCAFFOLD_PROVIDER_TOKEN",
                 timeout_s: float = 30.0, retries: int = 1,
                 client: httpx.Client | None = None):
        self.id = f"http:{base_url}"
        self.base_url = base_url
        self.token_env = token_env
        self.timeout_s = timeout_s
        self.retries = retries
        self._client = client or httpx.Client(timeout=timeout_s)

    def complete(self, prompt: str) -> str:
        headers = {}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                response = self._client.post(
                    self.base_url,
                    json={"prompt": prompt},
                    headers=headers,
                    timeout=self.timeout_s,
                )
                response.raise_for_status()
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            try:
                payload = response.json()
            except ValueError:
                return response.text
            if isinstance(payload, dict):
                for key in ("text", "completion"):
                    if isinstance(payload.get(key), str):
                        return payload[key]
            return response.text
        raise TransportError(f"provider request failed: {last_error}") from last_error


class ScriptEnd(TransportError):
    """A stub ran out of scripted responses; behaves like an outage."""


TRANSPORT_FAILURE = "<<transport-failure>>"


class StubProvider:
    """Deterministic provider replaying scripted documents, in order.

    A script entry equal to TRANSPORT_FAILURE raises TransportError instead
    of answering. Every received prompt is recorded for assertions.
    """

    def __init__(self, scripts: list[str], provider_id: str = "stub"):
        self.id = provider_id
        self._scripts = list(scripts)
        self._cursor = 0
        self.prompts: list[str] = []

    @classmethod
    def from_files(cls, paths, provider_id: str = "stub-files") -> "StubProvider":
        scripts = [Path(p).read_text(encoding="utf-8") for p in paths]
        return cls(scripts, provider_id=provider_id)

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if self._cursor >= len(self._scripts):
            raise ScriptEnd("stub provider script exhausted")
        document = self._scripts[self._cursor]
        self._cursor += 1
        if document == TRANSPORT_FAILURE:
            raise TransportError("scripted transport failure")
        return document
