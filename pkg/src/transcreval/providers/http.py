"""Network-backed providers.

HttpChatProvider speaks the common chat-completions JSON shape (text parts
plus base64 data-URI images in a single user message). ShimChatProvider and
ShimEmbeddingProvider speak the local inference shim's wire contract
(/chat, /embed/image, /embed/text, /health); see wire_schema.json next to
this module for the response shapes both sides validate against.
"""

from __future__ import annotations

import base64
import os
import random

import requests

from ..errors import AuthError, ProviderError, TransientProviderError
from .base import (
    ChatProvider,
    ChatRequest,
    ChatResponse,
    EmbeddingProvider,
    EmbeddingVector,
    ImagePart,
    ParallelismLimiter,
    TextPart,
    unit_normalize,
    with_retries,
)

_TRANSIENT_STATUSES = {408, 429, 500, 502, 503, 504}


def _raise_for_status(status: int, body: str) -> None:
    if status in (401, 403):
        raise AuthError(f"authentication rejected: {body[:200]}", status=status)
    if status in _TRANSIENT_STATUSES:
        raise TransientProviderError(f"transient failure: {body[:200]}", status=status)
    raise ProviderError(f"request failed: {body[:200]}", status=status)


def _post_json(session, url, payload, headers, timeout) -> dict:
    try:
        resp = session.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise TransientProviderError(f"connection failure: {exc}")
    if resp.status_code != 200:
        _raise_for_status(resp.status_code, resp.text)
    try:
        return resp.json()
    except ValueError as exc:
        raise ProviderError(f"non-JSON response body: {exc}")


class HttpChatProvider(ChatProvider):
    """Chat-completions style endpoint; credentials only via env var."""

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        api_key_env: str | None = None,
        provider_id: str = "http-chat",
        timeout: float = 120.0,
        max_in_flight: int = 4,
        retry_attempts: int = 5,
        rng: random.Random | None = None,
    ):
        super().__init__()
        self.provider_id = provider_id
        self.endpoint = endpoint
        self.model_id = model_id
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.retry_attempts = retry_attempts
        self.limiter = ParallelismLimiter(max_in_flight)
        self.session = requests.Session()
        self._rng = rng or random.Random()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if not key:
                raise AuthError(f"credential env var {self.api_key_env} is unset")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    @staticmethod
    def _content(req: ChatRequest) -> list[dict]:
        content = []
        for part in req.parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            else:
                b64 = base64.b64encode(part.data).decode("ascii")
                content.append(
                    {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}}
                )
        return content

    def chat(self, req: ChatRequest) -> ChatResponse:
        payload = {
            "model": req.model_id if req.model_id != "default" else self.model_id,
            "messages": [{"role": "user", "content": self._content(req)}],
            "temperature": req.decoding.temperature,
            "max_tokens": req.decoding.max_output_tokens,
        }

        def attempt() -> ChatResponse:
            self.calls += 1
            with self.limiter:
                data = _post_json(self.session, self.endpoint, payload, self._headers(), self.timeout)
            try:
                text = data["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise ProviderError(f"malformed chat-completions response: {exc}")
            return ChatResponse(text=text or "", provider_meta={"usage": data.get("usage", {})})

        return with_retries(attempt, attempts=self.retry_attempts, rng=self._rng)


class ShimChatProvider(ChatProvider):
    def __init__(
        self,
        base_url: str,
        model_id: str = "default",
        provider_id: str = "shim-chat",
        timeout: float = 300.0,
        max_in_flight: int = 4,
        retry_attempts: int = 5,
        rng: random.Random | None = None,
    ):
        super().__init__()
        self.provider_id = provider_id
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.timeout = timeout
        self.retry_attempts = retry_attempts
        self.limiter = ParallelismLimiter(max_in_flight)
        self.session = requests.Session()
        self._rng = rng or random.Random()

    def chat(self, req: ChatRequest) -> ChatResponse:
        parts = []
        for part in req.parts:
            if isinstance(part, TextPart):
                parts.append({"type": "text", "text": part.text})
            else:
                parts.append(
                    {"type": "image", "data_b64": base64.b64encode(part.data).decode("ascii")}
                )
        payload = {
            "model_id": req.model_id if req.model_id != "default" else self.model_id,
            "parts": parts,
            "temperature": req.decoding.temperature,
            "max_output_tokens": req.decoding.max_output_tokens,
        }

        def attempt() -> ChatResponse:
            self.calls += 1
            with self.limiter:
                data = _post_json(self.session, f"{self.base_url}/chat", payload, {}, self.timeout)
            if "text" not in data or not isinstance(data["text"], str):
                raise ProviderError("shim /chat response lacks a text field")
            return ChatResponse(text=data["text"], provider_meta={"model": data.get("model_id")})

        return with_retries(attempt, attempts=self.retry_attempts, rng=self._rng)


class ShimEmbeddingProvider(EmbeddingProvider):
    provider_id = "shim-embed"

    def __init__(
        self,
        base_url: str,
        model_id: str = "default",
        timeout: float = 120.0,
        max_in_flight: int = 4,
        retry_attempts: int = 5,
        rng: random.Random | None = None,
    ):
        super().__init__(model_id=model_id)
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retry_attempts = retry_attempts
        self.limiter = ParallelismLimiter(max_in_flight)
        self.session = requests.Session()
        self._rng = rng or random.Random()

    def _embed(self, path: str, payload: dict) -> EmbeddingVector:
        def attempt() -> EmbeddingVector:
            self.calls += 1
            with self.limiter:
                data = _post_json(
                    self.session, f"{self.base_url}{path}", payload, {}, self.timeout
                )
            for name in ("vector", "model_id", "dim"):
                if name not in data:
                    raise ProviderError(f"shim {path} response lacks {name}")
            if len(data["vector"]) != data["dim"]:
                raise ProviderError(f"shim {path} vector length disagrees with dim")
            return unit_normalize(data["vector"], data["model_id"])

        return with_retries(attempt, attempts=self.retry_attempts, rng=self._rng)

    def embed_image(self, image: bytes, model_id: str | None = None) -> EmbeddingVector:
        return self._embed(
            "/embed/image",
            {
                "model_id": model_id or self.model_id,
                "image_b64": base64.b64encode(image).decode("ascii"),
            },
        )

    def embed_text(self, text: str, model_id: str | None = None) -> EmbeddingVector:
        return self._embed("/embed/text", {"model_id": model_id or self.model_id, "text": text})


def shim_health(base_url: str, timeout: float = 10.0) -> dict:
    """GET /health; raises ProviderError when the shim is unreachable or sick."""
    try:
        resp = requests.get(f"{base_url.rstrip('/')}/health", timeout=timeout)
    except requests.RequestException as exc:
        raise ProviderError(f"shim health check failed: {exc}")
    if resp.status_code != 200:
        raise ProviderError(f"shim unhealthy: HTTP {resp.status_code}", status=resp.status_code)
    return resp.json()
