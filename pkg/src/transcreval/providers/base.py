"""Provider-facing request/response types, cache keys, retries, and the
parallelism limiter shared by every chat and embedding backend."""

from __future__ import annotations

import hashlib
import io
import json
import math
import random
import threading
import time
from dataclasses import dataclass, field

from PIL import Image, UnidentifiedImageError

from ..errors import (
    DecodeError,
    ProviderError,
    RateLimitExhausted,
    TransientProviderError,
)


def check_image_bytes(data: bytes) -> None:
    """Raise DecodeError unless the bytes decode as a raster image."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.verify()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"undecodable image bytes ({exc})")


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    data: bytes

    def __post_init__(self) -> None:
        check_image_bytes(self.data)


Part = TextPart | ImagePart


@dataclass(frozen=True)
class Decoding:
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    parts: tuple[Part, ...]
    decoding: Decoding = Decoding()

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValueError("a chat request needs at least one part")

    def text_content(self) -> str:
        return "\n".join(p.text for p in self.parts if isinstance(p, TextPart))


@dataclass(frozen=True)
class ChatResponse:
    text: str
    provider_meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str

    @property
    def dim(self) -> int:
        return len(self.values)


def unit_normalize(values, model_id: str) -> EmbeddingVector:
    """Normalization happens once, here at the provider boundary; cosine
    downstream is then a plain dot product."""
    floats = [float(v) for v in values]
    norm = math.sqrt(sum(v * v for v in floats))
    if norm == 0.0 or not math.isfinite(norm):
        raise ProviderError(f"embedding from {model_id!r} is zero or non-finite")
    return EmbeddingVector(values=tuple(v / norm for v in floats), model_id=model_id)


def part_digest(part: Part) -> str:
    if isinstance(part, TextPart):
        return "t:" + hashlib.sha256(part.text.encode("utf-8")).hexdigest()
    return "i:" + hashlib.sha256(part.data).hexdigest()


def chat_cache_key(provider_id: str, req: ChatRequest) -> str:
    payload = {
        "kind": "chat",
        "provider": provider_id,
        "model": req.model_id,
        "parts": [part_digest(p) for p in req.parts],
        "decoding": {
            "temperature": req.decoding.temperature,
            "max_output_tokens": req.decoding.max_output_tokens,
        },
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def embed_cache_key(provider_id: str, model_id: str, kind: str, data: bytes) -> str:
    payload = {
        "kind": kind,  # embed_image | embed_text
        "provider": provider_id,
        "model": model_id,
        "data": hashlib.sha256(data).hexdigest(),
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


class ChatProvider:
    """Interface: chat(req) -> ChatResponse. Subclasses count outbound calls
    in self.calls so harness runs can report how many requests left the cache."""

    provider_id = "chat"

    def __init__(self) -> None:
        self.calls = 0

    def chat(self, req: ChatRequest) -> ChatResponse:
        raise NotImplementedError


class EmbeddingProvider:
    provider_id = "embed"

    def __init__(self, model_id: str = "embed-model") -> None:
        self.calls = 0
        self.model_id = model_id

    def embed_image(self, image: bytes, model_id: str | None = None) -> EmbeddingVector:
        raise NotImplementedError

    def embed_text(self, text: str, model_id: str | None = None) -> EmbeddingVector:
        raise NotImplementedError


def with_retries(
    fn,
    *,
    attempts: int = 5,
    base_delay: float = 0.5,
    max_delay: float = 8.0,
    rng: random.Random | None = None,
    sleep=time.sleep,
):
    """Retry fn on transient failures (rate limits, 5xx) with exponential
    backoff and jitter. Non-transient ProviderErrors pass straight through."""
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    rng = rng or random.Random()
    last: TransientProviderError | None = None
    for attempt in range(attempts):
        try:
            return fn()
        except TransientProviderError as exc:
            last = exc
            if attempt == attempts - 1:
                break
            delay = min(base_delay * (2**attempt), max_delay)
            sleep(delay * (0.5 + rng.random()))  # jitter in [0.5x, 1.5x)
    raise RateLimitExhausted(
        f"gave up after {attempts} attempts: {last}",
        status=getattr(last, "status", None),
    )


class ParallelismLimiter:
    """Bounds in-flight requests per provider (default 4). Use as a context
    manager around each outbound call."""

    def __init__(self, max_in_flight: int = 4) -> None:
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.max_in_flight = max_in_flight
        self._sem = threading.BoundedSemaphore(max_in_flight)

    def __enter__(self):
        self._sem.acquire()
        return self

    def __exit__(self, *exc_info):
        self._sem.release()
        return False
