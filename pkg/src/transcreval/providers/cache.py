"""Content-addressed on-disk response cache.

Layout: <cache_dir>/<first-2-hex>/<digest>.json, each file holding
{"request": summary, "response": payload, "timestamp": unix seconds}.
Writes go through a temp file plus atomic rename, so concurrent writers and
crashes never leave a torn entry behind.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
from pathlib import Path

from .base import (
    ChatProvider,
    ChatRequest,
    ChatResponse,
    EmbeddingProvider,
    EmbeddingVector,
    chat_cache_key,
    embed_cache_key,
    part_digest,
)


class ResponseCache:
    def __init__(self, cache_dir: str | Path) -> None:
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    def path_for(self, digest: str) -> Path:
        return self.cache_dir / digest[:2] / f"{digest}.json"

    def get(self, digest: str) -> dict | None:
        path = self.path_for(digest)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                entry = json.load(fh)
        except FileNotFoundError:
            self.misses += 1
            return None
        except (json.JSONDecodeError, OSError):
            # torn or corrupt entry: treat as a miss, it will be rewritten
            self.misses += 1
            return None
        self.hits += 1
        return entry.get("response")

    def put(self, digest: str, request_summary: dict, response: dict) -> None:
        path = self.path_for(digest)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "request": request_summary,
            "response": response,
            "timestamp": time.time(),
        }
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(entry, fh, ensure_ascii=False, sort_keys=True)
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise


def cache_gc(cache_dir: str | Path, max_age_seconds: float, now: float | None = None) -> int:
    """Remove entries whose stored timestamp is at least max_age_seconds old
    (so max_age 0 clears everything); returns the number removed. Age comes
    from the entry payload, not file mtime, so copies and backups behave."""
    cache_dir = Path(cache_dir)
    if not cache_dir.is_dir():
        raise IOError(f"cache directory does not exist: {cache_dir}")
    now = time.time() if now is None else now
    removed = 0
    for path in sorted(cache_dir.glob("??/*.json")):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                stamp = json.load(fh).get("timestamp")
            stale = not isinstance(stamp, (int, float)) or now - stamp >= max_age_seconds
        except (json.JSONDecodeError, OSError):
            stale = True  # unreadable entries are garbage by definition
        if stale:
            try:
                path.unlink()
                removed += 1
            except FileNotFoundError:
                pass  # concurrent gc got it first
    return removed


class CachedChatProvider(ChatProvider):
    """Serves repeats from the cache; writes through on miss."""

    def __init__(self, inner: ChatProvider, cache: ResponseCache) -> None:
        super().__init__()
        self.inner = inner
        self.provider_id = inner.provider_id
        self.cache = cache

    def chat(self, req: ChatRequest) -> ChatResponse:
        digest = chat_cache_key(self.provider_id, req)
        hit = self.cache.get(digest)
        if hit is not None:
            return ChatResponse(text=hit["text"], provider_meta={"cache": "hit"})
        resp = self.inner.chat(req)
        summary = {
            "kind": "chat",
            "provider": self.provider_id,
            "model": req.model_id,
            "parts": [part_digest(p) for p in req.parts],
            "decoding": {
                "temperature": req.decoding.temperature,
                "max_output_tokens": req.decoding.max_output_tokens,
            },
        }
        self.cache.put(digest, summary, {"text": resp.text})
        return resp


class CachedEmbeddingProvider(EmbeddingProvider):
    def __init__(self, inner: EmbeddingProvider, cache: ResponseCache) -> None:
        super().__init__(model_id=inner.model_id)
        self.inner = inner
        self.provider_id = inner.provider_id
        self.cache = cache

    def _lookup(self, kind: str, data: bytes, model_id: str) -> EmbeddingVector | None:
        digest = embed_cache_key(self.provider_id, model_id, kind, data)
        hit = self.cache.get(digest)
        if hit is None:
            return None
        return EmbeddingVector(values=tuple(hit["values"]), model_id=hit["model_id"])

    def _store(self, kind: str, data: bytes, model_id: str, vec: EmbeddingVector) -> None:
        # keyed by the REQUESTED model id, matching _lookup, even when the
        # backend reports a different effective model name in the vector
        digest = embed_cache_key(self.provider_id, model_id, kind, data)
        summary = {"kind": kind, "provider": self.provider_id, "model": model_id}
        self.cache.put(digest, summary, {"values": list(vec.values), "model_id": vec.model_id})

    def embed_image(self, image: bytes, model_id: str | None = None) -> EmbeddingVector:
        model_id = model_id or self.model_id
        hit = self._lookup("embed_image", image, model_id)
        if hit is not None:
            return hit
        vec = self.inner.embed_image(image, model_id)
        self._store("embed_image", image, model_id, vec)
        return vec

    def embed_text(self, text: str, model_id: str | None = None) -> EmbeddingVector:
        model_id = model_id or self.model_id
        data = text.encode("utf-8")
        hit = self._lookup("embed_text", data, model_id)
        if hit is not None:
            return hit
        vec = self.inner.embed_text(text, model_id)
        self._store("embed_text", data, model_id, vec)
        return vec
