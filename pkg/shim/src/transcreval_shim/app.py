"""HTTP surface: /embed/image, /embed/text, /chat, /health.

Responses follow wire_schema.json (shipped next to this module); error bodies
are always {"error": str}. Handlers are synchronous on purpose: the
framework's worker pool accepts requests concurrently while a per-backend
lock serializes inference, so callers only ever observe latency.
"""

from __future__ import annotations

import base64
import threading
from typing import Literal

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .backends import build_chat_backend, build_embed_backend, check_image
from .config import ShimConfig
from .errors import BadInput, ModelUnavailable, PayloadTooLarge, ShimError

_LENIENT = ConfigDict(protected_namespaces=())


class EmbedImageBody(BaseModel):
    model_config = _LENIENT
    model_id: str = "default"
    image_b64: str


class EmbedTextBody(BaseModel):
    model_config = _LENIENT
    model_id: str = "default"
    text: str


class ChatPartBody(BaseModel):
    model_config = _LENIENT
    type: Literal["text", "image"]
    text: str | None = None
    data_b64: str | None = None


class ChatBody(BaseModel):
    model_config = _LENIENT
    model_id: str = "default"
    parts: list[ChatPartBody]
    temperature: float = 0.0
    max_output_tokens: int = 1024


def _resolve(backend, requested: str, kind: str):
    if backend is None:
        raise ModelUnavailable(f"no {kind} model is configured")
    if requested not in ("default", backend.model_id):
        raise ModelUnavailable(
            f"model {requested!r} is not loaded (this shim hosts {backend.model_id!r})"
        )
    return backend


def _decode_image(b64: str, cap: int) -> bytes:
    if len(b64) > (cap * 4) // 3 + 8:
        raise PayloadTooLarge(f"image payload exceeds the {cap}-byte cap")
    try:
        data = base64.b64decode(b64, validate=True)
    except Exception:
        raise BadInput("image_b64 is not valid base64")
    if len(data) > cap:
        raise PayloadTooLarge(f"image payload exceeds the {cap}-byte cap")
    check_image(data)
    return data


def create_app(config: ShimConfig | None = None) -> FastAPI:
    config = config or ShimConfig()
    embed_backend = build_embed_backend(config)
    chat_backend = build_chat_backend(config)
    embed_lock = threading.Lock()
    chat_lock = threading.Lock()

    app = FastAPI(title="transcreval inference shim", version="0.1.0")

    @app.exception_handler(ShimError)
    def _shim_error(request, exc: ShimError):
        return JSONResponse({"error": str(exc) or type(exc).__name__}, status_code=exc.status)

    @app.exception_handler(RequestValidationError)
    def _invalid_request(request, exc: RequestValidationError):
        return JSONResponse({"error": f"invalid request: {exc}"}, status_code=400)

    @app.post("/embed/image")
    def embed_image(body: EmbedImageBody):
        backend = _resolve(embed_backend, body.model_id, "embedding")
        data = _decode_image(body.image_b64, config.max_image_bytes)
        with embed_lock:
            vector = backend.embed_image(data)
        return {"vector": vector, "model_id": backend.model_id, "dim": len(vector)}

    @app.post("/embed/text")
    def embed_text(body: EmbedTextBody):
        backend = _resolve(embed_backend, body.model_id, "embedding")
        if not body.text.strip():
            raise BadInput("text must be non-empty")
        with embed_lock:
            vector = backend.embed_text(body.text)
        return {"vector": vector, "model_id": backend.model_id, "dim": len(vector)}

    @app.post("/chat")
    def chat(body: ChatBody):
        backend = _resolve(chat_backend, body.model_id, "chat")
        if not body.parts:
            raise BadInput("chat request needs at least one part")
        parts = []
        for part in body.parts:
            if part.type == "text":
                if part.text is None:
                    raise BadInput("text part lacks a text field")
                parts.append({"type": "text", "text": part.text})
            else:
                if part.data_b64 is None:
                    raise BadInput("image part lacks a data_b64 field")
                parts.append(
                    {"type": "image", "data": _decode_image(part.data_b64, config.max_image_bytes)}
                )
        with chat_lock:
            text = backend.complete(parts, body.temperature, body.max_output_tokens)
        return {"text": text, "model_id": backend.model_id}

    @app.get("/health")
    def health():
        models = [b.model_id for b in (embed_backend, chat_backend) if b is not None]
        return {"status": "ok", "models": models}

    return app
