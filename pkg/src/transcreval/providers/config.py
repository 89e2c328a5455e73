"""Build providers from configuration dictionaries.

Bindings map a provider name (referenced by metric selections) to a typed
spec, e.g. {"chat": {"type": "synthetic-chat", "seed": 7}}. Construction is
pure: no network traffic happens here, so configuration errors surface before
any request is sent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from .base import ChatProvider, EmbeddingProvider
from .cache import CachedChatProvider, CachedEmbeddingProvider, ResponseCache
from .http import HttpChatProvider, ShimChatProvider, ShimEmbeddingProvider
from .mock import MockChatProvider, MockEmbeddingProvider, synthetic_chat_responder

CHAT_TYPES = ("synthetic-chat", "http-chat", "shim-chat")
EMBED_TYPES = ("mock-embed", "shim-embed")


@dataclass
class ProvidersBundle:
    by_name: dict[str, object] = field(default_factory=dict)  # cache-wrapped
    inners: dict[str, object] = field(default_factory=dict)  # raw, for call counts
    types: dict[str, str] = field(default_factory=dict)

    def provider_calls(self) -> int:
        return sum(p.calls for p in self.inners.values())

    def shim_urls(self) -> list[str]:
        urls = []
        for name, spec_type in self.types.items():
            if spec_type in ("shim-chat", "shim-embed"):
                urls.append(self.inners[name].base_url)
        return sorted(set(urls))


def _build_one(name: str, spec: dict, default_seed: int):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"provider {name!r} needs a dict spec with a 'type' key")
    kind = spec["type"]
    if kind == "synthetic-chat":
        return MockChatProvider(
            synthetic_chat_responder(
                seed=int(spec.get("seed", default_seed)),
                malformed_every=int(spec.get("malformed_every", 20)),
            ),
            provider_id=spec.get("provider_id", f"synthetic-chat-{name}"),
            latency_s=float(spec.get("latency_ms", 0)) / 1000.0,
        )
    if kind == "mock-embed":
        return MockEmbeddingProvider(
            seed=int(spec.get("seed", default_seed)),
            dim=int(spec.get("dim", 64)),
            model_id=spec.get("model_id", "mock-embed"),
            latency_s=float(spec.get("latency_ms", 0)) / 1000.0,
        )
    if kind == "http-chat":
        if "endpoint" not in spec or "model_id" not in spec:
            raise ConfigError(f"provider {name!r}: http-chat needs endpoint and model_id")
        return HttpChatProvider(
            endpoint=spec["endpoint"],
            model_id=spec["model_id"],
            api_key_env=spec.get("api_key_env"),
            provider_id=spec.get("provider_id", f"http-chat-{name}"),
            timeout=float(spec.get("timeout", 120.0)),
            max_in_flight=int(spec.get("max_in_flight", 4)),
        )
    if kind == "shim-chat":
        if "base_url" not in spec:
            raise ConfigError(f"provider {name!r}: shim-chat needs base_url")
        return ShimChatProvider(
            base_url=spec["base_url"],
            model_id=spec.get("model_id", "default"),
            timeout=float(spec.get("timeout", 300.0)),
            max_in_flight=int(spec.get("max_in_flight", 4)),
        )
    if kind == "shim-embed":
        if "base_url" not in spec:
            raise ConfigError(f"provider {name!r}: shim-embed needs base_url")
        return ShimEmbeddingProvider(
            base_url=spec["base_url"],
            model_id=spec.get("model_id", "default"),
            timeout=float(spec.get("timeout", 120.0)),
            max_in_flight=int(spec.get("max_in_flight", 4)),
        )
    raise ConfigError(f"provider {name!r} has unknown type {kind!r}")


def build_providers(
    bindings: dict, *, cache_dir: str | Path | None = None, default_seed: int = 0
) -> ProvidersBundle:
    bundle = ProvidersBundle()
    cache = ResponseCache(cache_dir) if cache_dir else None
    for name in sorted(bindings):
        inner = _build_one(name, bindings[name], default_seed)
        bundle.inners[name] = inner
        bundle.types[name] = bindings[name]["type"]
        if cache is None:
            bundle.by_name[name] = inner
        elif isinstance(inner, ChatProvider):
            bundle.by_name[name] = CachedChatProvider(inner, cache)
        elif isinstance(inner, EmbeddingProvider):
            bundle.by_name[name] = CachedEmbeddingProvider(inner, cache)
        else:  # pragma: no cover - all constructors above return one of the two
            raise ConfigError(f"provider {name!r} is neither chat nor embedding")
    return bundle
