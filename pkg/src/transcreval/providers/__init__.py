"""Model access: request/response types, caching, retries, deterministic
mocks, and network-backed chat/embedding providers."""

from .base import (
    ChatProvider,
    ChatRequest,
    ChatResponse,
    Decoding,
    EmbeddingProvider,
    EmbeddingVector,
    ImagePart,
    ParallelismLimiter,
    TextPart,
    chat_cache_key,
    check_image_bytes,
    embed_cache_key,
    part_digest,
    unit_normalize,
    with_retries,
)
from .cache import CachedChatProvider, CachedEmbeddingProvider, ResponseCache, cache_gc
from .config import ProvidersBundle, build_providers
from .http import HttpChatProvider, ShimChatProvider, ShimEmbeddingProvider, shim_health
from .mock import (
    ENTITY_VOCAB,
    FlakyChatProvider,
    MockChatProvider,
    MockEmbeddingProvider,
    TableEmbeddingProvider,
    rule_responder,
    substring_responder,
    synthetic_chat_responder,
)

__all__ = [
    "ChatProvider",
    "ChatRequest",
    "ChatResponse",
    "Decoding",
    "EmbeddingProvider",
    "EmbeddingVector",
    "ImagePart",
    "ParallelismLimiter",
    "TextPart",
    "chat_cache_key",
    "check_image_bytes",
    "embed_cache_key",
    "part_digest",
    "unit_normalize",
    "with_retries",
    "CachedChatProvider",
    "CachedEmbeddingProvider",
    "ResponseCache",
    "cache_gc",
    "ProvidersBundle",
    "build_providers",
    "HttpChatProvider",
    "ShimChatProvider",
    "ShimEmbeddingProvider",
    "shim_health",
    "ENTITY_VOCAB",
    "FlakyChatProvider",
    "MockChatProvider",
    "MockEmbeddingProvider",
    "TableEmbeddingProvider",
    "rule_responder",
    "substring_responder",
    "synthetic_chat_responder",
]
