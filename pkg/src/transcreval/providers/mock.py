"""Deterministic offline providers.

Every mock is a pure function of (seed, request): the same request always
produces the same response, across processes and runs. End-to-end tests and
the acceptance suite depend on that, so no mock may consult wall-clock time,
global RNG state, or filesystem state when producing content.
"""

from __future__ import annotations

import hashlib
import json
import re
import time

import numpy as np

from ..errors import ProviderError, TransientProviderError
from .base import (
    ChatProvider,
    ChatRequest,
    ChatResponse,
    EmbeddingProvider,
    EmbeddingVector,
    chat_cache_key,
    unit_normalize,
)


class MockChatProvider(ChatProvider):
    """Delegates content to a responder callable: responder(req) -> str or
    ChatResponse, or raises a ProviderError to simulate backend failures."""

    def __init__(self, responder, provider_id: str = "mock-chat", latency_s: float = 0.0):
        super().__init__()
        self.provider_id = provider_id
        self.responder = responder
        self.latency_s = latency_s

    def chat(self, req: ChatRequest) -> ChatResponse:
        self.calls += 1
        if self.latency_s:
            time.sleep(self.latency_s)
        out = self.responder(req)
        if isinstance(out, ChatResponse):
            return out
        return ChatResponse(text=str(out))


def substring_responder(table: dict[str, str], default: str | None = None):
    """Responder keyed on the first table key found in the request text."""

    def responder(req: ChatRequest) -> str:
        text = req.text_content()
        for needle, reply in table.items():
            if needle in text:
                return reply
        if default is None:
            raise ProviderError(f"no mock reply matches request text: {text[:80]!r}")
        return default

    return responder


def rule_responder(rules, default=None):
    """Responder from (predicate, outcome) pairs; outcome may be a string, a
    callable of the request, or an exception instance to raise."""

    def responder(req: ChatRequest) -> str:
        for predicate, outcome in rules:
            if predicate(req):
                if isinstance(outcome, BaseException):
                    raise outcome
                if callable(outcome):
                    return outcome(req)
                return outcome
        if default is None:
            raise ProviderError("no mock rule matches request")
        if isinstance(default, BaseException):
            raise default
        if callable(default):
            return default(req)
        return default

    return responder


# Specific-sounding entity names for synthetic pipelines. Small on purpose:
# replacement lists and target detections draw from the same pool, so overlap
# (and therefore nonzero CSI scores) occurs at a useful rate.
ENTITY_VOCAB = (
    "red lantern",
    "clay pot",
    "folding fan",
    "reed basket",
    "copper kettle",
    "maple syrup",
    "rice cake",
    "olive jar",
    "tin whistle",
    "woven rug",
    "glass bead",
    "oak barrel",
    "paper kite",
    "stone mortar",
    "silk scarf",
    "brass bell",
)

_ENTITIES_RE = re.compile(r"identified these entities: (.*?)\. Your goal", re.DOTALL)
_LIST1_RE = re.compile(r"^List 1: (.*)$", re.MULTILINE)
_LIST2_RE = re.compile(r"^List 2: (.*)$", re.MULTILINE)


def _digest_int(*parts: str) -> int:
    blob = "|".join(parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def synthetic_chat_responder(seed: int = 0, malformed_every: int = 20):
    """Responder that plays every chat role in the pipeline: object detection,
    replacement proposal, list matching, and 1-5 judging. Judge replies are
    malformed for one request digest in `malformed_every` (0 disables), which
    keeps a small, deterministic population of non-parsable segments in any
    synthetic run, mirroring what real model output looks like in bulk.
    """

    def responder(req: ChatRequest) -> str:
        # keyed on the full request digest: any byte-level change in parts or
        # decoding yields an independent response
        base = chat_cache_key("synthetic", req)
        text = req.text_content()

        if "comma-separated list of entities" in text:
            count = 3 + _digest_int(str(seed), base, "count") % 3
            picks = []
            for i in range(count):
                word = ENTITY_VOCAB[_digest_int(str(seed), base, f"ent{i}") % len(ENTITY_VOCAB)]
                if word not in picks:
                    picks.append(word)
            return ", ".join(picks)

        if "image editor tasked with adapting visuals" in text:
            match = _ENTITIES_RE.search(text)
            entities = [e.strip() for e in match.group(1).split(",")] if match else []
            mapping: dict[str, list[str]] = {}
            for entity in entities:
                if _digest_int(str(seed), base, "csi", entity) % 2 == 0:
                    continue  # judged universally recognizable
                n_rep = 2 + _digest_int(str(seed), base, "nrep", entity) % 2
                reps = []
                for i in range(n_rep):
                    word = ENTITY_VOCAB[
                        _digest_int(str(seed), base, "rep", entity, str(i)) % len(ENTITY_VOCAB)
                    ]
                    if word not in reps and word.lower() != entity.lower():
                        reps.append(word)
                if reps:
                    mapping[entity] = reps
            payload: dict = {"reasoning": "synthetic replacement proposal"}
            payload.update(mapping)
            return json.dumps(payload, ensure_ascii=False)

        if "two lists of objects, List 1 and List 2" in text:
            from ..csi import lexical_match_names  # deferred: csi imports providers.base

            m1, m2 = _LIST1_RE.search(text), _LIST2_RE.search(text)
            list1 = [e.strip() for e in m1.group(1).split(",")] if m1 else []
            list2 = [e.strip() for e in m2.group(1).split(",")] if m2 else []
            matches = lexical_match_names(list1, list2)
            return json.dumps(
                {"reasoning": "synthetic lexical comparison", "matches": matches},
                ensure_ascii=False,
            )

        if "first_score" in text:
            if malformed_every and _digest_int(str(seed), base, "mal") % malformed_every == 0:
                return "The first image feels more traditional than the second one."
            first = 1 + _digest_int(str(seed), base, "first") % 5
            second = 1 + _digest_int(str(seed), base, "second") % 5
            return json.dumps(
                {
                    "first_reasoning": "synthetic assessment of the first image",
                    "first_score": first,
                    "second_reasoning": "synthetic assessment of the second image",
                    "second_score": second,
                }
            )

        if '"score": number' in text:
            if malformed_every and _digest_int(str(seed), base, "mal") % malformed_every == 0:
                return "I would rate this a solid middle score, maybe higher."
            score = 1 + _digest_int(str(seed), base, "score") % 5
            return json.dumps({"reasoning": "synthetic judgement", "score": score})

        return json.dumps({"reasoning": "unrecognized request", "score": None})

    return responder


class MockEmbeddingProvider(EmbeddingProvider):
    """Unit vectors drawn from a Gaussian seeded by (seed, kind, model, bytes)."""

    provider_id = "mock-embed"

    def __init__(
        self,
        seed: int = 0,
        dim: int = 64,
        model_id: str = "mock-embed",
        latency_s: float = 0.0,
    ):
        super().__init__(model_id=model_id)
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.seed = seed
        self.dim = dim
        self.latency_s = latency_s

    def _vector(self, kind: str, data: bytes, model_id: str) -> EmbeddingVector:
        self.calls += 1
        if self.latency_s:
            time.sleep(self.latency_s)
        digest = hashlib.sha256(f"{self.seed}|{kind}|{model_id}|".encode("utf-8") + data)
        rng = np.random.default_rng(int.from_bytes(digest.digest()[:8], "big"))
        return unit_normalize(rng.standard_normal(self.dim), model_id)

    def embed_image(self, image: bytes, model_id: str | None = None) -> EmbeddingVector:
        return self._vector("embed_image", image, model_id or self.model_id)

    def embed_text(self, text: str, model_id: str | None = None) -> EmbeddingVector:
        return self._vector("embed_text", text.encode("utf-8"), model_id or self.model_id)


class TableEmbeddingProvider(EmbeddingProvider):
    """Exact vectors for constructed-geometry tests (e.g. target embedding
    equal to the cultural text embedding, source orthogonal to it)."""

    provider_id = "table-embed"

    def __init__(self, text_vectors=None, image_vectors=None, model_id: str = "table-embed"):
        super().__init__(model_id=model_id)
        self.text_vectors = dict(text_vectors or {})
        self.image_vectors = dict(image_vectors or {})

    def embed_image(self, image: bytes, model_id: str | None = None) -> EmbeddingVector:
        self.calls += 1
        if image not in self.image_vectors:
            raise ProviderError("no table vector for these image bytes")
        return unit_normalize(self.image_vectors[image], model_id or self.model_id)

    def embed_text(self, text: str, model_id: str | None = None) -> EmbeddingVector:
        self.calls += 1
        if text not in self.text_vectors:
            raise ProviderError(f"no table vector for text {text!r}")
        return unit_normalize(self.text_vectors[text], model_id or self.model_id)


class FlakyChatProvider(ChatProvider):
    """Fails the first `fail_first` calls with a transient error, then
    delegates; exercises the retry/backoff path."""

    def __init__(self, inner: ChatProvider, fail_first: int = 2, status: int = 429):
        super().__init__()
        self.provider_id = inner.provider_id
        self.inner = inner
        self.remaining_failures = fail_first
        self.status = status

    def chat(self, req: ChatRequest) -> ChatResponse:
        self.calls += 1
        if self.remaining_failures > 0:
            self.remaining_failures -= 1
            raise TransientProviderError("simulated transient failure", status=self.status)
        return self.inner.chat(req)
