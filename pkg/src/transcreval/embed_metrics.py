"""Embedding-space metrics over a dual image/text encoder.

Three quantities per (source image, target image, segment metadata):
  cultural relevance shift  cos(V_tgt, T_cul) - cos(V_src, T_cul)
  semantic equivalence      cos(V_tgt, T_int)
  visual similarity         cos(V_src, V_tgt)
where T_cul embeds a country sentence and T_int a category sentence. Values
stay raw (no rescaling): downstream rank correlation is scale-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .prompts import load_template, render
from .providers.base import EmbeddingProvider, EmbeddingVector

CULTURAL_TEMPLATE_VARIANTS = ("country", "region")


def cultural_template(variant: str = "country") -> str:
    if variant not in CULTURAL_TEMPLATE_VARIANTS:
        raise ValueError(f"unknown cultural template variant {variant!r}")
    return load_template(f"embed_cultural_{variant}")


@dataclass(frozen=True)
class EmbedMetricScore:
    dimension: str
    value: float
    components: dict[str, float] = field(default_factory=dict)
    templates_used: tuple[str, ...] = ()


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Dot product of two same-model unit vectors, clamped to [-1, 1] against
    rounding in the provider's normalization."""
    if a.model_id != b.model_id:
        raise DimensionMismatch(f"embedding models differ: {a.model_id!r} vs {b.model_id!r}")
    if a.dim != b.dim:
        raise DimensionMismatch(f"embedding dimensions differ: {a.dim} vs {b.dim}")
    dot = float(np.dot(a.values, b.values))
    return max(-1.0, min(1.0, dot))


def cultural_relevance_shift(
    src: bytes,
    tgt: bytes,
    country: str,
    provider: EmbeddingProvider,
    *,
    template_variant: str = "country",
) -> EmbedMetricScore:
    text = render(cultural_template(template_variant), x=country)
    t_cul = provider.embed_text(text)
    cos_tgt = cosine(provider.embed_image(tgt), t_cul)
    cos_src = cosine(provider.embed_image(src), t_cul)
    return EmbedMetricScore(
        dimension="cultural_relevance",
        value=cos_tgt - cos_src,
        components={"cos(V_tgt,T_cul)": cos_tgt, "cos(V_src,T_cul)": cos_src},
        templates_used=(text,),
    )


def semantic_equivalence(
    tgt: bytes, category: str, provider: EmbeddingProvider
) -> EmbedMetricScore:
    text = render(load_template("embed_semantic_category"), x=category)
    value = cosine(provider.embed_image(tgt), provider.embed_text(text))
    return EmbedMetricScore(
        dimension="semantic_equivalence",
        value=value,
        components={"cos(V_tgt,T_int)": value},
        templates_used=(text,),
    )


def visual_similarity(src: bytes, tgt: bytes, provider: EmbeddingProvider) -> EmbedMetricScore:
    value = cosine(provider.embed_image(src), provider.embed_image(tgt))
    return EmbedMetricScore(
        dimension="visual_similarity",
        value=value,
        components={"cos(V_src,V_tgt)": value},
        templates_used=(),
    )
