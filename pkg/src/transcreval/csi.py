"""Object-replacement overlap metric.

Three chat-model steps: detect objects in the source image, propose
culturally-specific items (CSIs) with candidate replacements for the target
country, then check which CSIs actually got replaced in the system's output
image. The score is the replaced proportion; with no CSIs it is undefined
(None), never 0 or 1, so fully-universal images neither reward nor punish.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Callable

from .errors import ParseError
from .jsonextract import extract_json_object
from .prompts import load_template, render
from .providers.base import ChatProvider, ChatRequest, Decoding, ImagePart, TextPart

logger = logging.getLogger(__name__)

# Broad category words can never justify a match (matching-prompt exclusion
# list plus the obvious neighbors). Held in normalized form.
BROAD_TERMS = frozenset(
    {
        "animal",
        "plant",
        "flower",
        "object",
        "food",
        "material",
        "item",
        "thing",
        "entity",
    }
)


def normalize_entity(name: str) -> str:
    """Lowercase, fold punctuation to spaces, strip a plural trailing 's' per
    token (except after 'ss'). Idempotent: the result never ends in a
    strippable 's', so a second pass is the identity."""
    folded = re.sub(r"[\W_]+", " ", name.lower()).strip()
    tokens = []
    for tok in folded.split():
        if len(tok) > 1 and tok.endswith("s") and not tok.endswith("ss"):
            tok = tok[:-1]
        tokens.append(tok)
    return " ".join(tokens)


def lexical_match_names(list1, list2) -> list[str]:
    """Names from list2 whose normalized form also occurs in list1, broad
    terms excluded; order and casing follow list2, duplicates collapse."""
    norms1 = {normalize_entity(e) for e in list1} - BROAD_TERMS - {""}
    out: list[str] = []
    seen: set[str] = set()
    for name in list2:
        norm = normalize_entity(name)
        if norm and norm not in BROAD_TERMS and norm in norms1 and norm not in seen:
            seen.add(norm)
            out.append(name)
    return out


@dataclass(frozen=True)
class ObjectList:
    entities: tuple[str, ...]
    image_role: str  # source | target
    raw_text: str = ""


@dataclass(frozen=True)
class ReplacementMap:
    entries: dict[str, list[str]] = field(default_factory=dict)
    reasoning: str = ""
    raw_text: str = ""


@dataclass(frozen=True)
class CsiOverlapScore:
    value: float | None  # None when n_csis == 0: undefined, not 0, not 1
    n_csis: int
    n_replaced: int
    matches: tuple[tuple[str, str], ...]  # (csi, matched target entity)
    provenance: dict[str, str] = field(default_factory=dict)


def detect_objects(
    image: bytes,
    provider: ChatProvider,
    *,
    model_id: str = "default",
    role: str = "source",
    decoding: Decoding = Decoding(),
) -> ObjectList:
    """One comma-separated detection pass over a single image."""
    req = ChatRequest(
        model_id=model_id,
        parts=(TextPart(load_template("detect_objects")), ImagePart(image)),
        decoding=decoding,
    )
    resp = provider.chat(req)
    entities: list[str] = []
    seen: set[str] = set()
    for chunk in resp.text.split(","):
        name = chunk.strip()
        if not name:
            continue
        key = name.casefold()
        if key in seen:
            continue  # dedup is case-insensitive, first-seen casing wins
        seen.add(key)
        entities.append(name)
    if not entities:
        raise ParseError(f"empty object-detection output for {role} image")
    return ObjectList(entities=tuple(entities), image_role=role, raw_text=resp.text)


def propose_replacements(
    objects: ObjectList,
    target_country: str,
    category: str,
    provider: ChatProvider,
    *,
    model_id: str = "default",
    decoding: Decoding = Decoding(),
) -> ReplacementMap:
    """Ask for CSI → replacement-list JSON; the reasoning key is split out,
    keys that do not normalize to a detected object are dropped loudly."""
    if not objects.entities:
        raise ValueError("propose_replacements requires a non-empty object list")
    prompt = render(
        load_template("propose_replacements"),
        objects=", ".join(objects.entities),
        country=target_country,
        category=category,
    )
    resp = provider.chat(
        ChatRequest(model_id=model_id, parts=(TextPart(prompt),), decoding=decoding)
    )
    obj, _repaired = extract_json_object(resp.text)

    reasoning = ""
    for key in list(obj):
        if key.lower() == "reasoning":
            reasoning = str(obj.pop(key))
    source_norms = {normalize_entity(e) for e in objects.entities}
    entries: dict[str, list[str]] = {}
    for key, value in obj.items():
        if not isinstance(value, list) or not value:
            logger.warning("dropping replacement key %r: value is not a non-empty list", key)
            continue
        if normalize_entity(key) not in source_norms:
            logger.warning("dropping replacement key %r: not among detected objects", key)
            continue
        reps: list[str] = []
        seen: set[str] = set()
        for item in value:
            name = str(item).strip()
            if name and name.casefold() not in seen:
                seen.add(name.casefold())
                reps.append(name)
        if reps:
            entries[key] = reps
    return ReplacementMap(entries=entries, reasoning=reasoning, raw_text=resp.text)


def _lexical_target_index(target_objects: ObjectList) -> dict[str, str]:
    index: dict[str, str] = {}
    for name in target_objects.entities:
        norm = normalize_entity(name)
        if norm and norm not in BROAD_TERMS and norm not in index:
            index[norm] = name
    return index


def match_replacements(
    rep_map: ReplacementMap,
    target_objects: ObjectList,
    matcher: str = "lexical",
    provider: ChatProvider | None = None,
    *,
    model_id: str = "default",
    decoding: Decoding = Decoding(),
) -> CsiOverlapScore:
    """Count each CSI as replaced iff one of its replacements shows up among
    the target image's objects. The lexical matcher is pure (the offline
    oracle); the llm matcher sends both lists to a chat model and then
    cross-checks every claimed match against both lists before counting it.
    """
    n_csis = len(rep_map.entries)
    if n_csis == 0:
        return CsiOverlapScore(value=None, n_csis=0, n_replaced=0, matches=(), provenance={})

    target_index = _lexical_target_index(target_objects)
    matches: list[tuple[str, str]] = []
    provenance: dict[str, str] = {}

    if matcher == "lexical":
        for csi, reps in rep_map.entries.items():
            for rep in reps:
                norm = normalize_entity(rep)
                if not norm or norm in BROAD_TERMS:
                    continue
                if norm in target_index:
                    matches.append((csi, target_index[norm]))
                    break
    elif matcher == "llm":
        if provider is None:
            raise ValueError("llm matcher requires a chat provider")
        list1: list[str] = []
        seen1: set[str] = set()
        rep_owner: dict[str, str] = {}  # replacement norm -> owning CSI (first claim wins)
        for csi, reps in rep_map.entries.items():
            for rep in reps:
                if rep.casefold() not in seen1:
                    seen1.add(rep.casefold())
                    list1.append(rep)
                rep_owner.setdefault(normalize_entity(rep), csi)
        prompt = render(
            load_template("match_lists"),
            list1=", ".join(list1),
            list2=", ".join(target_objects.entities),
        )
        resp = provider.chat(
            ChatRequest(model_id=model_id, parts=(TextPart(prompt),), decoding=decoding)
        )
        provenance["matching"] = resp.text
        obj, _repaired = extract_json_object(resp.text)
        raw_matches = obj.get("matches", obj.get("matching_objects"))
        if not isinstance(raw_matches, list):
            raise ParseError("matching output lacks a 'matches' list")
        matched_csis: set[str] = set()
        for item in raw_matches:
            norm = normalize_entity(str(item))
            if not norm or norm in BROAD_TERMS:
                continue  # broad terms never justify a match
            csi = rep_owner.get(norm)
            target = target_index.get(norm)
            if csi is None or target is None:
                logger.warning("ignoring claimed match %r: absent from a list", item)
                continue
            if csi in matched_csis:
                continue
            matched_csis.add(csi)
            matches.append((csi, target))
    else:
        raise ValueError(f"unknown matcher {matcher!r}")

    n_replaced = len({csi for csi, _ in matches})
    return CsiOverlapScore(
        value=n_replaced / n_csis,
        n_csis=n_csis,
        n_replaced=n_replaced,
        matches=tuple(matches),
        provenance=provenance,
    )


@dataclass
class CsiConfig:
    provider: ChatProvider
    read_image: Callable[[str], bytes]
    matcher: str = "lexical"
    match_provider: ChatProvider | None = None
    model_id: str = "default"
    decoding: Decoding = Decoding()


def csi_overlap(segment, output, config: CsiConfig) -> CsiOverlapScore:
    """Full pipeline for one (segment, system output) pair.

    An empty source detection means no objects, hence no CSIs: undefined
    score. Later-step parse failures and provider errors propagate; the
    caller records those as non-parsable.
    """
    src_bytes = config.read_image(segment.source_image)
    tgt_bytes = config.read_image(output.target_image)
    provenance: dict[str, str] = {}

    try:
        src_objects = detect_objects(
            src_bytes, config.provider, model_id=config.model_id, role="source",
            decoding=config.decoding,
        )
    except ParseError:
        provenance["note"] = "no objects detected in source image"
        return CsiOverlapScore(value=None, n_csis=0, n_replaced=0, matches=(), provenance=provenance)
    provenance["source_detection"] = src_objects.raw_text

    rep_map = propose_replacements(
        src_objects, segment.target_country, segment.category, config.provider,
        model_id=config.model_id, decoding=config.decoding,
    )
    provenance["replacements"] = rep_map.raw_text
    if not rep_map.entries:
        return CsiOverlapScore(value=None, n_csis=0, n_replaced=0, matches=(), provenance=provenance)

    tgt_objects = detect_objects(
        tgt_bytes, config.provider, model_id=config.model_id, role="target",
        decoding=config.decoding,
    )
    provenance["target_detection"] = tgt_objects.raw_text

    score = match_replacements(
        rep_map,
        tgt_objects,
        matcher=config.matcher,
        provider=config.match_provider or config.provider,
        model_id=config.model_id,
        decoding=config.decoding,
    )
    return replace(score, provenance={**provenance, **score.provenance})
