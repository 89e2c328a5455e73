"""Chat-VLM judging: render a two-image prompt per dimension, elicit reasoning
plus a 1-5 score as JSON, and parse it without ever throwing.

The visual prompt scores visual CHANGE (1 = none, 5 = high), opposite in
direction to embedding visual similarity; the orientation flag on emitted
records carries that distinction to meta-evaluation.

The cultural prompt scores both images; `score` is the second (target) image,
matching the human question about the generated image, and the source-image
score is kept as secondary_score so the difference stays recoverable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace

from .errors import ParseError, ProviderError
from .jsonextract import extract_json_object
from .manifest import Segment
from .prompts import load_template, render, split_on_images
from .providers.base import ChatProvider, ChatRequest, Decoding, ImagePart, TextPart

SINGLE_SCORE = "single_score"
DUAL_SCORE = "dual_score"

RETRY_NUDGE = "Output only the JSON object."


@dataclass(frozen=True)
class JudgePromptSpec:
    dimension: str
    template: str  # includes the <<<images>>> marker
    image_order: tuple[str, str] = ("source", "target")
    output_schema: str = SINGLE_SCORE


def judge_specs() -> dict[str, JudgePromptSpec]:
    return {
        "cultural_relevance": JudgePromptSpec(
            dimension="cultural_relevance",
            template=load_template("judge_cultural_relevance"),
            output_schema=DUAL_SCORE,
        ),
        "semantic_equivalence": JudgePromptSpec(
            dimension="semantic_equivalence",
            template=load_template("judge_semantic_equivalence"),
        ),
        "visual_similarity": JudgePromptSpec(
            dimension="visual_similarity",
            template=load_template("judge_visual_similarity"),
        ),
    }


@dataclass(frozen=True)
class VlmJudgeScore:
    dimension: str | None
    score: int | None  # None iff parse_status == "failed"
    secondary_score: int | None
    reasoning: str
    raw_text: str
    parse_status: str  # ok | repaired | failed
    note: str | None = None


def render_prompt(
    spec: JudgePromptSpec,
    segment: Segment,
    source_image: bytes,
    target_image: bytes,
    *,
    model_id: str = "default",
    decoding: Decoding = Decoding(),
) -> ChatRequest:
    """Instruction text, then the two images in spec order, then the
    output-format text. Raises MissingField when the segment lacks the
    placeholder's value."""
    instruction, format_text = split_on_images(spec.template)
    values = {"country": segment.target_country, "category": segment.category}
    images = {"source": ImagePart(source_image), "target": ImagePart(target_image)}
    parts = (
        TextPart(render(instruction, **values)),
        images[spec.image_order[0]],
        images[spec.image_order[1]],
        TextPart(render(format_text, **values)),
    )
    return ChatRequest(model_id=model_id, parts=parts, decoding=decoding)


def _coerce_score(value) -> int | None:
    """1..5 integers, floats with zero fraction, and numeric strings pass;
    anything else (booleans included) does not."""
    if isinstance(value, bool):
        return None
    if isinstance(value, str):
        try:
            value = float(value.strip())
        except ValueError:
            return None
    if isinstance(value, float):
        if not value.is_integer():
            return None
        value = int(value)
    if isinstance(value, int) and 1 <= value <= 5:
        return value
    return None


def _failed(dimension: str | None, raw_text: str, note: str) -> VlmJudgeScore:
    return VlmJudgeScore(
        dimension=dimension,
        score=None,
        secondary_score=None,
        reasoning="",
        raw_text=raw_text,
        parse_status="failed",
        note=note,
    )


def parse_judge_output(
    text: str, schema: str = SINGLE_SCORE, *, dimension: str | None = None
) -> VlmJudgeScore:
    """Total: every input yields a VlmJudgeScore, never an exception."""
    try:
        obj, repaired = extract_json_object(text)
    except ParseError:
        return _failed(dimension, text, "no JSON object found")
    status = "repaired" if repaired else "ok"

    if schema == DUAL_SCORE:
        score = _coerce_score(obj.get("second_score"))
        if score is None:
            return _failed(dimension, text, "second_score missing or out of range")
        return VlmJudgeScore(
            dimension=dimension,
            score=score,
            secondary_score=_coerce_score(obj.get("first_score")),
            reasoning=str(obj.get("second_reasoning", "")),
            raw_text=text,
            parse_status=status,
        )

    score = _coerce_score(obj.get("score"))
    if score is None:
        return _failed(dimension, text, "score missing or out of range")
    return VlmJudgeScore(
        dimension=dimension,
        score=score,
        secondary_score=None,
        reasoning=str(obj.get("reasoning", "")),
        raw_text=text,
        parse_status=status,
    )


def judge(
    segment: Segment,
    output,
    dimension: str,
    provider: ChatProvider,
    *,
    read_image,
    model_id: str = "default",
    decoding: Decoding = Decoding(),
    specs: dict[str, JudgePromptSpec] | None = None,
) -> VlmJudgeScore:
    """Render, send, parse; one retry with a terse reminder on parse failure.
    Provider errors become parse_status failed with a provider_error note so
    the harness can both skip the segment and tally the hard failure."""
    spec = (specs or judge_specs())[dimension]
    src = read_image(segment.source_image)
    tgt = read_image(output.target_image)
    req = render_prompt(spec, segment, src, tgt, model_id=model_id, decoding=decoding)

    try:
        resp = provider.chat(req)
    except ProviderError as exc:
        return _failed(dimension, "", f"provider_error: {exc}")

    score = parse_judge_output(resp.text, spec.output_schema, dimension=dimension)
    if score.parse_status != "failed":
        return score

    retry_req = ChatRequest(
        model_id=req.model_id,
        parts=req.parts + (TextPart(RETRY_NUDGE),),
        decoding=req.decoding,
    )
    try:
        retry_resp = provider.chat(retry_req)
    except ProviderError as exc:
        return _failed(dimension, resp.text, f"provider_error: {exc}")

    retry_score = parse_judge_output(retry_resp.text, spec.output_schema, dimension=dimension)
    if retry_score.parse_status == "failed":
        return dc_replace(retry_score, note="failed after one retry")
    return dc_replace(retry_score, note="parsed on retry")
