"""Score one transcreated image, step by step, with no network access.

A "segment" is one evaluation unit: a source image plus the country and
category it was adapted for. A system hands back its transcreated image, and
we want three numbers for it:

  * object-based: what fraction of the culture-specific items in the source
    got replaced with target-culture substitutes,
  * embedding-based: cosine scores for cultural shift, intent preservation,
    and visual closeness,
  * judge-based: a 1-5 rating extracted from a vision-language model's JSON.

Everything below runs against scripted providers, so the chat transcript is
fixed and you can follow each intermediate product. Swap in real providers
and the calls are identical.

Run: python3 demos/01_score_a_segment.py
"""

import io
import json

from PIL import Image

from transcreval import (
    CsiConfig,
    Segment,
    SystemOutput,
    csi_overlap,
    cultural_relevance_shift,
    judge,
    semantic_equivalence,
    visual_similarity,
)
from transcreval.providers import (
    ImagePart,
    MockChatProvider,
    MockEmbeddingProvider,
    rule_responder,
    synthetic_chat_responder,
)


def png(color):
    buf = io.BytesIO()
    Image.new("RGB", (16, 16), color).save(buf, format="PNG")
    return buf.getvalue()


SRC = png((10, 20, 30))  # imagine: broccoli, a spoon, a dollar bill
TGT = png((200, 100, 50))  # the adaptation for a Japanese audience

SEGMENT = Segment("demo-001", "src.png", target_country="japan", category="food")
OUTPUT = SystemOutput("demo-001", "pix2pix-variant", "tgt.png")

read_image = lambda ref: {"src.png": SRC, "tgt.png": TGT}[ref]


def scripted_chat():
    """A chat provider that answers the three object-pipeline prompts the way
    a real VLM answered them for this exact segment."""
    proposal = {
        "reasoning": "broccoli, the bill and the spoon read as US-specific",
        "broccoli": ["bell pepper", "radish"],
        "dollar bill": ["yen note"],
        "spoon": ["chopsticks"],
    }

    def has_image(req, image):
        return any(isinstance(p, ImagePart) and p.data == image for p in req.parts)

    return MockChatProvider(
        rule_responder(
            [
                # the proposal prompt carries no image, match it on its wording
                (lambda r: "adapting visuals" in r.text_content(), json.dumps(proposal)),
                (lambda r: has_image(r, SRC), "broccoli, spoon, dollar bill"),
                (lambda r: has_image(r, TGT), "bell pepper, spoon, euro bill"),
            ]
        )
    )


def main():
    print("=== 1. object-based: replaced culture-specific items ===\n")
    score = csi_overlap(SEGMENT, OUTPUT, CsiConfig(provider=scripted_chat(), read_image=read_image))
    print(f"source objects : {score.provenance['source_detection']}")
    print(f"proposal       : {score.provenance['replacements']}")
    print(f"matches found  : {score.matches}")
    print(f"n_replaced / n_csis = {score.n_replaced}/{score.n_csis}  ->  {score.value:.4f}")
    print("(the spoon stayed a spoon and the euro bill is nobody's yen note,")
    print(" so only the bell pepper counts as a completed replacement)\n")

    print("=== 2. embedding-based: three cosines ===\n")
    embedder = MockEmbeddingProvider(seed=42, dim=64)
    cr = cultural_relevance_shift(SRC, TGT, SEGMENT.target_country, embedder)
    se = semantic_equivalence(TGT, SEGMENT.category, embedder)
    vs = visual_similarity(SRC, TGT, embedder)
    print(f"cultural shift      {cr.value:+.4f}   from {cr.components}")
    print(f"intent preservation {se.value:+.4f}   prompt was {se.templates_used[0]!r}")
    print(f"visual closeness    {vs.value:+.4f}")
    print("(mock vectors are random directions, so near-zero cosines are expected;")
    print(" a real dual encoder puts related image/text pairs much closer)\n")

    print("=== 3. judge-based: a 1-5 score parsed out of model JSON ===\n")
    judge_provider = MockChatProvider(synthetic_chat_responder(seed=5))
    verdict = judge(
        SEGMENT, OUTPUT, "cultural_relevance", judge_provider, read_image=read_image
    )
    print(f"dimension    : {verdict.dimension}")
    print(f"score        : {verdict.score} (source image scored {verdict.secondary_score})")
    print(f"parse_status : {verdict.parse_status}")
    print(f"raw reply    : {verdict.raw_text}")


if __name__ == "__main__":
    main()
