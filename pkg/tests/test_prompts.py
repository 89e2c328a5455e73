import pytest

from transcreval.errors import MissingField
from transcreval.prompts import IMAGE_MARKER, load_template, render, split_on_images

ALL_TEMPLATES = (
    "detect_objects",
    "propose_replacements",
    "match_lists",
    "judge_cultural_relevance",
    "judge_semantic_equivalence",
    "judge_visual_similarity",
    "embed_cultural_country",
    "embed_cultural_region",
    "embed_semantic_category",
)


@pytest.mark.parametrize("name", ALL_TEMPLATES)
def test_every_template_loads_nonempty(name):
    text = load_template(name)
    assert text
    assert not text.endswith("\n")


def test_render_substitutes_named_placeholders():
    out = render("adapt for {country} in the {category} category", country="japan", category="food")
    assert out == "adapt for japan in the food category"


def test_render_leaves_literal_json_braces_alone():
    template = 'format: {"reasoning": ..., "score": number} for {country}'
    out = render(template, country="india")
    assert '{"reasoning": ..., "score": number}' in out
    assert "india" in out


def test_render_missing_value_raises():
    with pytest.raises(MissingField):
        render("for {country}", country=None)
    with pytest.raises(MissingField):
        render("for {country}")


def test_propose_template_renders_fully():
    text = render(
        load_template("propose_replacements"),
        objects="broccoli, spoon, dollar bill",
        country="japan",
        category="food",
    )
    assert "broccoli, spoon, dollar bill" in text
    assert "{objects}" not in text and "{country}" not in text and "{category}" not in text


def test_judge_templates_split_into_instruction_and_format():
    for name in ("judge_cultural_relevance", "judge_semantic_equivalence", "judge_visual_similarity"):
        template = load_template(name)
        assert IMAGE_MARKER in template
        instruction, format_text = split_on_images(template)
        assert IMAGE_MARKER not in instruction and IMAGE_MARKER not in format_text
        assert "JSON" in format_text


def test_split_requires_marker():
    with pytest.raises(ValueError):
        split_on_images("no marker here")


def test_embedding_templates_take_x():
    assert render(load_template("embed_cultural_country"), x="portugal").endswith("portugal")
    assert "portugal" in render(load_template("embed_cultural_region"), x="portugal")
    assert render(load_template("embed_semantic_category"), x="food").endswith("food")
