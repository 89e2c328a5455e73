"""Versioned prompt-template assets and substitution helpers.

Templates live as .txt files next to this module and use named placeholders
({country}, {category}, {objects}, {list1}, {list2}, {x}). Literal braces in
the templates (JSON format examples) are left untouched: substitution only
rewrites the known placeholder names. Two-image templates mark the point
where the source and target images are interleaved with a <<<images>>> line.
"""

from __future__ import annotations

import re
from importlib import resources

from ..errors import MissingField

IMAGE_MARKER = "<<<images>>>"

_PLACEHOLDER_RE = re.compile(r"\{(objects|country|category|list1|list2|x)\}")


def load_template(name: str) -> str:
    """Read a template asset by bare name (no extension)."""
    text = resources.files(__package__).joinpath(f"{name}.txt").read_text(encoding="utf-8")
    # editors append trailing newlines to text files; they are not part of the prompt
    return text.rstrip("\n")


def render(template: str, **values: str) -> str:
    """Substitute named placeholders; every placeholder present must get a value."""

    def substitute(match: re.Match) -> str:
        key = match.group(1)
        value = values.get(key)
        if value in (None, ""):
            raise MissingField(f"template placeholder {{{key}}} has no value")
        return str(value)

    return _PLACEHOLDER_RE.sub(substitute, template)


def split_on_images(template: str) -> tuple[str, str]:
    """Split a two-image template into (instruction text, output-format text)."""
    before, marker, after = template.partition(IMAGE_MARKER)
    if not marker:
        raise ValueError("template has no image marker line")
    return before.rstrip("\n"), after.lstrip("\n")
