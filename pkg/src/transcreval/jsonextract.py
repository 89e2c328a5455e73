"""Extract a JSON object from raw model text.

Judge and replacement prompts demand "ONLY output the JSON", but real models
wrap answers in markdown fences or append prose. The extraction order is:
parse the whole string, else the first fenced block, else the first balanced
top-level object that parses.
"""

from __future__ import annotations

import json
import re

from .errors import ParseError

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_+-]*[ \t]*\n?(.*?)```", re.DOTALL)


def _balanced_objects(text: str):
    """Yield every top-level {...} span, respecting strings and escapes."""
    depth = 0
    start = -1
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            if depth > 0:
                in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0:
                    yield text[start : i + 1]


def extract_json_object(text: str) -> tuple[dict, bool]:
    """Return (object, repaired).

    repaired is False only when the whole input (modulo surrounding
    whitespace) is the JSON object itself. Raises ParseError when no
    parseable object can be found.
    """
    stripped = text.strip()
    try:
        obj = json.loads(stripped)
        if isinstance(obj, dict):
            return obj, False
    except json.JSONDecodeError:
        pass

    candidates = [m.group(1) for m in _FENCE_RE.finditer(text)]
    candidates.append(text)
    for source in candidates:
        for span in _balanced_objects(source):
            try:
                obj = json.loads(span)
            except json.JSONDecodeError:
                continue
            if isinstance(obj, dict):
                return obj, True
    raise ParseError(f"no JSON object found in model output ({len(text)} chars)")
