"""Shared fixture builders: tiny PNGs, manifest lines, synthetic datasets."""

from __future__ import annotations

import io
import json
from pathlib import Path

from PIL import Image

from transcreval.manifest import DIMENSIONS


def png_bytes(color=(120, 40, 40), size=(5, 5)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format="PNG")
    return buf.getvalue()


def seg_line(segment_id, source_image, country="japan", category="food", **extra):
    line = {
        "kind": "segment",
        "segment_id": segment_id,
        "source_image": source_image,
        "target_country": country,
        "category": category,
    }
    line.update(extra)
    return line


def out_line(segment_id, system_id, target_image):
    return {
        "kind": "output",
        "segment_id": segment_id,
        "system_id": system_id,
        "target_image": target_image,
    }


def rating_line(segment_id, system_id, dimension, value):
    return {
        "kind": "rating",
        "segment_id": segment_id,
        "system_id": system_id,
        "dimension": dimension,
        "rating": value,
    }


def write_jsonl(path, lines) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(json.dumps(line, sort_keys=True, ensure_ascii=False) + "\n")
    return path


def build_manifest(
    root,
    n_segments=3,
    systems=("sysA", "sysB"),
    countries=("japan",),
    categories=("food",),
    rating_fn=None,
    dims=DIMENSIONS,
) -> Path:
    """Write images plus manifest.jsonl under root; return the manifest path.

    rating_fn(i, j, dim) -> int in 1..5, default varies by indices so human
    vectors are rarely constant. Everything is arithmetic on indices, nothing
    hashed, so fixtures are stable across interpreter runs.
    """
    root = Path(root)
    images = root / "images"
    images.mkdir(parents=True, exist_ok=True)
    lines = []
    for i in range(n_segments):
        sid = f"seg{i:03d}"
        src_name = f"{sid}_src.png"
        (images / src_name).write_bytes(png_bytes(((i * 23) % 256, 30, 60)))
        lines.append(
            seg_line(
                sid,
                f"images/{src_name}",
                country=countries[i % len(countries)],
                category=categories[i % len(categories)],
            )
        )
        for j, system in enumerate(systems):
            tgt_name = f"{sid}_{system}.png"
            (images / tgt_name).write_bytes(png_bytes(((i * 23) % 256, 90 + 40 * j, 60)))
            lines.append(out_line(sid, system, f"images/{tgt_name}"))
            for k, dim in enumerate(dims):
                r = rating_fn(i, j, dim) if rating_fn else (i + 2 * j + k) % 5 + 1
                lines.append(rating_line(sid, system, dim, r))
    return write_jsonl(root / "manifest.jsonl", lines)
