"""Evaluation data model: segments, system outputs, human ratings.

Manifests are UTF-8 JSONL, one record per line, each tagged with a ``kind``
field in {segment, output, rating}. Image references are file paths (resolved
against the manifest's directory when relative), never inline bytes.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, SchemaError

DIMENSIONS = ("cultural_relevance", "semantic_equivalence", "visual_similarity")

KINDS = ("segment", "output", "rating")


@dataclass(frozen=True)
class Segment:
    """One evaluation unit: a source image to transcreate for a target country."""

    segment_id: str
    source_image: str
    target_country: str
    category: str
    source_country: str | None = None


@dataclass(frozen=True)
class SystemOutput:
    """One system's transcreated image for a segment."""

    segment_id: str
    system_id: str
    target_image: str


@dataclass(frozen=True)
class HumanRating:
    """A 1-5 human rating of one system output along one dimension."""

    segment_id: str
    system_id: str
    dimension: str
    rating: int


@dataclass
class Manifest:
    segments: list[Segment] = field(default_factory=list)
    outputs: list[SystemOutput] = field(default_factory=list)
    ratings: list[HumanRating] = field(default_factory=list)
    base_dir: Path | None = None

    def systems(self) -> list[str]:
        return sorted({o.system_id for o in self.outputs})

    def segment_by_id(self) -> dict[str, Segment]:
        return {s.segment_id: s for s in self.segments}

    def outputs_by_segment(self) -> dict[str, list[SystemOutput]]:
        grouped: dict[str, list[SystemOutput]] = {}
        for out in self.outputs:
            grouped.setdefault(out.segment_id, []).append(out)
        return grouped

    def ratings_lookup(self) -> dict[tuple[str, str, str], int]:
        """(segment_id, system_id, dimension) -> rating."""
        return {(r.segment_id, r.system_id, r.dimension): r.rating for r in self.ratings}

    def resolve_image(self, ref: str) -> Path:
        path = Path(ref)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / path
        return path

    def read_image_bytes(self, ref: str) -> bytes:
        path = self.resolve_image(ref)
        if "://" in ref:
            raise DecodeError(f"remote image references are not supported: {ref!r}")
        return path.read_bytes()


def _require(record: dict, key: str, line: int) -> object:
    if key not in record or record[key] in (None, ""):
        raise SchemaError("missing required field", line=line, field=key)
    return record[key]


def _require_str(record: dict, key: str, line: int) -> str:
    value = _require(record, key, line)
    if not isinstance(value, str):
        raise SchemaError(f"expected string, got {type(value).__name__}", line=line, field=key)
    return value


def _check_image(path: Path, line: int, fieldname: str) -> None:
    try:
        with Image.open(path) as img:
            img.verify()
    except FileNotFoundError:
        raise SchemaError(f"image file not found: {path}", line=line, field=fieldname)
    except (UnidentifiedImageError, OSError) as exc:
        raise SchemaError(f"not a decodable image: {path} ({exc})", line=line, field=fieldname)


def load_manifest(path: str | Path, validate_images: bool = False) -> Manifest:
    """Parse and validate a JSONL manifest.

    Unknown extra fields on records are ignored. Schema violations raise
    SchemaError naming the offending line and field. Ratings are optional;
    referential integrity among the three record kinds is always enforced.
    """
    path = Path(path)
    manifest = Manifest(base_dir=path.parent)
    seen_segments: dict[str, int] = {}
    seen_outputs: set[tuple[str, str]] = set()
    seen_ratings: set[tuple[str, str, str]] = set()

    with io.open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc}", line=line_no)
            if not isinstance(record, dict):
                raise SchemaError("record is not a JSON object", line=line_no)
            kind = record.get("kind")
            if kind not in KINDS:
                raise SchemaError(f"unknown kind {kind!r}", line=line_no, field="kind")

            if kind == "segment":
                seg = Segment(
                    segment_id=_require_str(record, "segment_id", line_no),
                    source_image=_require_str(record, "source_image", line_no),
                    target_country=_require_str(record, "target_country", line_no),
                    category=_require_str(record, "category", line_no),
                    source_country=record.get("source_country") or None,
                )
                if seg.segment_id in seen_segments:
                    raise SchemaError(
                        f"duplicate segment_id {seg.segment_id!r} "
                        f"(first seen on line {seen_segments[seg.segment_id]})",
                        line=line_no,
                        field="segment_id",
                    )
                seen_segments[seg.segment_id] = line_no
                if validate_images:
                    _check_image(manifest.resolve_image(seg.source_image), line_no, "source_image")
                manifest.segments.append(seg)

            elif kind == "output":
                out = SystemOutput(
                    segment_id=_require_str(record, "segment_id", line_no),
                    system_id=_require_str(record, "system_id", line_no),
                    target_image=_require_str(record, "target_image", line_no),
                )
                key = (out.segment_id, out.system_id)
                if key in seen_outputs:
                    raise SchemaError(
                        f"duplicate output for {key}", line=line_no, field="system_id"
                    )
                if out.segment_id not in seen_segments:
                    raise SchemaError(
                        f"output references unknown segment {out.segment_id!r}",
                        line=line_no,
                        field="segment_id",
                    )
                seen_outputs.add(key)
                if validate_images:
                    _check_image(manifest.resolve_image(out.target_image), line_no, "target_image")
                manifest.outputs.append(out)

            else:  # rating
                dimension = _require_str(record, "dimension", line_no)
                if dimension not in DIMENSIONS:
                    raise SchemaError(
                        f"dimension must be one of {DIMENSIONS}, got {dimension!r}",
                        line=line_no,
                        field="dimension",
                    )
                rating_value = _require(record, "rating", line_no)
                if isinstance(rating_value, bool) or not isinstance(rating_value, int):
                    raise SchemaError("rating must be an integer", line=line_no, field="rating")
                if not 1 <= rating_value <= 5:
                    raise SchemaError(
                        f"rating must be in [1, 5], got {rating_value}",
                        line=line_no,
                        field="rating",
                    )
                rating = HumanRating(
                    segment_id=_require_str(record, "segment_id", line_no),
                    system_id=_require_str(record, "system_id", line_no),
                    dimension=dimension,
                    rating=rating_value,
                )
                if rating.segment_id not in seen_segments:
                    raise SchemaError(
                        f"rating references unknown segment {rating.segment_id!r}",
                        line=line_no,
                        field="segment_id",
                    )
                if (rating.segment_id, rating.system_id) not in seen_outputs:
                    raise SchemaError(
                        f"rating references unknown output "
                        f"({rating.segment_id!r}, {rating.system_id!r})",
                        line=line_no,
                        field="system_id",
                    )
                key3 = (rating.segment_id, rating.system_id, rating.dimension)
                if key3 in seen_ratings:
                    raise SchemaError(f"duplicate rating for {key3}", line=line_no, field="rating")
                seen_ratings.add(key3)
                manifest.ratings.append(rating)

    return manifest


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write the manifest back out as JSONL (segments, outputs, ratings)."""
    path = Path(path)
    with io.open(path, "w", encoding="utf-8") as fh:
        for seg in manifest.segments:
            record = {
                "kind": "segment",
                "segment_id": seg.segment_id,
                "source_image": seg.source_image,
                "target_country": seg.target_country,
                "category": seg.category,
            }
            if seg.source_country:
                record["source_country"] = seg.source_country
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
        for out in manifest.outputs:
            fh.write(
                json.dumps(
                    {
                        "kind": "output",
                        "segment_id": out.segment_id,
                        "system_id": out.system_id,
                        "target_image": out.target_image,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )
        for rating in manifest.ratings:
            fh.write(
                json.dumps(
                    {
                        "kind": "rating",
                        "segment_id": rating.segment_id,
                        "system_id": rating.system_id,
                        "dimension": rating.dimension,
                        "rating": rating.rating,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


@dataclass
class ManifestStats:
    total_segments: int
    by_country: dict[str, int]
    by_category: dict[str, int]
    n_outputs: int
    n_ratings: int
    n_systems: int


def manifest_stats(manifest: Manifest) -> ManifestStats:
    """Per-country and per-category segment counts; counts sum to the total."""
    by_country: dict[str, int] = {}
    by_category: dict[str, int] = {}
    for seg in manifest.segments:
        by_country[seg.target_country] = by_country.get(seg.target_country, 0) + 1
        by_category[seg.category] = by_category.get(seg.category, 0) + 1
    return ManifestStats(
        total_segments=len(manifest.segments),
        by_country=dict(sorted(by_country.items())),
        by_category=dict(sorted(by_category.items())),
        n_outputs=len(manifest.outputs),
        n_ratings=len(manifest.ratings),
        n_systems=len(manifest.systems()),
    )
