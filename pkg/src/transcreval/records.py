"""Score-record schema, JSONL round-tripping, and the provenance blob store.

The scores file is append-only while a run is live (crash-safe resume) and
compacted to a canonical sort order when the run completes, so two complete
runs over the same inputs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaError

PARSE_OK = "ok"
PARSE_REPAIRED = "repaired"
PARSE_FAILED = "failed"

DIM_TO_CODE = {
    "cultural_relevance": "cult_rel",
    "semantic_equivalence": "sem_eq",
    "visual_similarity": "vis_sim",
}
CODE_TO_DIM = {v: k for k, v in DIM_TO_CODE.items()}

_FIELDS = (
    "segment_id",
    "system_id",
    "metric_id",
    "dimension",
    "value",
    "parse_status",
    "orientation",
    "provenance_ref",
    "note",
)


@dataclass(frozen=True)
class ScoreRecord:
    segment_id: str
    system_id: str
    metric_id: str
    dimension: str | None
    value: float | None
    parse_status: str
    orientation: str | None = None
    provenance_ref: str | None = None
    note: str | None = None

    def key(self) -> tuple[str, str, str]:
        return (self.metric_id, self.segment_id, self.system_id)


def record_to_json(rec: ScoreRecord) -> str:
    payload = {name: getattr(rec, name) for name in _FIELDS}
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def record_from_json(line: str, line_no: int | None = None) -> ScoreRecord:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", line=line_no)
    if not isinstance(payload, dict):
        raise SchemaError("score record is not a JSON object", line=line_no)
    for name in ("segment_id", "system_id", "metric_id", "parse_status"):
        if not payload.get(name):
            raise SchemaError("missing required field", line=line_no, field=name)
    value = payload.get("value")
    if value is not None and not isinstance(value, (int, float)):
        raise SchemaError("value must be a number or null", line=line_no, field="value")
    return ScoreRecord(
        segment_id=payload["segment_id"],
        system_id=payload["system_id"],
        metric_id=payload["metric_id"],
        dimension=payload.get("dimension"),
        value=float(value) if value is not None else None,
        parse_status=payload["parse_status"],
        orientation=payload.get("orientation"),
        provenance_ref=payload.get("provenance_ref"),
        note=payload.get("note"),
    )


def read_scores(path: str | Path, tolerate_partial_tail: bool = False) -> list[ScoreRecord]:
    """Read a scores JSONL file. With tolerate_partial_tail, a torn final
    line (killed writer) is dropped instead of raising; corruption anywhere
    else always raises."""
    path = Path(path)
    records: list[ScoreRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    for idx, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            records.append(record_from_json(stripped, line_no=idx))
        except SchemaError:
            if tolerate_partial_tail and idx == len(lines):
                break
            raise
    return records


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_scores(path: str | Path, records) -> None:
    """Compacted form: canonical sort, one record per (metric, segment,
    system), last write wins for duplicates from resumed runs."""
    unique: dict[tuple[str, str, str], ScoreRecord] = {}
    for rec in records:
        unique[rec.key()] = rec
    ordered = [unique[k] for k in sorted(unique)]
    _atomic_write(Path(path), "".join(record_to_json(r) + "\n" for r in ordered))


class ProvenanceStore:
    """Content-addressed raw-model-output blobs: provenance/<2-hex>/<sha>.json.
    Identical payloads land on the same path, so reruns never diverge."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, ref: str) -> Path:
        return self.root / ref[:2] / f"{ref}.json"

    def put(self, payload: dict) -> str:
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
        ref = hashlib.sha256(blob).hexdigest()
        path = self.path_for(ref)
        if not path.exists():
            _atomic_write(path, blob.decode("utf-8"))
        return ref

    def get(self, ref: str) -> dict:
        with open(self.path_for(ref), "r", encoding="utf-8") as fh:
            return json.load(fh)
