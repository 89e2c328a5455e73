"""Evaluate a whole manifest: resumable batch scoring with caching.

This script builds a small synthetic dataset on disk (8 segments, 3 systems,
PNG fixtures, one JSONL manifest), then drives the same entry point the CLI
uses. Run it twice and the second pass does no work: every record is already
in scores.jsonl and every provider response is in the cache.

The interesting properties to watch for:

  * record identity is (segment, system, metric), so reruns and partial runs
    reconcile instead of duplicating,
  * provider traffic is observable (provider_calls in the summary),
  * raw model output lands in out/provenance/, keyed by content digest, so
    any score can be audited later.

Run: python3 demos/02_batch_evaluate.py [workspace-dir]
"""

import io
import json
import sys
from pathlib import Path

from PIL import Image

from transcreval import DIMENSIONS, RunConfig, cmd_evaluate, read_scores

COUNTRIES = ("japan", "brazil", "nigeria", "portugal")
CATEGORIES = ("food", "festivals")
SYSTEMS = ("instruct-pix2pix", "cap-edit", "e2e-pipeline")

PROVIDERS = {
    "chat": {"type": "synthetic-chat", "seed": 11},
    "embed": {"type": "mock-embed", "seed": 11, "dim": 64},
    "judge": {"type": "synthetic-chat", "seed": 12, "malformed_every": 15},
}


def png(color):
    buf = io.BytesIO()
    Image.new("RGB", (12, 12), color).save(buf, format="PNG")
    return buf.getvalue()


def build_dataset(root: Path) -> Path:
    """8 segments x 3 systems, plus 1-5 ratings for every output/dimension."""
    images = root / "images"
    images.mkdir(parents=True, exist_ok=True)
    lines = []
    for i in range(8):
        sid = f"seg{i:03d}"
        (images / f"{sid}_src.png").write_bytes(png((25 * i, 40, 80)))
        lines.append(
            {
                "kind": "segment",
                "segment_id": sid,
                "source_image": f"images/{sid}_src.png",
                "target_country": COUNTRIES[i % len(COUNTRIES)],
                "category": CATEGORIES[i % len(CATEGORIES)],
            }
        )
        for j, system in enumerate(SYSTEMS):
            (images / f"{sid}_{system}.png").write_bytes(png((20 * i, 90, 60 * j + 30)))
            lines.append(
                {
                    "kind": "output",
                    "segment_id": sid,
                    "system_id": system,
                    "target_image": f"images/{sid}_{system}.png",
                }
            )
            for dim in DIMENSIONS:
                lines.append(
                    {
                        "kind": "rating",
                        "segment_id": sid,
                        "system_id": system,
                        "dimension": dim,
                        "rating": 1 + (i + 2 * j + len(dim)) % 5,
                    }
                )
    manifest = root / "manifest.jsonl"
    with open(manifest, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(json.dumps(line, sort_keys=True) + "\n")
    return manifest


def main():
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_workspace")
    manifest = build_dataset(root)
    print(f"dataset: {manifest} ({len(SYSTEMS)} systems, 8 segments)\n")

    config = RunConfig(
        manifest=manifest,
        out_dir=root / "out",
        metrics=("object", "embed", "vlm:judge"),
        providers=PROVIDERS,
        cache_dir=root / "cache",
        parallelism=4,
        seed=11,
    )
    print("first pass (or resume, if you ran this before):")
    exit_code, summary = cmd_evaluate(config)
    print(summary.format())
    print(f"exit code: {exit_code}\n")

    records = read_scores(root / "out" / "scores.jsonl")
    print(f"{len(records)} records in scores.jsonl; three of them:")
    for record in records[:3]:
        print(
            f"  {record.segment_id} {record.system_id:<16} {record.metric_id:<20}"
            f" value={record.value!r:<22} parse={record.parse_status}"
        )

    retried = [r for r in records if r.note == "parsed on retry"]
    failed = [r for r in records if r.parse_status == "failed"]
    print(f"\njudge replies rescued by the one-shot retry: {len(retried)}")
    print(f"records that stayed non-parsable: {len(failed)}")
    print("(the judge provider mangles every 15th reply on purpose; a terse retry")
    print(" nudge usually recovers it, and whatever stays failed is skipped and")
    print(" counted during correlation rather than silently dropped)")

    print("\nsecond pass over the same workspace:")
    exit_code, summary = cmd_evaluate(config)
    print(summary.format())
    print("all records resumed, zero provider calls: nothing left to compute")
    print(f"\nnext: python3 demos/03_correlate_with_humans.py {root}")


if __name__ == "__main__":
    main()
