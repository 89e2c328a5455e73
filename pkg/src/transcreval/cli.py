"""Command-line surface: evaluate, correlate, report, cache-gc.

Exit codes: 0 success (non-parsable model output is success with warnings),
1 provider hard failures during evaluate, 2 configuration/data errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .correlate import CorrelationReport, aggregate, build_tuples
from .errors import ConfigError, TranscrevalError
from .manifest import load_manifest
from .providers.cache import cache_gc
from .records import read_scores
from .report import export_plots, render_table, report_from_jsonl, report_to_jsonl
from .runner import cmd_evaluate, load_run_config

GROUP_KEYS = {"country": "target_country", "category": "category"}


def cmd_correlate(
    scores_path,
    manifest_path,
    out_dir: Path,
    *,
    group_by: str = "country",
    metric_ids=None,
) -> CorrelationReport:
    """Correlate a scores file with the manifest's human ratings and write
    report JSONL plus a rendered table under out_dir. Returns the report."""
    if group_by not in GROUP_KEYS:
        raise ConfigError(f"unknown group-by {group_by!r} (choices: {sorted(GROUP_KEYS)})")
    records = read_scores(scores_path)
    manifest = load_manifest(manifest_path)
    systems = {rec.system_id for rec in records}
    if len(systems) < 2 or len(manifest.systems()) < 2:
        raise ConfigError("correlation needs scores and ratings for at least 2 systems")
    orientations: dict[str, str | None] = {}
    for rec in records:
        orientations.setdefault(rec.metric_id, rec.orientation)
    tuples = build_tuples(records, manifest, metric_ids=metric_ids)
    report = aggregate(tuples, orientations, group_by=(GROUP_KEYS[group_by],))

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_to_jsonl(report, out_dir / f"report_by_{group_by}.jsonl")
    (out_dir / f"table_by_{group_by}.txt").write_text(render_table(report), encoding="utf-8")
    return report


def cmd_export_plots(report_path, out_dir) -> list[Path]:
    """Export plot-ready CSV matrices for the report at report_path."""
    return export_plots(report_from_jsonl(report_path), out_dir)


def _add_evaluate(sub) -> None:
    p = sub.add_parser("evaluate", help="run selected metrics over a manifest")
    p.add_argument("--config", type=Path, help="run-config JSON; flags override its keys")
    p.add_argument("--manifest", type=Path)
    p.add_argument("--metrics", help="comma list: object, embed[.dim], vlm:<provider>[.dim]")
    p.add_argument("--providers", type=Path, help="provider bindings JSON file")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--cache-dir", type=Path)
    p.add_argument("--out", type=Path, help="output directory for scores and provenance")
    p.add_argument("--seed", type=int, help="default seed for deterministic mock providers")
    p.add_argument("--matcher", choices=["lexical", "llm"])
    p.add_argument("--template-variant", choices=["country", "region"])
    p.add_argument("--validate-images", action="store_true", default=None)


def _add_correlate(sub) -> None:
    p = sub.add_parser("correlate", help="correlate scores with human ratings")
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--group-by", default="country", choices=sorted(GROUP_KEYS))
    p.add_argument("--metrics", help="comma list of metric ids to include (default: all)")


def _add_report(sub) -> None:
    p = sub.add_parser("report", help="render a correlation report as table and plot data")
    p.add_argument("--report", type=Path, required=True, help="report JSONL from correlate")
    p.add_argument("--out", type=Path, help="directory for table.txt and plot CSVs")


def _add_cache_gc(sub) -> None:
    p = sub.add_parser("cache-gc", help="drop cache entries older than a cutoff")
    p.add_argument("--cache-dir", type=Path, required=True)
    p.add_argument("--max-age-hours", type=float, required=True)


def _do_evaluate(args) -> int:
    overrides = {
        "manifest": args.manifest,
        "metrics": args.metrics,
        "parallelism": args.parallelism,
        "cache_dir": args.cache_dir,
        "out_dir": args.out,
        "seed": args.seed,
        "matcher": args.matcher,
        "template_variant": args.template_variant,
        "validate_images": args.validate_images,
    }
    if args.providers is not None:
        with open(args.providers, "r", encoding="utf-8") as fh:
            overrides["providers"] = json.load(fh)
    cfg = load_run_config(args.config, overrides)
    if not cfg.providers:
        raise ConfigError("no providers configured (use --providers or the config file)")
    code, summary = cmd_evaluate(cfg)
    print(summary.format())
    return code


def _do_correlate(args) -> int:
    metric_ids = None
    if args.metrics:
        metric_ids = {m.strip() for m in args.metrics.split(",") if m.strip()}
    report = cmd_correlate(
        args.scores, args.manifest, args.out, group_by=args.group_by, metric_ids=metric_ids
    )
    print(render_table(report), end="")
    return 0


def _do_report(args) -> int:
    report = report_from_jsonl(args.report)
    table = render_table(report)
    print(table, end="")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "table.txt").write_text(table, encoding="utf-8")
        for path in export_plots(report, args.out):
            print(f"wrote {path}", file=sys.stderr)
    return 0


def _do_cache_gc(args) -> int:
    removed = cache_gc(args.cache_dir, args.max_age_hours * 3600.0)
    print(f"removed={removed}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="transcreval",
        description="Score image-transcreation systems and correlate with human ratings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_evaluate(sub)
    _add_correlate(sub)
    _add_report(sub)
    _add_cache_gc(sub)
    args = parser.parse_args(argv)

    handlers = {
        "evaluate": _do_evaluate,
        "correlate": _do_correlate,
        "report": _do_report,
        "cache-gc": _do_cache_gc,
    }
    try:
        return handlers[args.command](args)
    except TranscrevalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
