"""Report serialization, aligned-table rendering, and plot-data export.

The rendered table has one row per (metric family, model) and one column per
dimension; cells hold cross-group mean taus to two decimals, "-" where
undefined. Plot exports are sorted CSV matrices (groups x metric columns)
ready for external charting.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .correlate import OVERALL, CorrelationReport, ReportRow
from .errors import SchemaError
from .records import CODE_TO_DIM, DIM_TO_CODE

DIMENSION_HEADERS = {
    "cultural_relevance": "cult-rel",
    "semantic_equivalence": "sem-eq",
    "visual_similarity": "vis-sim",
}

_PLOT_FILENAMES = {"target_country": "per_country.csv", "category": "per_category.csv"}


def report_to_jsonl(report: CorrelationReport, path: str | Path) -> None:
    lines = [json.dumps({"kind": "meta", "group_by": list(report.group_by)}, sort_keys=True)]
    for row in report.rows:
        payload = {
            "kind": "row",
            "group": row.group,
            "dimension": row.dimension,
            "metric_id": row.metric_id,
            "mean_tau": row.mean_tau,
            "n_segments_used": row.n_segments_used,
            "n_skipped_nonparsable": row.n_skipped_nonparsable,
            "n_skipped_constant": row.n_skipped_constant,
        }
        lines.append(json.dumps(payload, sort_keys=True, ensure_ascii=False))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def report_from_jsonl(path: str | Path) -> CorrelationReport:
    group_by: tuple[str, ...] = ()
    rows: list[ReportRow] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc}", line=line_no)
            kind = payload.get("kind")
            if kind == "meta":
                group_by = tuple(payload.get("group_by", ()))
            elif kind == "row":
                try:
                    rows.append(
                        ReportRow(
                            group=dict(payload["group"]),
                            dimension=payload["dimension"],
                            metric_id=payload["metric_id"],
                            mean_tau=payload["mean_tau"],
                            n_segments_used=payload["n_segments_used"],
                            n_skipped_nonparsable=payload["n_skipped_nonparsable"],
                            n_skipped_constant=payload["n_skipped_constant"],
                        )
                    )
                except KeyError as exc:
                    raise SchemaError("missing required field", line=line_no, field=str(exc))
            else:
                raise SchemaError(f"unknown kind {kind!r}", line=line_no, field="kind")
    return CorrelationReport(group_by=group_by, rows=rows)


def split_metric_id(metric_id: str) -> tuple[str, str]:
    """metric_id -> (family label, model label) for table rows."""
    parts = metric_id.split(".")
    if parts[0] == "object":
        return "object-based", "-"
    if parts[0] == "embed":
        return "embedding-based", "-" if len(parts) < 3 else parts[1]
    if parts[0] == "vlm":
        return "vlm-based", parts[1] if len(parts) > 1 else "-"
    return parts[0], "-"


def _cell_lookup(rows) -> dict[tuple[str, str, str], float | None]:
    """(family, model, dimension) -> mean tau. The object metric has no
    dimension suffix, so its single metric_id fills all three columns."""
    cells: dict[tuple[str, str, str], float | None] = {}
    for row in rows:
        family, model = split_metric_id(row.metric_id)
        cells[(family, model, row.dimension)] = row.mean_tau
    return cells


_FAMILY_ORDER = {"object-based": 0, "embedding-based": 1, "vlm-based": 2}


def _render_one_table(rows, title: str | None = None) -> str:
    cells = _cell_lookup(rows)
    table_rows = sorted(
        {(family, model) for family, model, _ in cells},
        key=lambda fm: (_FAMILY_ORDER.get(fm[0], 99), fm[0], fm[1]),
    )
    headers = ["metric", "model"] + [DIMENSION_HEADERS[d] for d in DIM_TO_CODE]
    body: list[list[str]] = []
    for family, model in table_rows:
        line = [family, model]
        for dim in DIM_TO_CODE:
            tau = cells.get((family, model, dim))
            line.append("-" if tau is None else f"{tau:.2f}")
        body.append(line)
    widths = [max(len(headers[i]), *(len(r[i]) for r in body)) if body else len(headers[i])
              for i in range(len(headers))]
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for row in body:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(row))).rstrip())
    return "\n".join(lines)


def render_table(report: CorrelationReport) -> str:
    """Cross-group table first, then one section per group value."""
    overall_rows = [r for r in report.rows if all(v == OVERALL for v in r.group.values())]
    group_rows = [r for r in report.rows if any(v != OVERALL for v in r.group.values())]
    sections = [_render_one_table(overall_rows, title="all groups (mean of group means)")]

    by_group: dict[tuple, list[ReportRow]] = {}
    for row in group_rows:
        by_group.setdefault(tuple(sorted(row.group.items())), []).append(row)
    for group_key in sorted(by_group):
        label = ", ".join(f"{k}={v}" for k, v in group_key)
        sections.append(_render_one_table(by_group[group_key], title=label))
    return "\n\n".join(sections) + "\n"


def export_plots(report: CorrelationReport, out_dir: str | Path) -> list[Path]:
    """One CSV matrix per grouping key: group rows x metric|dimension columns,
    cells as %.6f (empty when undefined), everything sorted. Overall rows are
    excluded; they are derivable and would skew charts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for key in report.group_by or ("target_country",):
        rows = [
            r
            for r in report.rows
            if key in r.group and r.group[key] != OVERALL and any(v != OVERALL for v in r.group.values())
        ]
        columns = sorted({(r.metric_id, r.dimension) for r in rows})
        groups = sorted({r.group[key] for r in rows})
        lookup = {(r.group[key], r.metric_id, r.dimension): r.mean_tau for r in rows}
        path = out_dir / _PLOT_FILENAMES.get(key, f"per_{key}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([key] + [f"{m}|{DIM_TO_CODE[d]}" for m, d in columns])
            for group in groups:
                line = [group]
                for metric_id, dim in columns:
                    tau = lookup.get((group, metric_id, dim))
                    line.append("" if tau is None else f"{tau:.6f}")
                writer.writerow(line)
        written.append(path)
    return written


__all__ = [
    "CODE_TO_DIM",
    "DIMENSION_HEADERS",
    "export_plots",
    "render_table",
    "report_from_jsonl",
    "report_to_jsonl",
    "split_metric_id",
]
