"""Meta-evaluation: do the automatic metrics rank systems like humans do?

For every segment we have one human rating per (system, dimension) and one
metric score per (system, metric). Within a segment the systems form two
small rankings, one by metric and one by human, and Kendall's tau-b says how
well they agree. Averaging the per-segment taus inside a group (a country,
or a category) gives the numbers in the report table.

Two kinds of segments never reach that average, and the report carries the
counts instead of hiding them:

  * constant human ratings: every system got the same rating, tau undefined,
  * non-parsable: a metric value is missing for some system (for example a
    judge reply that stayed malformed after the retry).

Signs are aligned before correlating: metrics that grow with *similarity*
are flipped on the visual-change dimension, where humans were asked about
the amount of change.

Run: python3 demos/03_correlate_with_humans.py [workspace-dir]
     (builds the workspace via demo 02 if it is not there yet)
"""

import importlib.util
import sys
from pathlib import Path

from transcreval import cmd_correlate, cmd_export_plots
from transcreval.report import render_table


def ensure_workspace(root: Path) -> None:
    if (root / "out" / "scores.jsonl").exists():
        return
    spec = importlib.util.spec_from_file_location(
        "demo_batch", Path(__file__).with_name("02_batch_evaluate.py")
    )
    module = importlib.util.module_from_spec(spec)
    sys.argv = [sys.argv[0], str(root)]
    spec.loader.exec_module(module)
    module.main()


def main():
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_workspace")
    ensure_workspace(root)

    report = cmd_correlate(
        root / "out" / "scores.jsonl",
        root / "manifest.jsonl",
        root / "report",
        group_by="country",
    )
    print(render_table(report))

    row = report.rows[0]
    print(f"reading the first row: within {row.group}, metric {row.metric_id!r}")
    print(f"  mean tau over usable segments : {row.mean_tau}")
    print(f"  segments used                 : {row.n_segments_used}")
    print(f"  skipped, constant ratings     : {row.n_skipped_constant}")
    print(f"  skipped, non-parsable         : {row.n_skipped_nonparsable}")

    # same scores, grouped the other way
    cmd_correlate(
        root / "out" / "scores.jsonl",
        root / "manifest.jsonl",
        root / "report",
        group_by="category",
    )

    for path in sorted((root / "report").iterdir()):
        print(f"wrote {path}")

    csvs = cmd_export_plots(root / "report" / "report_by_country.jsonl", root / "report")
    csvs += cmd_export_plots(root / "report" / "report_by_category.jsonl", root / "report")
    for path in csvs:
        print(f"wrote {path} (one row per group, one column per metric/dimension)")


if __name__ == "__main__":
    main()
