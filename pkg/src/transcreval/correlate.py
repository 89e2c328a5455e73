"""Meta-evaluation: per-segment Kendall tau-b between metric scores and human
ratings across systems, then grouped means.

Skip rules applied per segment tuple, in order: fewer than two systems left
after dropping non-parsable metric values (or systems without ratings) skips
the segment as `nonparsable`; a constant metric or human vector skips it as
`constant` (tau-b is undefined there). Skipped segments never enter a mean;
the report carries their counts so the totals reconcile.

Orientation: the human visual question asks about visual CHANGE, so metric
values flagged orientation="similarity" are negated before correlating on the
visual_similarity dimension. No other dimension flips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import LengthMismatch, MissingRatings, TooFew
from .manifest import DIMENSIONS, Manifest

ORIENT_SIMILARITY = "similarity"
ORIENT_CHANGE = "change"

SKIP_NONPARSABLE = "nonparsable"
SKIP_CONSTANT = "constant"

OVERALL = "*"


def kendall_tau_b(x, y) -> float | None:
    """Tie-corrected tau: (C - D) / sqrt((n0 - n1)(n0 - n2)), with C/D the
    concordant/discordant pair counts, n0 = n(n-1)/2, and n1/n2 the tied-pair
    counts within x and y. Returns None (undefined) when either list is
    constant enough to zero the denominator. O(n^2); n here is the number of
    systems, which is small."""
    n = len(x)
    if n != len(y):
        raise LengthMismatch(f"length mismatch: {n} vs {len(y)}")
    if n < 2:
        raise TooFew("kendall_tau_b needs at least 2 items")
    concordant = discordant = ties_x = ties_y = 0
    for i in range(n - 1):
        xi = x[i]
        yi = y[i]
        for j in range(i + 1, n):
            dx = (xi > x[j]) - (xi < x[j])
            dy = (yi > y[j]) - (yi < y[j])
            if dx == 0:
                ties_x += 1
                if dy == 0:
                    ties_y += 1
            elif dy == 0:
                ties_y += 1
            elif dx == dy:
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom = (n0 - ties_x) * (n0 - ties_y)
    if denom <= 0:
        return None
    return (concordant - discordant) / math.sqrt(denom)


@dataclass(frozen=True)
class SegmentTuple:
    segment_id: str
    dimension: str
    metric_id: str
    metric_values: dict[str, float | None]  # system_id -> value (None: non-parsable)
    human_values: dict[str, int]  # system_id -> 1..5 rating
    target_country: str = ""
    category: str = ""


def segment_correlation(t: SegmentTuple, orientation: str | None) -> float | str:
    """One tau per segment, or the skip reason string."""
    systems = [
        s
        for s in sorted(t.metric_values)
        if t.metric_values[s] is not None and s in t.human_values
    ]
    if len(systems) < 2:
        return SKIP_NONPARSABLE
    metric = [t.metric_values[s] for s in systems]
    human = [t.human_values[s] for s in systems]
    if t.dimension == "visual_similarity" and orientation == ORIENT_SIMILARITY:
        metric = [-v for v in metric]
    tau = kendall_tau_b(metric, human)
    if tau is None:
        return SKIP_CONSTANT
    return tau


def build_tuples(records, manifest: Manifest, metric_ids=None) -> list[SegmentTuple]:
    """Join score records with the manifest's ratings.

    A record with dimension null (the object metric) pairs with every human
    dimension. Segments that have metric records but no ratings at all for a
    paired dimension are collected and raised as MissingRatings; partially
    rated segments survive and may later skip as nonparsable.
    """
    ratings = manifest.ratings_lookup()
    segments = manifest.segment_by_id()
    grouped: dict[tuple[str, str, str], dict[str, float | None]] = {}
    for rec in records:
        if metric_ids is not None and rec.metric_id not in metric_ids:
            continue
        dims = (rec.dimension,) if rec.dimension else DIMENSIONS
        value = None if rec.parse_status == "failed" else rec.value
        for dim in dims:
            grouped.setdefault((rec.metric_id, rec.segment_id, dim), {})[rec.system_id] = value

    tuples: list[SegmentTuple] = []
    unrated: set[str] = set()
    for (metric_id, segment_id, dim), metric_values in sorted(grouped.items()):
        seg = segments.get(segment_id)
        if seg is None:
            raise MissingRatings([segment_id])  # scores refer outside the manifest
        human_values = {
            sys: ratings[(segment_id, sys, dim)]
            for sys in metric_values
            if (segment_id, sys, dim) in ratings
        }
        if not human_values:
            unrated.add(segment_id)
            continue
        tuples.append(
            SegmentTuple(
                segment_id=segment_id,
                dimension=dim,
                metric_id=metric_id,
                metric_values=metric_values,
                human_values=human_values,
                target_country=seg.target_country,
                category=seg.category,
            )
        )
    if unrated:
        raise MissingRatings(sorted(unrated))
    return tuples


@dataclass(frozen=True)
class ReportRow:
    group: dict[str, str]  # e.g. {"target_country": "Japan"}; OVERALL rows use "*"
    dimension: str
    metric_id: str
    mean_tau: float | None
    n_segments_used: int
    n_skipped_nonparsable: int
    n_skipped_constant: int


@dataclass
class CorrelationReport:
    group_by: tuple[str, ...]
    rows: list[ReportRow] = field(default_factory=list)


def aggregate(
    tuples,
    orientations: dict[str, str | None],
    group_by: tuple[str, ...] = ("target_country",),
) -> CorrelationReport:
    """Unweighted mean of segment taus per (group, dimension, metric), plus
    one OVERALL row per (dimension, metric) holding the mean of group means,
    so every group counts equally regardless of size."""
    for key in group_by:
        if key not in ("target_country", "category"):
            raise ValueError(f"cannot group by {key!r}")

    cells: dict[tuple, dict] = {}
    for t in tuples:
        outcome = segment_correlation(t, orientations.get(t.metric_id))
        group_vals = tuple(getattr(t, key) for key in group_by)
        cell = cells.setdefault(
            (group_vals, t.dimension, t.metric_id),
            {"taus": [], "nonparsable": 0, "constant": 0},
        )
        if outcome == SKIP_NONPARSABLE:
            cell["nonparsable"] += 1
        elif outcome == SKIP_CONSTANT:
            cell["constant"] += 1
        else:
            cell["taus"].append(outcome)

    rows: list[ReportRow] = []
    by_metric_dim: dict[tuple[str, str], list[float]] = {}
    for (group_vals, dimension, metric_id), cell in sorted(cells.items()):
        taus = cell["taus"]
        mean_tau = sum(taus) / len(taus) if taus else None
        rows.append(
            ReportRow(
                group=dict(zip(group_by, group_vals)),
                dimension=dimension,
                metric_id=metric_id,
                mean_tau=mean_tau,
                n_segments_used=len(taus),
                n_skipped_nonparsable=cell["nonparsable"],
                n_skipped_constant=cell["constant"],
            )
        )
        if mean_tau is not None:
            by_metric_dim.setdefault((dimension, metric_id), []).append(mean_tau)

    overall_group = {key: OVERALL for key in group_by}
    for (dimension, metric_id), means in sorted(by_metric_dim.items()):
        used = sum(
            r.n_segments_used for r in rows if r.dimension == dimension and r.metric_id == metric_id
        )
        nonp = sum(
            r.n_skipped_nonparsable
            for r in rows
            if r.dimension == dimension and r.metric_id == metric_id
        )
        const = sum(
            r.n_skipped_constant
            for r in rows
            if r.dimension == dimension and r.metric_id == metric_id
        )
        rows.append(
            ReportRow(
                group=overall_group,
                dimension=dimension,
                metric_id=metric_id,
                mean_tau=sum(means) / len(means),
                n_segments_used=used,
                n_skipped_nonparsable=nonp,
                n_skipped_constant=const,
            )
        )
    return CorrelationReport(group_by=group_by, rows=rows)
