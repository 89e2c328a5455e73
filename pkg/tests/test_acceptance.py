"""Acceptance gate: one test per contract criterion.

Each test prints a single `[ACCEPTANCE] name: PASS/FAIL (elapsed)` line
(replayed in the terminal summary by conftest) and enforces its runtime
budget as part of the criterion.
"""

import itertools
import json
import math
import random
import subprocess
import sys
import time

import numpy as np

from helpers import build_manifest, png_bytes
from transcreval.cli import cmd_correlate
from transcreval.correlate import (
    ORIENT_CHANGE,
    ORIENT_SIMILARITY,
    SKIP_CONSTANT,
    SKIP_NONPARSABLE,
    build_tuples,
    kendall_tau_b,
    segment_correlation,
)
from transcreval.csi import CsiConfig, csi_overlap
from transcreval.embed_metrics import (
    cultural_relevance_shift,
    semantic_equivalence,
    visual_similarity,
)
from transcreval.judge import parse_judge_output
from transcreval.manifest import Segment, SystemOutput, load_manifest
from transcreval.providers import ImagePart, MockChatProvider, MockEmbeddingProvider, rule_responder
from transcreval.records import ScoreRecord, write_scores

from judge_fixtures import FIXTURES


def _finish(name, failures, started, budget, log):
    elapsed = time.perf_counter() - started
    if elapsed >= budget:
        failures.append(f"runtime {elapsed:.2f}s exceeds the {budget:g}s budget")
    line = f"[ACCEPTANCE] {name}: {'FAIL' if failures else 'PASS'} ({elapsed:.2f}s)"
    print(line)
    log(line)
    assert not failures, f"{name}: " + "; ".join(failures)


# ---- 1. object-metric worked example ----------------------------------------

SRC_IMG = png_bytes((10, 20, 30))
TGT_IMG = png_bytes((200, 100, 50))


def _worked_example_provider():
    replacements = {
        "reasoning": "broccoli, the bill and the spoon are culturally specific",
        "broccoli": ["bell pepper", "radish"],
        "dollar bill": ["yen note"],
        "spoon": ["chopsticks"],
    }

    def has_image(req, image):
        return any(isinstance(p, ImagePart) and p.data == image for p in req.parts)

    return MockChatProvider(
        rule_responder(
            [
                (lambda r: "adapting visuals" in r.text_content(), json.dumps(replacements)),
                (lambda r: has_image(r, SRC_IMG), "broccoli, spoon, dollar bill"),
                (lambda r: has_image(r, TGT_IMG), "bell pepper, spoon, euro bill"),
            ]
        )
    )


def test_acceptance_1_csi_overlap_worked_example(acceptance_log):
    started = time.perf_counter()
    failures = []
    config = CsiConfig(
        provider=_worked_example_provider(),
        read_image=lambda ref: {"src.png": SRC_IMG, "tgt.png": TGT_IMG}[ref],
    )
    score = csi_overlap(
        Segment("s1", "src.png", "japan", "food"), SystemOutput("s1", "sys", "tgt.png"), config
    )
    if score.value is None or abs(score.value - 1 / 3) > 1e-12:
        failures.append(f"expected 1/3, got {score.value!r}")
    if (score.n_csis, score.n_replaced) != (3, 1):
        failures.append(f"expected 1 of 3 items replaced, got {score.n_replaced}/{score.n_csis}")
    _finish("csi-overlap-worked-example", failures, started, budget=1.0, log=acceptance_log)


# ---- 2. rank-correlation oracle equivalence ---------------------------------

# distinct dense-rank patterns of length n over at most 4 values:
# sum over k<=4 of (surjections of n onto k ranks) = 3, 13, 75, 421, 2163
_PATTERN_COUNTS = {2: 3, 3: 13, 4: 75, 5: 421, 6: 2163}


def _rank_patterns(n):
    patterns = set()
    for seq in itertools.product((1, 2, 3, 4), repeat=n):
        uniq = sorted(set(seq))
        patterns.add(tuple(uniq.index(v) + 1 for v in seq))
    return sorted(patterns)


def test_acceptance_2_kendall_tau_matches_pairwise_counter(acceptance_log):
    started = time.perf_counter()
    failures = []
    total_pairs = 0
    sqrt = math.sqrt
    kt = kendall_tau_b
    for n in range(2, 7):
        patterns = _rank_patterns(n)
        if len(patterns) != _PATTERN_COUNTS[n]:
            failures.append(f"n={n}: {len(patterns)} patterns, expected {_PATTERN_COUNTS[n]}")
            continue
        P = np.array(patterns, dtype=np.int64)
        # pairwise sign matrix: one column per index pair (i < j)
        cols = [np.sign(P[:, j] - P[:, i]) for i in range(n) for j in range(i + 1, n)]
        S = np.stack(cols, axis=1)
        N = (S @ S.T).tolist()  # concordant minus discordant, all list pairs at once
        nx = (S != 0).sum(axis=1).tolist()  # untied pair count per list
        lists = [list(p) for p in patterns]
        m = len(lists)
        for a in range(m):
            la, Na, na = lists[a], N[a], nx[a]
            for b in range(m):
                nb = nx[b]
                got = kt(la, lists[b])
                if na == 0 or nb == 0:
                    ok = got is None
                else:
                    ok = got is not None and abs(got - Na[b] / sqrt(na * nb)) <= 1e-12
                if not ok and len(failures) < 5:
                    failures.append(f"mismatch at n={n}: x={la} y={lists[b]} got={got!r}")
        total_pairs += m * m
    if total_pairs != sum(c * c for c in _PATTERN_COUNTS.values()):
        failures.append(f"enumerated {total_pairs} pairs, fewer than exhaustive")
    _finish("kendall-tau-oracle-equivalence", failures, started, budget=60.0, log=acceptance_log)


# ---- 3. embedding formula identities -----------------------------------------


def test_acceptance_3_embedding_identities(acceptance_log):
    started = time.perf_counter()
    failures = []
    provider = MockEmbeddingProvider(seed=11, dim=24)
    rng = random.Random(7)
    countries = ["japan", "brazil", "nigeria", "turkey", "portugal", "india", "usa"]
    categories = ["food", "festivals", "fashion", "architecture"]
    trials = 1000
    for trial in range(trials):
        a = rng.randbytes(24)
        b = rng.randbytes(24)
        country = rng.choice(countries)
        category = rng.choice(categories)

        same = cultural_relevance_shift(a, a, country, provider).value
        if same != 0.0:
            failures.append(f"trial {trial}: shift(x, x) = {same!r}, not 0")
        shift = cultural_relevance_shift(a, b, country, provider).value
        if not -2.0 <= shift <= 2.0:
            failures.append(f"trial {trial}: shift {shift} outside [-2, 2]")
        sem = semantic_equivalence(b, category, provider).value
        if not -1.0 <= sem <= 1.0:
            failures.append(f"trial {trial}: semantic score {sem} outside [-1, 1]")
        self_sim = visual_similarity(a, a, provider).value
        if abs(self_sim - 1.0) > 1e-12:
            failures.append(f"trial {trial}: self-similarity {self_sim!r}, not 1")
        ab = visual_similarity(a, b, provider).value
        ba = visual_similarity(b, a, provider).value
        if ab != ba:
            failures.append(f"trial {trial}: asymmetric similarity {ab!r} vs {ba!r}")
        if not -1.0 <= ab <= 1.0:
            failures.append(f"trial {trial}: similarity {ab} outside [-1, 1]")
        if len(failures) >= 5:
            break
    _finish("embedding-formula-identities", failures, started, budget=10.0, log=acceptance_log)


# ---- 4. judge output parser ---------------------------------------------------


def test_acceptance_4_judge_parser_corpus(acceptance_log):
    started = time.perf_counter()
    failures = []
    if len(FIXTURES) < 30:
        failures.append(f"only {len(FIXTURES)} fixtures, need at least 30")
    for name, text, schema, expected_score, expected_status in FIXTURES:
        try:
            parsed = parse_judge_output(text, schema)
        except Exception as exc:  # the parser contract is totality
            failures.append(f"{name}: raised {type(exc).__name__}: {exc}")
            continue
        if (parsed.score, parsed.parse_status) != (expected_score, expected_status):
            failures.append(
                f"{name}: got ({parsed.score!r}, {parsed.parse_status!r}), "
                f"expected ({expected_score!r}, {expected_status!r})"
            )
    _finish("judge-parser-corpus", failures, started, budget=1.0, log=acceptance_log)


# ---- 5. skip-rule conformance -------------------------------------------------


def test_acceptance_5_skip_rules(tmp_path, acceptance_log):
    started = time.perf_counter()
    failures = []
    # seg001: both raters agree across systems (constant); seg002: one system's
    # judge output never parsed (non-parsable for that metric only)
    manifest_path = build_manifest(
        tmp_path / "data",
        n_segments=3,
        systems=("sysA", "sysB"),
        countries=("india",),
        rating_fn=lambda i, j, dim: 2 if i == 1 else j + 1,
    )

    def rec(seg, sysid, metric, dim, value, status="ok"):
        return ScoreRecord(
            segment_id=seg,
            system_id=sysid,
            metric_id=metric,
            dimension=dim,
            value=value,
            parse_status=status,
            orientation=None,
            provenance_ref=None,
            note=None,
        )

    records = []
    sem_values = {"seg000": (0.2, 0.4), "seg001": (0.3, 0.7), "seg002": (0.2, 0.4)}
    cult_values = {"seg000": (2.0, 4.0), "seg001": (3.0, 1.0), "seg002": (None, 5.0)}
    for seg, (va, vb) in sem_values.items():
        records.append(rec(seg, "sysA", "embed.sem_eq", "semantic_equivalence", va))
        records.append(rec(seg, "sysB", "embed.sem_eq", "semantic_equivalence", vb))
    for seg, (va, vb) in cult_values.items():
        status = "failed" if va is None else "ok"
        records.append(
            rec(seg, "sysA", "vlm.judge.cult_rel", "cultural_relevance", va, status)
        )
        records.append(rec(seg, "sysB", "vlm.judge.cult_rel", "cultural_relevance", vb))
    scores_path = tmp_path / "scores.jsonl"
    write_scores(scores_path, records)

    # the per-segment outcomes name the two skipped segments directly
    tuples = {
        (t.segment_id, t.metric_id): t
        for t in build_tuples(records, load_manifest(manifest_path))
    }
    if segment_correlation(tuples[("seg001", "vlm.judge.cult_rel")], None) != SKIP_CONSTANT:
        failures.append("seg001 not skipped as constant")
    if segment_correlation(tuples[("seg002", "vlm.judge.cult_rel")], None) != SKIP_NONPARSABLE:
        failures.append("seg002 not skipped as nonparsable")

    report = cmd_correlate(scores_path, manifest_path, tmp_path / "corr", group_by="country")
    rows = {
        (r.group["target_country"], r.metric_id): r
        for r in report.rows
        if r.dimension in ("cultural_relevance", "semantic_equivalence")
    }
    judged = rows[("india", "vlm.judge.cult_rel")]
    if (judged.n_segments_used, judged.n_skipped_constant, judged.n_skipped_nonparsable) != (
        1,
        1,
        1,
    ):
        failures.append(
            f"judge row counts used/constant/nonparsable = "
            f"{judged.n_segments_used}/{judged.n_skipped_constant}/{judged.n_skipped_nonparsable}"
        )
    if judged.mean_tau != 1.0:
        failures.append(f"skips leaked into the judge mean: {judged.mean_tau!r}")
    embedded = rows[("india", "embed.sem_eq")]
    if (
        embedded.n_segments_used,
        embedded.n_skipped_constant,
        embedded.n_skipped_nonparsable,
    ) != (2, 1, 0):
        failures.append(
            f"embed row counts used/constant/nonparsable = "
            f"{embedded.n_segments_used}/{embedded.n_skipped_constant}/"
            f"{embedded.n_skipped_nonparsable}"
        )
    if embedded.mean_tau != 1.0:
        failures.append(f"skips leaked into the embed mean: {embedded.mean_tau!r}")
    for row in rows.values():
        total = row.n_segments_used + row.n_skipped_constant + row.n_skipped_nonparsable
        if total != 3:
            failures.append(f"row {row.metric_id} counts do not reconcile: {total} of 3")
    _finish("skip-rule-conformance", failures, started, budget=30.0, log=acceptance_log)


# ---- 6. end-to-end determinism and resumability -------------------------------

CLI = [sys.executable, "-m", "transcreval"]
E2E_METRICS = "object,embed,vlm:judge"


def _providers_file(path, latency_ms=0):
    bindings = {
        "chat": {"type": "synthetic-chat", "seed": 3, "latency_ms": latency_ms},
        "embed": {"type": "mock-embed", "seed": 3, "dim": 16},
        "judge": {"type": "synthetic-chat", "seed": 5, "latency_ms": latency_ms},
    }
    path.write_text(json.dumps(bindings), encoding="utf-8")
    return path


def _evaluate_cli(manifest, out, providers, *extra):
    return subprocess.run(
        [
            *CLI,
            "evaluate",
            "--manifest",
            str(manifest),
            "--out",
            str(out),
            "--metrics",
            E2E_METRICS,
            "--providers",
            str(providers),
            "--parallelism",
            "4",
            *extra,
        ],
        capture_output=True,
        text=True,
    )


def _correlate_cli(manifest, scores, out):
    return subprocess.run(
        [
            *CLI,
            "correlate",
            "--scores",
            str(scores),
            "--manifest",
            str(manifest),
            "--out",
            str(out),
        ],
        capture_output=True,
        text=True,
    )


def test_acceptance_6_determinism_and_resume(tmp_path, acceptance_log):
    started = time.perf_counter()
    failures = []
    manifest = build_manifest(
        tmp_path / "data",
        n_segments=20,
        systems=("sysA", "sysB", "sysC"),
        countries=("japan", "brazil"),
        categories=("food", "fashion"),
    )
    fast = _providers_file(tmp_path / "providers.json")
    slow = _providers_file(tmp_path / "providers_slow.json", latency_ms=25)

    # (a) two complete runs are byte-identical, scores and reports both
    for out in ("outA", "outB"):
        proc = _evaluate_cli(manifest, tmp_path / out, fast)
        if proc.returncode != 0:
            failures.append(f"evaluate into {out} exited {proc.returncode}: {proc.stderr}")
    scores_a = (tmp_path / "outA" / "scores.jsonl").read_bytes()
    if scores_a != (tmp_path / "outB" / "scores.jsonl").read_bytes():
        failures.append("two complete runs differ in scores.jsonl")
    for out in ("outA", "outB"):
        _correlate_cli(manifest, tmp_path / out / "scores.jsonl", tmp_path / f"corr_{out}")
    for name in ("report_by_country.jsonl", "table_by_country.txt"):
        if (tmp_path / "corr_outA" / name).read_bytes() != (
            tmp_path / "corr_outB" / name
        ).read_bytes():
            failures.append(f"two complete runs differ in {name}")

    # (b) kill a slow run mid-flight, resume, compare with the uninterrupted run
    killed_out = tmp_path / "outK"
    proc = subprocess.Popen(
        [
            *CLI,
            "evaluate",
            "--manifest",
            str(manifest),
            "--out",
            str(killed_out),
            "--metrics",
            E2E_METRICS,
            "--providers",
            str(slow),
            "--parallelism",
            "4",
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    scores_path = killed_out / "scores.jsonl"
    deadline = time.time() + 60
    while time.time() < deadline:
        if scores_path.exists():
            with open(scores_path, "rb") as fh:
                if fh.read().count(b"\n") >= 25:
                    break
        time.sleep(0.02)
    proc.kill()
    proc.wait(timeout=30)
    n_partial = scores_path.read_bytes().count(b"\n") if scores_path.exists() else 0
    if not 0 < n_partial < 420:
        failures.append(f"kill landed outside mid-run: {n_partial} of 420 records on disk")
    resume = _evaluate_cli(manifest, killed_out, fast)
    if resume.returncode != 0:
        failures.append(f"resume exited {resume.returncode}: {resume.stderr}")
    if "resumed_existing=0" in resume.stdout:
        failures.append("resume recomputed everything; nothing was resumed")
    if scores_path.read_bytes() != scores_a:
        failures.append("killed-and-resumed run differs from the uninterrupted run")

    # (c) a warm-cache rerun answers everything from the cache
    cache = tmp_path / "cache"
    _evaluate_cli(manifest, tmp_path / "outC1", fast, "--cache-dir", str(cache))
    warm = _evaluate_cli(manifest, tmp_path / "outC2", fast, "--cache-dir", str(cache))
    if "provider_calls=0" not in warm.stdout:
        failures.append(f"warm-cache rerun still called providers: {warm.stdout!r}")
    if (tmp_path / "outC1" / "scores.jsonl").read_bytes() != (
        tmp_path / "outC2" / "scores.jsonl"
    ).read_bytes():
        failures.append("warm-cache rerun changed the scores file")
    _finish("e2e-determinism-and-resume", failures, started, budget=120.0, log=acceptance_log)


# ---- 7. report shape ----------------------------------------------------------

COUNTRIES7 = ("brazil", "india", "japan", "nigeria", "portugal", "turkey", "usa")
JUDGES = ("judge-a", "judge-b", "judge-c")
TABLE_ROWS = [
    ("object-based", "-"),
    ("embedding-based", "-"),
    ("vlm-based", "judge-a"),
    ("vlm-based", "judge-b"),
    ("vlm-based", "judge-c"),
]


def _perfect_agreement_records(manifest_path):
    """Metric values that rank systems exactly as the (shared) human ratings
    do on every segment: ascending with rating everywhere except the
    similarity-oriented embedding metric, which must descend so that the
    change-orientation flip restores perfect agreement."""
    manifest = load_manifest(manifest_path)
    records = []
    for out in manifest.outputs:
        r = float(int(out.system_id[-1]))  # sysN -> rating N, matches rating_fn below
        rows = [
            ("object.csi_overlap", None, ORIENT_CHANGE, r / 5),
            ("embed.cult_rel", "cultural_relevance", None, (r - 2) / 2),
            ("embed.sem_eq", "semantic_equivalence", None, r / 5),
            ("embed.vis_sim", "visual_similarity", ORIENT_SIMILARITY, 0.9 - r / 5),
        ]
        for judge in JUDGES:
            rows.append((f"vlm.{judge}.cult_rel", "cultural_relevance", None, r))
            rows.append((f"vlm.{judge}.sem_eq", "semantic_equivalence", None, r))
            rows.append((f"vlm.{judge}.vis_sim", "visual_similarity", ORIENT_CHANGE, r))
        for metric_id, dim, orientation, value in rows:
            records.append(
                ScoreRecord(
                    segment_id=out.segment_id,
                    system_id=out.system_id,
                    metric_id=metric_id,
                    dimension=dim,
                    value=value,
                    parse_status="ok",
                    orientation=orientation,
                    provenance_ref=None,
                    note=None,
                )
            )
    return records


def _check_table(text, n_sections, failures, label):
    sections = text.rstrip("\n").split("\n\n")
    if len(sections) != n_sections:
        failures.append(f"{label}: {len(sections)} sections, expected {n_sections}")
        return
    if not sections[0].startswith("all groups (mean of group means)"):
        failures.append(f"{label}: missing the cross-group section")
    for section in sections:
        lines = section.splitlines()
        if lines[1].split() != ["metric", "model", "cult-rel", "sem-eq", "vis-sim"]:
            failures.append(f"{label}: header row is {lines[1]!r}")
        body = [line.split() for line in lines[3:]]
        if [(b[0], b[1]) for b in body] != TABLE_ROWS:
            failures.append(f"{label}: metric/model rows are {[(b[0], b[1]) for b in body]}")
        for b in body:
            if b[2:] != ["1.00", "1.00", "1.00"]:
                failures.append(f"{label}: cell not 1.00 in row {b}")


def test_acceptance_7_report_shape_and_perfect_agreement(tmp_path, acceptance_log):
    started = time.perf_counter()
    failures = []
    manifest_path = build_manifest(
        tmp_path / "data",
        n_segments=21,
        systems=("sys1", "sys2", "sys3"),
        countries=COUNTRIES7,
        categories=("food", "festivals", "fashion"),
        rating_fn=lambda i, j, dim: j + 1,
    )
    scores_path = tmp_path / "scores.jsonl"
    write_scores(scores_path, _perfect_agreement_records(manifest_path))

    by_country = cmd_correlate(
        scores_path, manifest_path, tmp_path / "corr", group_by="country"
    )
    by_category = cmd_correlate(
        scores_path, manifest_path, tmp_path / "corr", group_by="category"
    )

    countries = {r.group["target_country"] for r in by_country.rows}
    if countries != set(COUNTRIES7) | {"*"}:
        failures.append(f"country groups are {sorted(countries)}")
    categories = {r.group["category"] for r in by_category.rows}
    if categories != {"food", "festivals", "fashion", "*"}:
        failures.append(f"category groups are {sorted(categories)}")

    # 15 (dimension, metric) cells per group: 3 dims x 5 metric configurations
    for report, n_groups, label in ((by_country, 8, "country"), (by_category, 4, "category")):
        if len(report.rows) != n_groups * 15:
            failures.append(f"{label} report has {len(report.rows)} rows, not {n_groups * 15}")
        for row in report.rows:
            if row.mean_tau is None or abs(row.mean_tau - 1.0) > 1e-12:
                failures.append(f"{label} cell {row.metric_id}/{row.dimension}: {row.mean_tau!r}")
                break
            if row.n_skipped_constant or row.n_skipped_nonparsable:
                failures.append(f"{label} cell {row.metric_id} reports skips")
                break

    _check_table(
        (tmp_path / "corr" / "table_by_country.txt").read_text(encoding="utf-8"),
        n_sections=8,
        failures=failures,
        label="country table",
    )
    _check_table(
        (tmp_path / "corr" / "table_by_category.txt").read_text(encoding="utf-8"),
        n_sections=4,
        failures=failures,
        label="category table",
    )
    _finish("report-shape-and-perfect-agreement", failures, started, budget=30.0, log=acceptance_log)
