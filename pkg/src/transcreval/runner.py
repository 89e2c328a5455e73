"""Batch evaluation engine behind the CLI.

Task granularity is one score record: (metric_id, segment, system). Workers
run provider calls in parallel; every file write happens on the coordinating
thread. The scores file is appended record-by-record while the run is live,
then compacted to canonical order on completion, which is what makes complete
runs byte-reproducible and interrupted runs resumable.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .correlate import ORIENT_CHANGE, ORIENT_SIMILARITY
from .csi import CsiConfig, csi_overlap
from .embed_metrics import (
    CULTURAL_TEMPLATE_VARIANTS,
    cultural_relevance_shift,
    semantic_equivalence,
    visual_similarity,
)
from .errors import ConfigError, DecodeError, ParseError, ProviderError, SchemaError
from .judge import judge, judge_specs
from .manifest import Manifest, load_manifest
from .providers.base import ChatProvider, EmbeddingProvider
from .providers.config import ProvidersBundle, build_providers
from .providers.http import shim_health
from .records import (
    DIM_TO_CODE,
    PARSE_FAILED,
    PARSE_OK,
    ProvenanceStore,
    ScoreRecord,
    read_scores,
    record_to_json,
    write_scores,
)

SCORES_FILENAME = "scores.jsonl"

HARD_FAILURE_PREFIX = "provider_error:"


@dataclass
class RunConfig:
    manifest: Path
    out_dir: Path
    metrics: tuple[str, ...] = ("object", "embed", "vlm:judge")
    providers: dict = field(default_factory=dict)
    parallelism: int = 4
    cache_dir: Path | None = None
    seed: int = 0
    matcher: str = "lexical"
    template_variant: str = "country"
    validate_images: bool = False

    def __post_init__(self) -> None:
        self.manifest = Path(self.manifest)
        self.out_dir = Path(self.out_dir)
        if self.cache_dir is not None:
            self.cache_dir = Path(self.cache_dir)
        if isinstance(self.metrics, str):
            self.metrics = tuple(m.strip() for m in self.metrics.split(",") if m.strip())
        else:
            self.metrics = tuple(self.metrics)
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.matcher not in ("lexical", "llm"):
            raise ConfigError(f"unknown matcher {self.matcher!r}")
        if self.template_variant not in CULTURAL_TEMPLATE_VARIANTS:
            raise ConfigError(f"unknown template variant {self.template_variant!r}")


@dataclass(frozen=True)
class MetricOp:
    metric_id: str
    dimension: str | None
    orientation: str | None
    provider_name: str
    kind: str  # object | embed | vlm
    dim_code: str | None = None


def expand_metrics(selections) -> list[MetricOp]:
    """Metric selection grammar:
      object                     one overlap record per pair
      embed[.<dim_code>]         all three embedding records, or one
      vlm:<provider>[.<code>]    all three judge records for that provider
    dim codes: cult_rel, sem_eq, vis_sim.
    """
    ops: list[MetricOp] = []
    seen: set[str] = set()
    embed_orients = {"cult_rel": None, "sem_eq": None, "vis_sim": ORIENT_SIMILARITY}
    vlm_orients = {"cult_rel": None, "sem_eq": None, "vis_sim": ORIENT_CHANGE}

    def add(op: MetricOp) -> None:
        if op.metric_id in seen:
            raise ConfigError(f"metric {op.metric_id!r} selected twice")
        seen.add(op.metric_id)
        ops.append(op)

    for sel in selections:
        if sel == "object":
            add(MetricOp("object.csi_overlap", None, ORIENT_CHANGE, "chat", "object"))
        elif sel == "embed" or sel.startswith("embed."):
            codes = [sel.split(".", 1)[1]] if "." in sel else list(DIM_TO_CODE.values())
            for code in codes:
                if code not in embed_orients:
                    raise ConfigError(f"unknown embedding dimension code {code!r} in {sel!r}")
                dim = {v: k for k, v in DIM_TO_CODE.items()}[code]
                add(MetricOp(f"embed.{code}", dim, embed_orients[code], "embed", "embed", code))
        elif sel.startswith("vlm:"):
            rest = sel[len("vlm:") :]
            provider_name, _, code = rest.partition(".")
            if not provider_name:
                raise ConfigError(f"metric selection {sel!r} names no provider")
            codes = [code] if code else list(DIM_TO_CODE.values())
            for c in codes:
                if c not in vlm_orients:
                    raise ConfigError(f"unknown judge dimension code {c!r} in {sel!r}")
                dim = {v: k for k, v in DIM_TO_CODE.items()}[c]
                add(
                    MetricOp(
                        f"vlm.{provider_name}.{c}", dim, vlm_orients[c], provider_name, "vlm", c
                    )
                )
        else:
            raise ConfigError(f"unknown metric selection {sel!r}")
    if not ops:
        raise ConfigError("no metrics selected")
    return ops


def _bind_providers(ops: list[MetricOp], bundle: ProvidersBundle, matcher: str) -> None:
    """Every selected metric must resolve to a configured provider of the
    right capability before anything runs."""
    for op in ops:
        provider = bundle.by_name.get(op.provider_name)
        if provider is None:
            raise ConfigError(
                f"metric {op.metric_id!r} needs provider {op.provider_name!r}, "
                f"which is not configured"
            )
        if op.kind in ("object", "vlm") and not isinstance(provider, ChatProvider):
            raise ConfigError(f"metric {op.metric_id!r} needs a chat provider")
        if op.kind == "embed" and not isinstance(provider, EmbeddingProvider):
            raise ConfigError(f"metric {op.metric_id!r} needs an embedding provider")
    if matcher == "llm" and any(op.kind == "object" for op in ops):
        name = "match" if "match" in bundle.by_name else "chat"
        if not isinstance(bundle.by_name.get(name), ChatProvider):
            raise ConfigError("llm matcher needs a chat provider under 'match' or 'chat'")


@dataclass
class RunSummary:
    n_records: int = 0
    n_ok: int = 0
    n_repaired: int = 0
    n_failed: int = 0
    n_undefined: int = 0
    hard_failures: int = 0
    provider_calls: int = 0
    resumed_existing: int = 0

    def format(self) -> str:
        return "\n".join(
            [
                f"records={self.n_records}",
                f"ok={self.n_ok}",
                f"repaired={self.n_repaired}",
                f"failed={self.n_failed}",
                f"undefined={self.n_undefined}",
                f"hard_failures={self.hard_failures}",
                f"provider_calls={self.provider_calls}",
                f"resumed_existing={self.resumed_existing}",
            ]
        )


def _image_reader(manifest: Manifest):
    @lru_cache(maxsize=256)
    def read_cached(resolved: str) -> bytes:
        return Path(resolved).read_bytes()

    def read_image(ref: str) -> bytes:
        return read_cached(str(manifest.resolve_image(ref)))

    return read_image


def _run_object(op: MetricOp, segment, output, bundle, cfg: RunConfig, read_image):
    provider = bundle.by_name[op.provider_name]
    match_provider = bundle.by_name.get("match")
    score = csi_overlap(
        segment,
        output,
        CsiConfig(
            provider=provider,
            read_image=read_image,
            matcher=cfg.matcher,
            match_provider=match_provider,
            model_id=getattr(bundle.inners[op.provider_name], "model_id", "default"),
        ),
    )
    provenance = dict(score.provenance)
    provenance["matches"] = [list(m) for m in score.matches]
    provenance["n_csis"] = score.n_csis
    provenance["n_replaced"] = score.n_replaced
    note = None if score.value is not None else f"undefined: n_csis={score.n_csis}"
    return score.value, PARSE_OK, note, provenance


def _run_embed(op: MetricOp, segment, output, bundle, cfg: RunConfig, read_image):
    provider = bundle.by_name[op.provider_name]
    src = read_image(segment.source_image)
    tgt = read_image(output.target_image)
    if op.dim_code == "cult_rel":
        score = cultural_relevance_shift(
            src, tgt, segment.target_country, provider, template_variant=cfg.template_variant
        )
    elif op.dim_code == "sem_eq":
        score = semantic_equivalence(tgt, segment.category, provider)
    else:
        score = visual_similarity(src, tgt, provider)
    provenance = {
        "components": score.components,
        "templates_used": list(score.templates_used),
    }
    return score.value, PARSE_OK, None, provenance


def _run_vlm(op: MetricOp, segment, output, bundle, cfg: RunConfig, read_image, specs):
    provider = bundle.by_name[op.provider_name]
    score = judge(
        segment,
        output,
        op.dimension,
        provider,
        read_image=read_image,
        model_id=getattr(bundle.inners[op.provider_name], "model_id", "default"),
        specs=specs,
    )
    provenance = {
        "raw_text": score.raw_text,
        "reasoning": score.reasoning,
        "secondary_score": score.secondary_score,
    }
    value = float(score.score) if score.score is not None else None
    return value, score.parse_status, score.note, provenance


def cmd_evaluate(cfg: RunConfig) -> tuple[int, RunSummary]:
    """Returns (exit_code, summary). Exit is nonzero iff a provider hard
    failure (auth, exhausted retries, non-retryable status) marred the run;
    ordinary non-parsable model output is success with warnings."""
    ops = expand_metrics(cfg.metrics)
    bundle = build_providers(cfg.providers, cache_dir=cfg.cache_dir, default_seed=cfg.seed)
    _bind_providers(ops, bundle, cfg.matcher)

    manifest = load_manifest(cfg.manifest, validate_images=cfg.validate_images)
    if not manifest.outputs:
        raise SchemaError("manifest has no system outputs; nothing to evaluate")
    read_image = _image_reader(manifest)

    for url in bundle.shim_urls():
        shim_health(url)  # fail fast, before any scoring work is scheduled

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    scores_path = cfg.out_dir / SCORES_FILENAME
    store = ProvenanceStore(cfg.out_dir / "provenance")

    kept: list[ScoreRecord] = []
    if scores_path.exists():
        for rec in read_scores(scores_path, tolerate_partial_tail=True):
            # hard provider failures are retried on resume; everything else is final
            if rec.note and rec.note.startswith(HARD_FAILURE_PREFIX):
                continue
            kept.append(rec)
    done = {rec.key() for rec in kept}

    segments = manifest.segment_by_id()
    pairs = sorted(manifest.outputs, key=lambda o: (o.segment_id, o.system_id))
    specs = judge_specs()
    tasks = []
    for op in sorted(ops, key=lambda o: o.metric_id):
        for output in pairs:
            if (op.metric_id, output.segment_id, output.system_id) in done:
                continue
            tasks.append((op, segments[output.segment_id], output))

    summary = RunSummary(resumed_existing=len(kept))

    def run_task(op: MetricOp, segment, output):
        try:
            if op.kind == "object":
                return _run_object(op, segment, output, bundle, cfg, read_image)
            if op.kind == "embed":
                return _run_embed(op, segment, output, bundle, cfg, read_image)
            return _run_vlm(op, segment, output, bundle, cfg, read_image, specs)
        except ProviderError as exc:
            return None, PARSE_FAILED, f"{HARD_FAILURE_PREFIX} {exc}", {"error": str(exc)}
        except ParseError as exc:
            return None, PARSE_FAILED, f"parse_error: {exc}", {"error": str(exc)}
        except DecodeError as exc:
            return None, PARSE_FAILED, f"decode_error: {exc}", {"error": str(exc)}

    new_records: list[ScoreRecord] = []
    # rewrite the compacted survivors first so a torn tail from a previous
    # kill never prefixes fresh appends
    write_scores(scores_path, kept)
    with open(scores_path, "a", encoding="utf-8") as out_fh:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            futures = {
                pool.submit(run_task, op, segment, output): (op, output)
                for op, segment, output in tasks
            }
            for future in as_completed(futures):
                op, output = futures[future]
                value, parse_status, note, provenance = future.result()
                ref = store.put(provenance) if provenance else None
                rec = ScoreRecord(
                    segment_id=output.segment_id,
                    system_id=output.system_id,
                    metric_id=op.metric_id,
                    dimension=op.dimension,
                    value=value,
                    parse_status=parse_status,
                    orientation=op.orientation,
                    provenance_ref=ref,
                    note=note,
                )
                out_fh.write(record_to_json(rec) + "\n")
                out_fh.flush()
                new_records.append(rec)

    write_scores(scores_path, kept + new_records)

    for rec in kept + new_records:
        summary.n_records += 1
        if rec.parse_status == PARSE_FAILED:
            summary.n_failed += 1
        elif rec.parse_status == "repaired":
            summary.n_repaired += 1
        else:
            summary.n_ok += 1
        if rec.value is None and rec.parse_status != PARSE_FAILED:
            summary.n_undefined += 1
    summary.hard_failures = sum(
        1 for rec in new_records if rec.note and rec.note.startswith(HARD_FAILURE_PREFIX)
    )
    summary.provider_calls = bundle.provider_calls()
    return (1 if summary.hard_failures else 0), summary


def load_run_config(path: str | Path | None, overrides: dict) -> RunConfig:
    """Config file plus CLI overrides; any override set to None is ignored."""
    data: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError("run config file must hold a JSON object")
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    unknown = set(data) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
    if "manifest" not in data:
        raise ConfigError("a manifest path is required")
    if "out_dir" not in data:
        raise ConfigError("an output directory is required")
    return RunConfig(**data)
