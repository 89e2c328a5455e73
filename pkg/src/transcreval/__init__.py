"""Evaluation metrics for image transcreation systems.

Three score families (object-based overlap of culture-specific items,
embedding cosine metrics, VLM judges) plus segment-level rank correlation
against human ratings.
"""

from .correlate import (
    ORIENT_CHANGE,
    ORIENT_SIMILARITY,
    SKIP_CONSTANT,
    SKIP_NONPARSABLE,
    CorrelationReport,
    ReportRow,
    SegmentTuple,
    aggregate,
    build_tuples,
    kendall_tau_b,
    segment_correlation,
)
from .csi import (
    CsiConfig,
    CsiOverlapScore,
    ObjectList,
    ReplacementMap,
    csi_overlap,
    detect_objects,
    lexical_match_names,
    match_replacements,
    normalize_entity,
    propose_replacements,
)
from .embed_metrics import (
    EmbedMetricScore,
    cosine,
    cultural_relevance_shift,
    semantic_equivalence,
    visual_similarity,
)
from .errors import (
    AuthError,
    ConfigError,
    DecodeError,
    DimensionMismatch,
    LengthMismatch,
    MissingField,
    MissingRatings,
    ParseError,
    ProviderError,
    RateLimitExhausted,
    SchemaError,
    TooFew,
    TranscrevalError,
    TransientProviderError,
)
from .cli import cmd_correlate, cmd_export_plots, main
from .jsonextract import extract_json_object
from .judge import (
    DUAL_SCORE,
    SINGLE_SCORE,
    JudgePromptSpec,
    VlmJudgeScore,
    judge,
    judge_specs,
    parse_judge_output,
)
from .manifest import (
    DIMENSIONS,
    HumanRating,
    Manifest,
    ManifestStats,
    Segment,
    SystemOutput,
    load_manifest,
    manifest_stats,
    save_manifest,
)
from .records import (
    PARSE_FAILED,
    PARSE_OK,
    PARSE_REPAIRED,
    ProvenanceStore,
    ScoreRecord,
    read_scores,
    write_scores,
)
from .runner import RunConfig, RunSummary, cmd_evaluate, expand_metrics

__version__ = "0.1.0"

__all__ = [
    "AuthError",
    "ConfigError",
    "CorrelationReport",
    "CsiConfig",
    "CsiOverlapScore",
    "DIMENSIONS",
    "DUAL_SCORE",
    "DecodeError",
    "DimensionMismatch",
    "EmbedMetricScore",
    "HumanRating",
    "JudgePromptSpec",
    "LengthMismatch",
    "Manifest",
    "ManifestStats",
    "MissingField",
    "MissingRatings",
    "ORIENT_CHANGE",
    "ORIENT_SIMILARITY",
    "ObjectList",
    "PARSE_FAILED",
    "PARSE_OK",
    "PARSE_REPAIRED",
    "ParseError",
    "ProvenanceStore",
    "ProviderError",
    "RateLimitExhausted",
    "ReplacementMap",
    "ReportRow",
    "RunConfig",
    "RunSummary",
    "SINGLE_SCORE",
    "SKIP_CONSTANT",
    "SKIP_NONPARSABLE",
    "SchemaError",
    "ScoreRecord",
    "Segment",
    "SegmentTuple",
    "SystemOutput",
    "TooFew",
    "TranscrevalError",
    "TransientProviderError",
    "VlmJudgeScore",
    "aggregate",
    "build_tuples",
    "cmd_correlate",
    "cmd_evaluate",
    "cmd_export_plots",
    "cosine",
    "csi_overlap",
    "cultural_relevance_shift",
    "detect_objects",
    "expand_metrics",
    "extract_json_object",
    "judge",
    "judge_specs",
    "kendall_tau_b",
    "lexical_match_names",
    "load_manifest",
    "main",
    "manifest_stats",
    "match_replacements",
    "normalize_entity",
    "parse_judge_output",
    "propose_replacements",
    "read_scores",
    "save_manifest",
    "segment_correlation",
    "semantic_equivalence",
    "visual_similarity",
    "write_scores",
]
