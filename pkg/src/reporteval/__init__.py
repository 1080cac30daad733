"""Evaluation harness for citation-grounded long-form research reports."""

from .aggregate import RunRecord, aggregate, render
from .citations import CitationAuditSummary, CitationError, audit_report, group_claims_by_url
from .fetching import Fetcher, FetchPolicy, FetchResult
from .judges import JudgeConfig, JudgeGateway, PromptTemplate, ensemble_mean, render_prompt
from .lint import StructuralAuditReport, StructuralViolation, audit_structure
from .metrics import (
    DepthScoreCard,
    MetricResult,
    PairOutcome,
    RubricBandTable,
    compute_win_rate,
    map_issue_count_to_score,
    score_checklist_metric,
    score_depth_pair,
    score_pointwise_metric,
)
from .parsing import ParsedReport, extract_claim_citation_pairs, normalize_url, parse_report
from .runner import RunConfig, execute, plan_run
from .tasks import BenchmarkTask, ChecklistItem, ResolvedTask, load_tasks, resolve_date

__version__ = "0.1.0"

__all__ = [
    "BenchmarkTask",
    "ChecklistItem",
    "CitationAuditSummary",
    "CitationError",
    "DepthScoreCard",
    "Fetcher",
    "FetchPolicy",
    "FetchResult",
    "JudgeConfig",
    "JudgeGateway",
    "MetricResult",
    "PairOutcome",
    "ParsedReport",
    "PromptTemplate",
    "ResolvedTask",
    "RubricBandTable",
    "RunConfig",
    "RunRecord",
    "StructuralAuditReport",
    "StructuralViolation",
    "aggregate",
    "audit_report",
    "audit_structure",
    "compute_win_rate",
    "ensemble_mean",
    "execute",
    "extract_claim_citation_pairs",
    "group_claims_by_url",
    "load_tasks",
    "map_issue_count_to_score",
    "normalize_url",
    "parse_report",
    "plan_run",
    "render",
    "render_prompt",
    "resolve_date",
    "score_checklist_metric",
    "score_depth_pair",
    "score_pointwise_metric",
]
