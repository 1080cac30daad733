"""The judge-scored metrics and their protocols.

Five metrics run through LLM judges: presentation and coverage use the
binary checklist protocol, consistency and citation association use the
pointwise-additive protocol (count issues, map the count to a band score),
and analysis depth uses position-swapped pairwise comparison. The sixth
metric (citation accuracy) lives in :mod:`reporteval.citations`.

The authoritative pointwise score is the band table applied to the issue
count; the judge's self-reported 1-10 score is recorded but never used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .judges import JudgeGateway, JudgeResponse, ensemble_mean, render_prompt
from .prompts import (
    ASSOCIATION_PROMPT,
    CONSISTENCY_PROMPT,
    COVERAGE_PROMPT,
    DEPTH_PROMPT,
    PRESENTATION_PROMPT,
    PRESENTATION_CHECKLIST,
    format_checklist_section,
)
from .tasks import ResolvedTask

METRIC_IDS = ("presentation", "consistency", "coverage", "depth", "association", "accuracy")
CHECKLIST_METRICS = ("presentation", "coverage")
POINTWISE_METRICS = ("consistency", "association")

DEPTH_DIMENSIONS = ("granularity", "insight", "critique", "evidence", "density")


@dataclass(frozen=True)
class RubricBand:
    score: int
    max_count: int | None  # inclusive upper issue count; None = open terminal band
    description: str = ""


@dataclass(frozen=True)
class RubricBandTable:
    """Maps an issue count to a 0-100 score via ordered bands.

    Bands partition the nonnegative integers; scores decrease strictly; the
    last band is open-ended.
    """

    bands: tuple[RubricBand, ...]
    count_label: str = "Issue Count"

    def __post_init__(self) -> None:
        if len(self.bands) < 1 or self.bands[-1].max_count is not None:
            raise ValueError("band table must end with one open-ended band")
        previous_bound = -1
        previous_score: float | None = None
        for band in self.bands:
            if previous_score is not None and band.score >= previous_score:
                raise ValueError("band scores must be strictly decreasing")
            previous_score = band.score
            if band.max_count is not None:
                if band.max_count <= previous_bound:
                    raise ValueError("band bounds must be strictly increasing")
                previous_bound = band.max_count
        if self.bands[0].max_count is None and len(self.bands) > 1:
            raise ValueError("only the terminal band may be open-ended")

    def score_for(self, n: int) -> int:
        if n < 0:
            raise ValueError("issue count must be nonnegative")
        for band in self.bands:
            if band.max_count is None or n <= band.max_count:
                return band.score
        raise AssertionError("unreachable: terminal band is open-ended")

    def band_ranges(self) -> list[tuple[str, RubricBand]]:
        ranges = []
        lower = 0
        for band in self.bands:
            if band.max_count is None:
                label = f"{lower}+"
            elif band.max_count == lower:
                label = str(lower)
            else:
                label = f"{lower}-{band.max_count}"
            ranges.append((label, band))
            lower = (band.max_count or 0) + 1
        return ranges

    def to_prompt_text(self) -> str:
        lines = [f"| Score | {self.count_label} | Description |", "| --- | --- | --- |"]
        for label, band in self.band_ranges():
            lines.append(f"| {band.score} | {label} | {band.description} |")
        return "\n".join(lines)

    @classmethod
    def from_pairs(
        cls, pairs: list[tuple[int | None, int]], count_label: str = "Issue Count"
    ) -> RubricBandTable:
        return cls(
            bands=tuple(RubricBand(score=score, max_count=bound) for bound, score in pairs),
            count_label=count_label,
        )


_DEFAULT_BOUNDS = (0, 2, 4, 6, 8, 10, 12, 14, 17, None)
_DEFAULT_SCORES = (100, 90, 80, 70, 60, 50, 40, 30, 20, 10)

CONSISTENCY_BAND_TABLE = RubricBandTable(
    bands=tuple(
        RubricBand(score=s, max_count=b, description=d)
        for s, b, d in zip(
            _DEFAULT_SCORES,
            _DEFAULT_BOUNDS,
            (
                "Perfect - No contradictions or inconsistencies detected",
                "Excellent - Very minor inconsistencies",
                "Very Good - Few minor inconsistencies",
                "Good - Some inconsistencies",
                "Above Average - Several inconsistencies",
                "Average - Multiple inconsistencies",
                "Below Average - Many inconsistencies",
                "Poor - Extensive inconsistencies",
                "Very Poor - Pervasive inconsistencies",
                "Unacceptable - Overwhelming inconsistencies",
            ),
        )
    ),
    count_label="Issue Count",
)

ASSOCIATION_BAND_TABLE = RubricBandTable(
    bands=tuple(
        RubricBand(score=s, max_count=b, description=d)
        for s, b, d in zip(
            _DEFAULT_SCORES,
            _DEFAULT_BOUNDS,
            (
                "Perfect - All major claims/facts have citations; fully traceable",
                "Excellent - Very few claims lack citations; minimal impact",
                "Good - Few claims lack citations; minor omissions",
                "OK - Some claims lack citations",
                "Above Average - Several claims lack citations",
                "Average - Many claims lack citations; significant association issues",
                "Below Average - Most claims lack citations",
                "Poor - Extensive uncited claims; report poorly supported",
                "Very Poor - Overwhelming lack of citations",
                "Unacceptable - Report largely untraceable",
            ),
        )
    ),
    count_label="Uncited Claims",
)

DEFAULT_BAND_TABLES = {
    "consistency": CONSISTENCY_BAND_TABLE,
    "association": ASSOCIATION_BAND_TABLE,
}


def map_issue_count_to_score(n: int, table: RubricBandTable) -> int:
    """Score of the band containing the issue count ``n``."""
    return table.score_for(n)


@dataclass(frozen=True)
class ChecklistVerdict:
    item_id: int
    passed: int  # 0 or 1
    justification: str


@dataclass(frozen=True)
class IssueReport:
    specific_issues: tuple[str, ...]
    total_issues: int
    judge_reported_score: int | None
    reasoning: str


@dataclass(frozen=True)
class DepthScoreCard:
    granularity: float
    insight: float
    critique: float
    evidence: float
    density: float

    @property
    def total(self) -> float:
        return self.granularity + self.insight + self.critique + self.evidence + self.density

    def as_dict(self) -> dict:
        return {dim: getattr(self, dim) for dim in DEPTH_DIMENSIONS} | {"total": self.total}


@dataclass(frozen=True)
class PairOutcome:
    """Result of one position-swapped depth comparison (A = evaluated system)."""

    verdict: str  # "A" | "B" | "tie"
    total_a: float
    total_b: float
    calls: tuple[dict, ...]  # per judge/order transcript records
    warnings: tuple[str, ...] = ()


@dataclass
class MetricResult:
    """Normalized 0-100 score with provenance down to the raw judge verdicts."""

    metric_id: str
    score: float | None
    per_judge_scores: dict[str, float] = field(default_factory=dict)
    detail: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def available(self) -> bool:
        return self.score is not None

    def to_record(self) -> dict:
        return {
            "metric": self.metric_id,
            "score": self.score,
            "per_judge_scores": self.per_judge_scores,
            "detail": self.detail,
            "warnings": self.warnings,
        }


def _response_record(judge_id: str, response: JudgeResponse) -> dict:
    return {
        "judge": judge_id,
        "raw_text": response.raw_text,
        "parsed": response.parsed,
        "attempt_count": response.attempt_count,
        "failure": response.failure,
    }


def presentation_checklist_items() -> list[tuple[int, str]]:
    return list(enumerate(PRESENTATION_CHECKLIST, start=1))


def score_checklist_metric(
    metric_id: str,
    resolved_task: ResolvedTask,
    report_text: str,
    checklist_items: list[tuple[int, str]],
    gateway: JudgeGateway,
) -> MetricResult:
    """Binary checklist protocol: judge score = 100 * passed / items."""
    if metric_id not in CHECKLIST_METRICS:
        raise ValueError(f"{metric_id!r} is not a checklist metric")
    if not checklist_items:
        raise ValueError("checklist must be nonempty")
    template = PRESENTATION_PROMPT if metric_id == "presentation" else COVERAGE_PROMPT
    prompt = render_prompt(
        template,
        {
            "query": resolved_task.query,
            "checklist_section": format_checklist_section(checklist_items),
            "report_content": report_text,
        },
    )
    result = MetricResult(metric_id=metric_id, score=None)
    item_ids = [item_id for item_id, _ in checklist_items]
    responses = []
    for judge_id in gateway.judge_ids:
        response = gateway.query(judge_id, prompt, "checklist")
        responses.append(_response_record(judge_id, response))
        if not response.ok:
            result.warnings.append(f"judge {judge_id} failed: {response.failure}")
            continue
        verdicts = {v["item_id"]: v for v in response.parsed}
        passes = 0
        for item_id in item_ids:
            verdict = verdicts.get(item_id)
            if verdict is None:
                result.warnings.append(
                    f"judge {judge_id} returned no verdict for item {item_id}; counted as fail"
                )
                continue
            passes += verdict["pass"]
        result.per_judge_scores[judge_id] = 100.0 * passes / len(item_ids)
    result.detail = {"responses": responses, "items": len(item_ids)}
    if result.per_judge_scores:
        if len(result.per_judge_scores) < len(gateway.judge_ids):
            result.warnings.append("degraded to surviving judge(s)")
        result.score = ensemble_mean(list(result.per_judge_scores.values()))
    else:
        result.warnings.append("all judges failed; metric unavailable")
    return result


def _repair_issue_report(parsed: dict, judge_id: str, warnings: list[str]) -> IssueReport:
    issues = tuple(parsed["specific_issues"])
    total = parsed["total_issues"]
    if total != len(issues):
        warnings.append(
            f"judge {judge_id} reported total_issues={total} but listed {len(issues)}; "
            "trusting the list length"
        )
        total = len(issues)
    raw_score = parsed.get("score")
    return IssueReport(
        specific_issues=issues,
        total_issues=total,
        judge_reported_score=int(raw_score) if isinstance(raw_score, (int, float)) else None,
        reasoning=parsed.get("reasoning", ""),
    )


def score_pointwise_metric(
    metric_id: str,
    resolved_task: ResolvedTask,
    report_text: str,
    gateway: JudgeGateway,
    band_table: RubricBandTable | None = None,
) -> MetricResult:
    """Pointwise-additive protocol: issue count mapped through the band table."""
    if metric_id not in POINTWISE_METRICS:
        raise ValueError(f"{metric_id!r} is not a pointwise metric")
    table = band_table or DEFAULT_BAND_TABLES[metric_id]
    template = CONSISTENCY_PROMPT if metric_id == "consistency" else ASSOCIATION_PROMPT
    prompt = render_prompt(
        template,
        {
            "task": resolved_task.query,
            "report": report_text,
            "score_rubrics_table": table.to_prompt_text(),
        },
    )
    result = MetricResult(metric_id=metric_id, score=None)
    responses = []
    issue_reports: dict[str, IssueReport] = {}
    for judge_id in gateway.judge_ids:
        response = gateway.query(judge_id, prompt, "issue_report")
        responses.append(_response_record(judge_id, response))
        if not response.ok:
            result.warnings.append(f"judge {judge_id} failed: {response.failure}")
            continue
        report = _repair_issue_report(response.parsed, judge_id, result.warnings)
        issue_reports[judge_id] = report
        result.per_judge_scores[judge_id] = float(map_issue_count_to_score(report.total_issues, table))
    result.detail = {
        "responses": responses,
        "issue_counts": {j: r.total_issues for j, r in issue_reports.items()},
    }
    if result.per_judge_scores:
        if len(result.per_judge_scores) < len(gateway.judge_ids):
            result.warnings.append("degraded to surviving judge(s)")
        result.score = ensemble_mean(list(result.per_judge_scores.values()))
    else:
        result.warnings.append("all judges failed; metric unavailable")
    return result


def _card_from_parsed(parsed_card: dict) -> DepthScoreCard:
    return DepthScoreCard(**{dim: parsed_card[dim] for dim in DEPTH_DIMENSIONS})


def score_depth_pair(
    resolved_task: ResolvedTask,
    report_a_text: str,
    report_b_text: str,
    gateway: JudgeGateway,
) -> PairOutcome | None:
    """Pairwise depth with position-swap averaging.

    Every judge scores the pair twice with presentation order reversed; each
    report's total is the mean over all judge/order calls; a difference of at
    most one point is a tie. Returns None when every call failed.
    """
    warnings: list[str] = []
    calls: list[dict] = []
    totals_a: list[float] = []
    totals_b: list[float] = []
    for order in ("original", "swapped"):
        first, second = (
            (report_a_text, report_b_text) if order == "original" else (report_b_text, report_a_text)
        )
        prompt = render_prompt(
            DEPTH_PROMPT,
            {
                "query": resolved_task.query,
                "report_a_content": first,
                "report_b_content": second,
            },
        )
        for judge_id in gateway.judge_ids:
            response = gateway.query(judge_id, prompt, "depth_pair")
            record = {"judge": judge_id, "order": order} | _response_record(judge_id, response)
            if not response.ok:
                warnings.append(f"judge {judge_id} order {order} failed: {response.failure}")
                calls.append(record)
                continue
            card_first = _card_from_parsed(response.parsed["scores"]["A"])
            card_second = _card_from_parsed(response.parsed["scores"]["B"])
            if order == "original":
                card_a, card_b = card_first, card_second
            else:
                card_a, card_b = card_second, card_first
            totals_a.append(card_a.total)
            totals_b.append(card_b.total)
            record["scorecards"] = {"a": card_a.as_dict(), "b": card_b.as_dict()}
            calls.append(record)
    if not totals_a:
        return None
    total_a = ensemble_mean(totals_a)
    total_b = ensemble_mean(totals_b)
    if abs(total_a - total_b) <= 1.0:
        verdict = "tie"
    elif total_a > total_b:
        verdict = "A"
    else:
        verdict = "B"
    return PairOutcome(
        verdict=verdict,
        total_a=total_a,
        total_b=total_b,
        calls=tuple(calls),
        warnings=tuple(warnings),
    )


def compute_win_rate(outcomes: list[PairOutcome]) -> float | None:
    """Wins over non-tie comparisons; None when no comparison is decisive."""
    wins = sum(1 for o in outcomes if o.verdict == "A")
    losses = sum(1 for o in outcomes if o.verdict == "B")
    if wins + losses == 0:
        return None
    return wins / (wins + losses)
