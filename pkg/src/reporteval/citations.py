"""Citation accuracy via a branching verification tree.

For every claim group (all claims citing one normalized URL):

  1. fetch the URL once; an inaccessible link is one E1, counted per URL;
  2. screen the opening portion of the page for topical relevance; a clearly
     off-topic page is one E2, counted per URL, and ends the branch;
  3. ask the judge whether the full page content supports each claim; every
     unsupported (claim, source) pair is one E3.

E1/E2 are URL-level, E3 is statement-level: a claim citing several
non-supporting sources contributes one E3 per such source. Numbered
citations that resolve to no usable reference entry count as E1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fetching import Fetcher, FetchResult
from .judges import JudgeGateway, render_prompt
from .parsing import ClaimUnit, ParsedReport, UnresolvedKey, extract_claim_citation_pairs
from .prompts import RELEVANCE_PROMPT, SUPPORT_PROMPT
from .tasks import ResolvedTask

E1 = "E1"
E2 = "E2"
E3 = "E3"


@dataclass(frozen=True)
class ClaimGroup:
    url: str
    claims: tuple[ClaimUnit, ...]


@dataclass(frozen=True)
class CitationError:
    kind: str  # E1 | E2 | E3
    url: str
    evidence: str
    claim_text: str | None = None  # present iff kind == E3

    def __post_init__(self) -> None:
        if self.kind == E3 and self.claim_text is None:
            raise ValueError("E3 errors must carry the unsupported claim")
        if self.kind in (E1, E2) and self.claim_text is not None:
            raise ValueError(f"{self.kind} errors are URL-level and carry no claim")

    def to_record(self) -> dict:
        record = {"kind": self.kind, "url": self.url, "evidence": self.evidence}
        if self.claim_text is not None:
            record["claim"] = self.claim_text
        return record


@dataclass
class CitationAuditSummary:
    errors: tuple[CitationError, ...]
    distinct_urls: int
    unknown_support_claims: int = 0
    unverifiable_urls: int = 0
    cache_hits: int = 0  # volatile; excluded from the persisted record
    warnings: list[str] = field(default_factory=list)

    @property
    def e1(self) -> int:
        return sum(1 for e in self.errors if e.kind == E1)

    @property
    def e2(self) -> int:
        return sum(1 for e in self.errors if e.kind == E2)

    @property
    def e3(self) -> int:
        return sum(1 for e in self.errors if e.kind == E3)

    @property
    def total(self) -> int:
        return len(self.errors)

    def to_record(self) -> dict:
        return {
            "e1": self.e1,
            "e2": self.e2,
            "e3": self.e3,
            "total": self.total,
            "errors": [e.to_record() for e in self.errors],
            "distinct_urls": self.distinct_urls,
            "unknown_support_claims": self.unknown_support_claims,
            "unverifiable_urls": self.unverifiable_urls,
            "warnings": self.warnings,
        }


def group_claims_by_url(
    pairs: list[tuple[ClaimUnit, list[str]]],
) -> list[ClaimGroup]:
    """One group per distinct URL, in first-appearance order.

    A claim citing k distinct URLs appears in k groups, matching the
    per-source counting of unsupported claims.
    """
    order: list[str] = []
    members: dict[str, list[ClaimUnit]] = {}
    for claim, urls in pairs:
        for url in urls:
            if url not in members:
                members[url] = []
                order.append(url)
            members[url].append(claim)
    return [ClaimGroup(url=url, claims=tuple(members[url])) for url in order]


def classify_accessibility(result: FetchResult) -> bool:
    return result.ok


def _claim_text(report: ParsedReport, claim: ClaimUnit) -> str:
    return " ".join(report.span_text(claim.span).split())


def _format_claims(report: ParsedReport, claims: tuple[ClaimUnit, ...]) -> str:
    return "\n".join(
        f"{index}. {_claim_text(report, claim)}" for index, claim in enumerate(claims, start=1)
    )


def coarse_relevance(
    group: ClaimGroup,
    fetch_result: FetchResult,
    report: ParsedReport,
    topic: str,
    gateway: JudgeGateway,
    judge_id: str,
    warnings: list[str],
) -> tuple[bool, str]:
    """Cheap topical screen over the page opening; fails open on judge failure."""
    page_prefix = fetch_result.content_prefix
    if fetch_result.title:
        page_prefix = f"{fetch_result.title}\n{page_prefix}"
    prompt = render_prompt(
        RELEVANCE_PROMPT,
        {
            "topic": topic,
            "claims": _format_claims(report, group.claims),
            "url": group.url,
            "page_prefix": page_prefix,
        },
    )
    response = gateway.query(judge_id, prompt, "relevance")
    if not response.ok:
        warnings.append(
            f"relevance check failed for {group.url} ({response.failure}); treating as relevant"
        )
        return True, "judge failure: treated as relevant"
    return response.parsed["relevant"], response.parsed["reason"]


def verify_support(
    group: ClaimGroup,
    fetch_result: FetchResult,
    report: ParsedReport,
    topic: str,
    gateway: JudgeGateway,
    judge_id: str,
    warnings: list[str],
) -> dict[int, tuple[bool | None, str]]:
    """Per-claim support verdicts from a single prompt over the full page text.

    Returns {claim position (1-based) -> (supported | None for unknown, reason)}.
    """
    prompt = render_prompt(
        SUPPORT_PROMPT,
        {
            "topic": topic,
            "url": group.url,
            "page_text": fetch_result.content_text,
            "claims": _format_claims(report, group.claims),
        },
    )
    response = gateway.query(judge_id, prompt, "support")
    indices = range(1, len(group.claims) + 1)
    if not response.ok:
        warnings.append(
            f"support check failed for {group.url} ({response.failure}); claims marked unknown"
        )
        return {i: (None, "judge failure") for i in indices}
    verdicts = {v["claim_index"]: (v["supported"], v["reason"]) for v in response.parsed["verdicts"]}
    resolved: dict[int, tuple[bool | None, str]] = {}
    for index in indices:
        if index in verdicts:
            resolved[index] = verdicts[index]
        else:
            warnings.append(f"no support verdict for claim {index} of {group.url}; marked unknown")
            resolved[index] = (None, "missing verdict")
    return resolved


def audit_report(
    resolved_task: ResolvedTask,
    report: ParsedReport,
    gateway: JudgeGateway,
    fetcher: Fetcher,
    judge_id: str | None = None,
) -> CitationAuditSummary:
    """Run the full tree over every claim group of a parsed report.

    Relevance and support verdicts come from one judge (the first in the
    roster unless ``judge_id`` says otherwise); error counts stay integers.
    """
    judge = judge_id or gateway.judge_ids[0]
    topic = resolved_task.query
    warnings: list[str] = []
    errors: list[CitationError] = []

    pairs = extract_claim_citation_pairs(report)
    url_pairs: list[tuple[ClaimUnit, list[str]]] = []
    unresolved_seen: list[int] = []
    for claim, targets in pairs:
        urls = []
        for target in targets:
            if isinstance(target, UnresolvedKey):
                if target.number not in unresolved_seen:
                    unresolved_seen.append(target.number)
                continue
            urls.append(target)
        if urls:
            url_pairs.append((claim, urls))
    for number in unresolved_seen:
        errors.append(
            CitationError(
                kind=E1,
                url=f"[{number}]",
                evidence=f"numbered citation [{number}] has no usable reference entry",
            )
        )

    groups = group_claims_by_url(url_pairs)
    unknown_support = 0
    unverifiable = 0
    cache_hits_before = fetcher.cache_hits
    for group in groups:
        result = fetcher.fetch(group.url)
        if result.unverifiable:
            unverifiable += 1
            warnings.append(f"{group.url}: marked unverifiable ({result.detail}); excluded")
            continue
        if not classify_accessibility(result):
            errors.append(
                CitationError(kind=E1, url=group.url, evidence=f"{result.status}: {result.detail}")
            )
            continue
        relevant, reason = coarse_relevance(
            group, result, report, topic, gateway, judge, warnings
        )
        if not relevant:
            errors.append(CitationError(kind=E2, url=group.url, evidence=reason))
            continue
        verdicts = verify_support(group, result, report, topic, gateway, judge, warnings)
        for index, claim in enumerate(group.claims, start=1):
            supported, reason = verdicts[index]
            if supported is None:
                unknown_support += 1
            elif not supported:
                errors.append(
                    CitationError(
                        kind=E3,
                        url=group.url,
                        evidence=reason,
                        claim_text=_claim_text(report, claim),
                    )
                )

    return CitationAuditSummary(
        errors=tuple(errors),
        distinct_urls=len(groups),
        unknown_support_claims=unknown_support,
        unverifiable_urls=unverifiable,
        cache_hits=fetcher.cache_hits - cache_hits_before,
        warnings=warnings,
    )
