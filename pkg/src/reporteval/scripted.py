"""Deterministic scripted judge for offline runs and tests.

The scripted judge reads verdict directives that fixture authors embed in the
material under evaluation, and answers with canonical JSON. Same prompt in,
same bytes out; no network, no model.

Marker grammar (anywhere in the judged content; ``@judge_id`` scopes a marker
to one judge and otherwise it applies to every judge):

    [[p-fail:3]]            presentation checklist item 3 scores 0
    [[c-fail:2@alpha]]      coverage item 2 scores 0, judge "alpha" only
    [[inconsistency:...]]   one factual/logical consistency issue
    [[uncited:...]]         one citation-association issue
    [[depth:4,3,5,2,4]]     depth scorecard (granularity,insight,critique,evidence,density)
    [[off-topic]]           page content: coarse relevance check fails
    [[unsupported:frag]]    page content: claims containing "frag" are unsupported

Select it with a judge endpoint of ``scripted:markers``.
"""

from __future__ import annotations

import json
import re

from .judges import JudgeConfig

_MARKER_RE = re.compile(r"\[\[([a-z-]+)(?::([^\]]*?))?(?:@([a-zA-Z0-9_-]+))?\]\]")
_CLAIM_LINE_RE = re.compile(r"^(\d+)\.\s+(.*)$", re.MULTILINE)
_ITEM_LINE_RE = re.compile(r"^(\d+)\.\s+", re.MULTILINE)

_DEPTH_DIMS = ("granularity", "insight", "critique", "evidence", "density")
_DEFAULT_DEPTH = (3.0, 3.0, 3.0, 3.0, 3.0)


def _markers(text: str, name: str, judge_id: str) -> list[str]:
    """Values of all ``name`` markers that apply to ``judge_id``, in order."""
    values = []
    for match in _MARKER_RE.finditer(text):
        if match.group(1) != name:
            continue
        scope = match.group(3)
        if scope is not None and scope != judge_id:
            continue
        values.append(match.group(2) or "")
    return values


def _between(text: str, start_anchor: str, end_anchor: str | None) -> str:
    start = text.find(start_anchor)
    if start == -1:
        return ""
    start += len(start_anchor)
    if end_anchor is None:
        return text[start:]
    end = text.find(end_anchor, start)
    return text[start:] if end == -1 else text[start:end]


class ScriptedJudgeClient:
    """Marker-driven judge; implements the JudgeClient protocol."""

    def complete(self, config: JudgeConfig, system_text: str, user_text: str) -> str:
        judge_id = config.judge_id
        if "presentation criteria with binary scoring" in system_text:
            return self._checklist(user_text, "p-fail", judge_id, "PRESENTATION CHECKLIST ITEMS TO EVALUATE:")
        if "checklist criteria derived from the original research query" in system_text:
            return self._checklist(user_text, "c-fail", judge_id, "CHECKLIST ITEMS TO EVALUATE:")
        if "Factual and Logical Consistency" in system_text:
            return self._issues(user_text, "inconsistency", judge_id)
        if "Citation Association" in system_text:
            return self._issues(user_text, "uncited", judge_id)
        if "greater depth of analysis" in system_text:
            return self._depth(user_text, judge_id)
        if "topically relevant" in system_text:
            return self._relevance(user_text, judge_id)
        if "sufficiently supports" in system_text:
            return self._support(user_text, judge_id)
        raise ValueError("scripted judge does not recognize this prompt")

    def _checklist(self, user_text: str, marker: str, judge_id: str, items_anchor: str) -> str:
        items_block = _between(user_text, items_anchor, "RESEARCH REPORT TO EVALUATE:")
        report = _between(user_text, "RESEARCH REPORT TO EVALUATE:", None)
        item_ids = [int(m.group(1)) for m in _ITEM_LINE_RE.finditer(items_block)]
        failing = set()
        for value in _markers(report, marker, judge_id):
            try:
                failing.add(int(value.strip()))
            except ValueError:
                continue
        evaluations = [
            {
                "item_id": item_id,
                "score": 0 if item_id in failing else 1,
                "justification": (
                    f"Scripted verdict: item {item_id} marked failing."
                    if item_id in failing
                    else f"Scripted verdict: item {item_id} satisfied."
                ),
            }
            for item_id in item_ids
        ]
        return json.dumps({"evaluations": evaluations}, sort_keys=True)

    def _issues(self, user_text: str, marker: str, judge_id: str) -> str:
        report = _between(user_text, "REPORT TO EVALUATE:", "Please evaluate this report")
        issues = _markers(report, marker, judge_id)
        total = len(issues)
        return json.dumps(
            {
                "specific_issues": issues,
                "total_issues": total,
                "score": max(1, 10 - total),
                "reasoning": f"Scripted verdict: {total} planted issue(s) found.",
            },
            sort_keys=True,
        )

    def _depth_card(self, report: str, judge_id: str) -> dict:
        values = _markers(report, "depth", judge_id)
        dims = _DEFAULT_DEPTH
        for value in values:
            parts = [p.strip() for p in value.split(",")]
            if len(parts) == len(_DEPTH_DIMS):
                try:
                    candidate = tuple(float(p) for p in parts)
                except ValueError:
                    continue
                if all(0 <= v <= 5 for v in candidate):
                    dims = candidate
                    break
        card = dict(zip(_DEPTH_DIMS, dims))
        card["total"] = sum(dims)
        return card

    def _depth(self, user_text: str, judge_id: str) -> str:
        report_a = _between(user_text, "REPORT A:", "REPORT B:")
        report_b = _between(user_text, "REPORT B:", None)
        card_a = self._depth_card(report_a, judge_id)
        card_b = self._depth_card(report_b, judge_id)
        diff = card_a["total"] - card_b["total"]
        if abs(diff) <= 1:
            winner = "tie"
        else:
            winner = "A" if diff > 0 else "B"
        return json.dumps(
            {
                "winner": winner,
                "scores": {"A": card_a, "B": card_b},
                "justification": "Scripted verdict from planted depth scorecards.",
                "major_flaws": {"A": [], "B": []},
            },
            sort_keys=True,
        )

    def _relevance(self, user_text: str, judge_id: str) -> str:
        page = _between(user_text, "PAGE OPENING", None)
        irrelevant = bool(_markers(page, "off-topic", judge_id))
        return json.dumps(
            {
                "relevant": not irrelevant,
                "reason": "Scripted verdict: page marked off-topic."
                if irrelevant
                else "Scripted verdict: page is on-topic.",
            },
            sort_keys=True,
        )

    def _support(self, user_text: str, judge_id: str) -> str:
        page = _between(user_text, "PAGE CONTENT:", "CLAIMS TO VERIFY:")
        claims_block = _between(user_text, "CLAIMS TO VERIFY:", None)
        fragments = _markers(page, "unsupported", judge_id)
        verdicts = []
        for match in _CLAIM_LINE_RE.finditer(claims_block):
            index = int(match.group(1))
            claim_text = match.group(2)
            unsupported = any(frag and frag in claim_text for frag in fragments)
            verdicts.append(
                {
                    "claim_index": index,
                    "supported": not unsupported,
                    "reason": "Scripted verdict: claim matched an unsupported fragment."
                    if unsupported
                    else "Scripted verdict: claim supported.",
                }
            )
        return json.dumps({"verdicts": verdicts}, sort_keys=True)
