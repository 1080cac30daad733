"""Cross-module integration checks beyond the end-to-end goldens."""

from __future__ import annotations

import datetime as dt
import json
import threading
import time

from hypothesis import given, settings, strategies as st

from reporteval.judges import JudgeConfig, JudgeGateway
from reporteval.metrics import presentation_checklist_items, score_checklist_metric
from reporteval.parsing import parse_report
from reporteval.runner import RunConfig, execute, plan_run
from reporteval.scripted import ScriptedJudgeClient
from reporteval.tasks import BenchmarkTask, ChecklistItem, resolve_date

RESOLVED = resolve_date(
    BenchmarkTask(
        id="q",
        query_template="Size the market.",
        domain="",
        category="",
        coverage_checklist=(ChecklistItem(1, "Sized?"),),
    ),
    dt.date(2025, 9, 15),
)


def test_http_judges_reproduce_scripted_scores(mock_server):
    """The HTTP route and the in-process scripted judge agree bit for bit."""
    scripted = ScriptedJudgeClient()

    def handler(payload):
        system = payload["messages"][0]["content"]
        user = payload["messages"][1]["content"]
        config = JudgeConfig(judge_id=payload["model"], endpoint="scripted:markers")
        return scripted.complete(config, system, user)

    mock_server.judge_handler = handler
    http_gateway = JudgeGateway(
        [
            JudgeConfig(judge_id="alpha", endpoint=mock_server.base_url, model_name="alpha"),
            JudgeConfig(judge_id="beta", endpoint=mock_server.base_url, model_name="beta"),
        ]
    )
    local_gateway = JudgeGateway(
        [
            JudgeConfig(judge_id="alpha", endpoint="scripted:markers"),
            JudgeConfig(judge_id="beta", endpoint="scripted:markers"),
        ]
    )
    report = "body [[p-fail:2@alpha]][[p-fail:7]]"
    items = presentation_checklist_items()
    via_http = score_checklist_metric("presentation", RESOLVED, report, items, http_gateway)
    local = score_checklist_metric("presentation", RESOLVED, report, items, local_gateway)
    assert via_http.score == local.score
    assert via_http.per_judge_scores == local.per_judge_scores


class _SlowCountingClient:
    def __init__(self):
        self.active = 0
        self.peak = 0
        self._lock = threading.Lock()

    def complete(self, config, system_text, user_text):
        with self._lock:
            self.active += 1
            self.peak = max(self.peak, self.active)
        time.sleep(0.02)
        with self._lock:
            self.active -= 1
        return '{"relevant": true, "reason": "ok"}'


def test_gateway_enforces_per_judge_concurrency_cap():
    client = _SlowCountingClient()
    config = JudgeConfig(judge_id="j", endpoint="scripted:markers", max_concurrency=2)
    gateway = JudgeGateway([config], clients={"j": client})
    threads = [
        threading.Thread(target=gateway.query, args=("j", ("s", f"u{i}"), "relevance"))
        for i in range(12)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert client.peak <= 2


@settings(max_examples=60, deadline=None)
@given(
    parts=st.lists(
        st.one_of(
            st.builds(lambda n: f"## Heading {n}", st.integers(0, 9)),
            st.builds(
                lambda words, cite: " ".join(words).capitalize() + (f" [{cite}]." if cite else "."),
                st.lists(st.sampled_from(["alpha", "beta", "gamma", "delta"]), min_size=1, max_size=6),
                st.one_of(st.none(), st.integers(1, 9)),
            ),
            st.just("| a | b |\n| --- | --- |\n| 1 | 2 |"),
            st.just("- bullet point one. more text."),
            st.just("Link to [site](https://example.com/page) here."),
            st.just("## References"),
            st.builds(lambda n: f"[{n}] Source {n} https://example.org/s{n}", st.integers(1, 9)),
        ),
        max_size=12,
    )
)
def test_parser_invariants_on_structured_documents(parts):
    text = "\n\n".join(parts)
    report = parse_report(text)
    assert report == parse_report(text)  # deterministic
    for citation in report.inline_citations:
        assert 0 <= citation.span[0] < citation.span[1] <= len(text)
    spans = sorted(c.span for c in report.claim_units)
    for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
        assert e1 <= s2  # claims never overlap
    for section in report.sections:
        assert report.span_text(section.title_span) == section.title
    for table in report.tables:
        assert "|" in report.span_text(table.span)


def test_cli_eval_date_override_flows_to_manifest(e2e_env):
    config = RunConfig.load(
        e2e_env.config_path,
        url_rewrites=e2e_env.rewrites,
        eval_date="2026-01-02",
        metrics=("presentation",),
    )
    result = execute(plan_run(config), config)
    manifest = json.loads((result.results_dir / "manifest").read_text())
    assert manifest["eval_date"] == "2026-01-02"


def test_leaderboard_provenance_points_at_real_transcripts(e2e_env):
    config = RunConfig.load(
        e2e_env.config_path, url_rewrites=e2e_env.rewrites, metrics=("coverage",)
    )
    result = execute(plan_run(config), config)
    leaderboard = json.loads((result.results_dir / "leaderboard.json").read_text())
    for row in leaderboard["leaderboard"]:
        for tasks in row["provenance"].values():
            for cell in tasks.values():
                transcript = result.results_dir / cell["transcript"]
                assert transcript.exists()
                record = json.loads(transcript.read_text())
                assert record["payload"]["score"] == cell["score"]
