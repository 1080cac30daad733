from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from reporteval.judges import (
    HttpJudgeClient,
    JudgeConfig,
    JudgeGateway,
    PromptTemplate,
    RenderError,
    SchemaError,
    ensemble_mean,
    extract_json,
    render_prompt,
    validate_response,
)
from reporteval.prompts import COVERAGE_PROMPT, TEMPLATES


def test_render_prompt_binds_all_placeholders():
    system, user = render_prompt(
        COVERAGE_PROMPT,
        {
            "query": "How large is the market?",
            "checklist_section": "1. Does it say?",
            "report_content": "The market is large.",
        },
    )
    assert "No Credit for Placeholders" in system
    assert "How large is the market?" in user
    assert "{query}" not in user and "{report_content}" not in user


def test_render_prompt_without_placeholders_is_identity():
    template = PromptTemplate(metric_id="t", system_text="plain system", user_text="plain user")
    assert render_prompt(template, {}) == ("plain system", "plain user")


def test_render_prompt_missing_binding_names_placeholder():
    template = PromptTemplate(metric_id="t", system_text="", user_text="{report}")
    with pytest.raises(RenderError, match="unbound placeholder: report"):
        render_prompt(template, {})


def test_render_does_not_rescan_substituted_values():
    template = PromptTemplate(metric_id="t", system_text="", user_text="{report}")
    _, user = render_prompt(template, {"report": "literal {query} stays"})
    assert user == "literal {query} stays"


def test_placeholder_uniqueness_enforced():
    template = PromptTemplate(metric_id="t", system_text="{report}", user_text="{report}")
    with pytest.raises(ValueError, match="exactly once"):
        template.require_placeholders(("report",))


def test_extract_json_from_fenced_block():
    raw = 'Sure!\n```json\n{"total_issues": 2, "specific_issues": ["a", "b"]}\n```\nDone.'
    assert extract_json(raw) == {"total_issues": 2, "specific_issues": ["a", "b"]}


def test_extract_json_from_prose_prefix():
    raw = 'After careful review I conclude: {"relevant": true, "reason": "on-topic"} — regards.'
    assert extract_json(raw) == {"relevant": True, "reason": "on-topic"}


def test_extract_json_handles_nested_braces_and_strings():
    payload = {"a": {"b": "quote \" and {brace}"}, "c": [1, 2]}
    raw = "noise " + json.dumps(payload) + " trailing"
    assert extract_json(raw) == payload


def test_extract_json_failure():
    with pytest.raises(ValueError):
        extract_json("no json here at all")


def test_validate_checklist_normalizes_variants():
    parsed = validate_response(
        "checklist",
        {"evaluations": [{"id": 1, "pass": True, "reasoning": "ok"}, {"item_id": 2, "score": 0}]},
    )
    assert parsed[0] == {"item_id": 1, "pass": 1, "justification": "ok"}
    assert parsed[1]["pass"] == 0


def test_validate_checklist_rejects_non_binary():
    with pytest.raises(SchemaError):
        validate_response("checklist", {"evaluations": [{"item_id": 1, "score": 0.5}]})


def test_validate_issue_report_requires_fields():
    with pytest.raises(SchemaError):
        validate_response("issue_report", {"specific_issues": "not-a-list", "total_issues": 1})


def test_validate_depth_pair_rejects_out_of_range():
    scores = {
        "A": {"granularity": 9, "insight": 1, "critique": 1, "evidence": 1, "density": 1},
        "B": {"granularity": 1, "insight": 1, "critique": 1, "evidence": 1, "density": 1},
    }
    with pytest.raises(SchemaError):
        validate_response("depth_pair", {"winner": "A", "scores": scores})


class _StubClient:
    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = 0

    def complete(self, config, system_text, user_text):
        self.calls += 1
        reply = self.replies[min(self.calls - 1, len(self.replies) - 1)]
        if isinstance(reply, Exception):
            raise reply
        return reply


def _gateway(client, max_retries=2, audit_dir=None):
    config = JudgeConfig(judge_id="j", endpoint="scripted:markers", max_retries=max_retries)
    return JudgeGateway([config], audit_dir=audit_dir, clients={"j": client})


def test_query_judge_retries_until_valid():
    client = _StubClient(["garbage", '{"relevant": true, "reason": "ok"}'])
    response = _gateway(client).query("j", ("s", "u"), "relevance")
    assert response.ok and response.attempt_count == 2


def test_query_judge_invalid_on_all_attempts():
    client = _StubClient(["garbage"])
    response = _gateway(client, max_retries=2).query("j", ("s", "u"), "relevance")
    assert not response.ok
    assert response.attempt_count == 3  # max_retries + 1
    assert "invalid response" in response.failure


def test_query_judge_transport_failure():
    client = _StubClient([RuntimeError("boom")])
    response = _gateway(client, max_retries=1).query("j", ("s", "u"), "relevance")
    assert not response.ok and "transport failure" in response.failure


def test_audit_record_written(tmp_path):
    client = _StubClient(['{"relevant": false, "reason": "off"}'])
    gateway = _gateway(client, audit_dir=tmp_path / "audit")
    gateway.query("j", ("sys", "usr"), "relevance")
    records = list((tmp_path / "audit").glob("*.json"))
    assert len(records) == 1
    record = json.loads(records[0].read_text())
    assert record["request"]["user_text"] == "usr"
    assert record["response"]["parsed"]["relevant"] is False


def test_http_judge_client_against_local_endpoint(mock_server):
    mock_server.judge_handler = lambda payload: json.dumps(
        {"relevant": True, "reason": f"model={payload['model']}"}
    )
    config = JudgeConfig(judge_id="h", endpoint=mock_server.base_url, model_name="stub-1")
    raw = HttpJudgeClient().complete(config, "sys", "usr")
    assert json.loads(raw)["reason"] == "model=stub-1"


def test_http_judge_transport_error_becomes_failure(mock_server):
    def explode(payload):
        raise RuntimeError("no")

    mock_server.judge_handler = explode
    config = JudgeConfig(
        judge_id="h", endpoint=mock_server.base_url, model_name="stub-1", max_retries=0
    )
    gateway = JudgeGateway([config])
    response = gateway.query("h", ("s", "u"), "relevance")
    assert not response.ok and response.attempt_count == 1


def test_scripted_judge_end_to_end_deterministic():
    config = JudgeConfig(judge_id="alpha", endpoint="scripted:markers")
    gateway = JudgeGateway([config])
    system, user = render_prompt(
        TEMPLATES["presentation"],
        {
            "query": "q",
            "checklist_section": "1. First?\n2. Second?",
            "report_content": "body [[p-fail:2]] text",
        },
    )
    first = gateway.query("alpha", (system, user), "checklist")
    second = gateway.query("alpha", (system, user), "checklist")
    assert first.raw_text == second.raw_text
    verdicts = {v["item_id"]: v["pass"] for v in first.parsed}
    assert verdicts == {1: 1, 2: 0}


def test_ensemble_mean_examples():
    assert ensemble_mean([80, 90]) == 85
    assert ensemble_mean([70]) == 70
    assert ensemble_mean([0, 100]) == 50
    with pytest.raises(ValueError):
        ensemble_mean([])


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=10))
def test_ensemble_mean_within_bounds(scores):
    mean = ensemble_mean(scores)
    assert min(scores) - 1e-9 <= mean <= max(scores) + 1e-9


def test_http_judge_sends_bearer_token_from_env(mock_server, monkeypatch):
    monkeypatch.setenv("JUDGE_KEY_TEST", "sk-test-123")
    mock_server.judge_handler = lambda payload: '{"relevant": true, "reason": "ok"}'
    config = JudgeConfig(
        judge_id="h",
        endpoint=mock_server.base_url,
        model_name="stub",
        api_key_env="JUDGE_KEY_TEST",
    )
    HttpJudgeClient().complete(config, "s", "u")
    assert mock_server.last_post_headers.get("Authorization") == "Bearer sk-test-123"


def test_render_prompt_preserves_backslashes_in_bindings():
    template = PromptTemplate(metric_id="t", system_text="", user_text="{report}")
    tricky = r"path C:\temp\g<0> and regex \1 groups"
    _, user = render_prompt(template, {"report": tricky})
    assert user == tricky


def test_validate_checklist_accepts_bare_list():
    parsed = validate_response("checklist", [{"item_id": 3, "score": 1}])
    assert parsed == [{"item_id": 3, "pass": 1, "justification": ""}]


def test_extract_json_prefers_fenced_block_over_prose_braces():
    raw = 'context {not json}\n```json\n{"relevant": false, "reason": "x"}\n```'
    assert extract_json(raw) == {"relevant": False, "reason": "x"}


def test_ensemble_mean_rejects_non_finite():
    with pytest.raises(ValueError):
        ensemble_mean([float("nan"), 10.0])
