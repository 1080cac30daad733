"""Uniform access to LLM judges.

Covers prompt rendering, request dispatch with retries, extraction of the
JSON object a judge was asked to produce, response-schema validation, and
the two-judge ensemble average. Judge identities are configuration, never
hard-coded; an endpoint of the form ``scripted:markers`` selects the
deterministic offline judge from :mod:`reporteval.scripted`.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import statistics
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import requests

logger = logging.getLogger(__name__)

_PLACEHOLDER_RE = re.compile(r"\{([a-z][a-z0-9_]*)\}")
_FENCE_BLOCK_RE = re.compile(r"```(?:[a-zA-Z0-9_-]*)\n(.*?)```", re.DOTALL)

RESPONSE_SCHEMAS = ("checklist", "issue_report", "depth_pair", "relevance", "support")


class RenderError(Exception):
    """A prompt placeholder could not be bound."""


class SchemaError(Exception):
    """A judge response does not satisfy the metric's response schema."""


@dataclass(frozen=True)
class JudgeConfig:
    judge_id: str
    endpoint: str
    model_name: str = ""
    temperature: float = 0.0
    max_retries: int = 2
    timeout: float = 120.0
    api_key_env: str | None = None
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class PromptTemplate:
    metric_id: str
    system_text: str
    user_text: str

    def placeholders(self) -> list[str]:
        found = []
        for text in (self.system_text, self.user_text):
            for match in _PLACEHOLDER_RE.finditer(text):
                found.append(match.group(1))
        return found

    def require_placeholders(self, names: tuple[str, ...]) -> None:
        """Each protocol placeholder must appear exactly once in the template."""
        counts: dict[str, int] = {}
        for name in self.placeholders():
            counts[name] = counts.get(name, 0) + 1
        for name in names:
            if counts.get(name, 0) != 1:
                raise ValueError(
                    f"template {self.metric_id!r}: placeholder {{{name}}} appears "
                    f"{counts.get(name, 0)} times, expected exactly once"
                )


@dataclass(frozen=True)
class JudgeResponse:
    raw_text: str
    parsed: object | None
    attempt_count: int
    latency: float
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None and self.parsed is not None


def render_prompt(template: PromptTemplate, bindings: dict[str, str]) -> tuple[str, str]:
    """Substitute named placeholders; byte-exact, single pass, no rescanning."""

    def substitute(text: str) -> str:
        def repl(match: re.Match) -> str:
            name = match.group(1)
            if name not in bindings:
                raise RenderError(f"unbound placeholder: {name}")
            return bindings[name]

        return _PLACEHOLDER_RE.sub(repl, text)

    return substitute(template.system_text), substitute(template.user_text)


def extract_json(text: str) -> object:
    """Pull the first JSON object out of a judge reply.

    Judges wrap JSON unpredictably: code fences, leading prose, trailing
    commentary. Strategy: try the fenced blocks first, then the text as a
    whole, then the first balanced top-level object.
    """
    candidates = [m.group(1) for m in _FENCE_BLOCK_RE.finditer(text)]
    candidates.append(text)
    balanced = _first_balanced_object(text)
    if balanced is not None:
        candidates.append(balanced)
    for candidate in candidates:
        candidate = candidate.strip()
        if not candidate:
            continue
        try:
            return json.loads(candidate)
        except json.JSONDecodeError:
            inner = _first_balanced_object(candidate)
            if inner is not None and inner != candidate:
                try:
                    return json.loads(inner)
                except json.JSONDecodeError:
                    pass
    raise ValueError("no JSON object found in judge response")


def _first_balanced_object(text: str) -> str | None:
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for pos in range(start, len(text)):
            char = text[pos]
            if in_string:
                if escaped:
                    escaped = False
                elif char == "\\":
                    escaped = True
                elif char == '"':
                    in_string = False
            elif char == '"':
                in_string = True
            elif char == "{":
                depth += 1
            elif char == "}":
                depth -= 1
                if depth == 0:
                    return text[start : pos + 1]
        start = text.find("{", start + 1)
    return None


def _as_binary(value: object) -> int:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, (int, float)) and value in (0, 1):
        return int(value)
    raise SchemaError(f"expected a binary 0/1 score, got {value!r}")


def _validate_checklist(obj: object) -> list[dict]:
    if isinstance(obj, dict):
        items = obj.get("evaluations", obj.get("items"))
    else:
        items = obj
    if not isinstance(items, list) or not items:
        raise SchemaError("checklist response must carry a nonempty evaluations list")
    normalized = []
    for raw in items:
        if not isinstance(raw, dict):
            raise SchemaError(f"checklist evaluation is not an object: {raw!r}")
        item_id = raw.get("item_id", raw.get("id", raw.get("criterion_id")))
        score = raw.get("score", raw.get("pass"))
        if item_id is None or score is None:
            raise SchemaError(f"checklist evaluation missing item_id or score: {raw!r}")
        normalized.append(
            {
                "item_id": int(item_id),
                "pass": _as_binary(score),
                "justification": str(raw.get("justification", raw.get("reasoning", ""))),
            }
        )
    return normalized


def _validate_issue_report(obj: object) -> dict:
    if not isinstance(obj, dict):
        raise SchemaError("issue report must be a JSON object")
    issues = obj.get("specific_issues")
    total = obj.get("total_issues")
    if not isinstance(issues, list) or not isinstance(total, (int, float)):
        raise SchemaError("issue report needs specific_issues (list) and total_issues (number)")
    return {
        "specific_issues": [str(i) for i in issues],
        "total_issues": int(total),
        "score": obj.get("score"),
        "reasoning": str(obj.get("reasoning", "")),
    }


def _validate_scorecard(raw: object) -> dict:
    if not isinstance(raw, dict):
        raise SchemaError("scorecard must be an object")
    card = {}
    for dim in ("granularity", "insight", "critique", "evidence", "density"):
        value = raw.get(dim)
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not 0 <= value <= 5:
            raise SchemaError(f"scorecard dimension {dim} must be a number in [0, 5], got {value!r}")
        card[dim] = float(value)
    return card


def _validate_depth_pair(obj: object) -> dict:
    if not isinstance(obj, dict):
        raise SchemaError("depth response must be a JSON object")
    winner = str(obj.get("winner", "")).strip().lower()
    if winner not in ("a", "b", "tie"):
        raise SchemaError(f"winner must be A, B, or tie, got {obj.get('winner')!r}")
    scores = obj.get("scores")
    if not isinstance(scores, dict) or "A" not in scores or "B" not in scores:
        raise SchemaError("depth response needs scores for both A and B")
    return {
        "winner": winner.upper() if winner in ("a", "b") else "tie",
        "scores": {"A": _validate_scorecard(scores["A"]), "B": _validate_scorecard(scores["B"])},
        "justification": str(obj.get("justification", "")),
    }


def _validate_relevance(obj: object) -> dict:
    if not isinstance(obj, dict) or not isinstance(obj.get("relevant"), bool):
        raise SchemaError("relevance response needs a boolean 'relevant' field")
    return {"relevant": obj["relevant"], "reason": str(obj.get("reason", ""))}


def _validate_support(obj: object) -> dict:
    if not isinstance(obj, dict) or not isinstance(obj.get("verdicts"), list):
        raise SchemaError("support response needs a 'verdicts' list")
    verdicts = []
    for raw in obj["verdicts"]:
        if (
            not isinstance(raw, dict)
            or not isinstance(raw.get("claim_index"), int)
            or not isinstance(raw.get("supported"), bool)
        ):
            raise SchemaError(f"malformed support verdict: {raw!r}")
        verdicts.append(
            {
                "claim_index": raw["claim_index"],
                "supported": raw["supported"],
                "reason": str(raw.get("reason", "")),
            }
        )
    return {"verdicts": verdicts}


_VALIDATORS = {
    "checklist": _validate_checklist,
    "issue_report": _validate_issue_report,
    "depth_pair": _validate_depth_pair,
    "relevance": _validate_relevance,
    "support": _validate_support,
}


def validate_response(schema_id: str, obj: object) -> object:
    try:
        validator = _VALIDATORS[schema_id]
    except KeyError:
        raise SchemaError(f"unknown response schema {schema_id!r}") from None
    return validator(obj)


class JudgeClient(Protocol):
    def complete(self, config: JudgeConfig, system_text: str, user_text: str) -> str: ...


class HttpJudgeClient:
    """OpenAI-compatible chat-completions client."""

    def __init__(self, session: requests.Session | None = None):
        self._session = session or requests.Session()

    def complete(self, config: JudgeConfig, system_text: str, user_text: str) -> str:
        headers = {"Content-Type": "application/json"}
        if config.api_key_env:
            key = os.environ.get(config.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": config.model_name,
            "temperature": config.temperature,
            "messages": [
                {"role": "system", "content": system_text},
                {"role": "user", "content": user_text},
            ],
        }
        url = config.endpoint.rstrip("/") + "/chat/completions"
        response = self._session.post(url, json=payload, headers=headers, timeout=config.timeout)
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]


def build_client(config: JudgeConfig) -> JudgeClient:
    if config.endpoint.startswith("scripted:"):
        from .scripted import ScriptedJudgeClient

        variant = config.endpoint.split(":", 1)[1] or "markers"
        if variant != "markers":
            raise ValueError(f"unknown scripted judge variant {variant!r}")
        return ScriptedJudgeClient()
    if config.endpoint.startswith(("http://", "https://")):
        return HttpJudgeClient()
    raise ValueError(f"unsupported judge endpoint {config.endpoint!r}")


class JudgeGateway:
    """Dispatches prompts to the configured judges under per-judge caps.

    Every call is persisted to ``audit_dir`` as one JSON record addressed by
    the hash of the request, so a run can be audited after the fact.
    """

    def __init__(
        self,
        configs: list[JudgeConfig],
        audit_dir: str | Path | None = None,
        clients: dict[str, JudgeClient] | None = None,
    ):
        if not configs:
            raise ValueError("judge roster is empty")
        self.configs: dict[str, JudgeConfig] = {}
        self._clients: dict[str, JudgeClient] = {}
        self._limits: dict[str, threading.BoundedSemaphore] = {}
        for config in configs:
            if config.judge_id in self.configs:
                raise ValueError(f"duplicate judge id {config.judge_id!r}")
            self.configs[config.judge_id] = config
            client = (clients or {}).get(config.judge_id) or build_client(config)
            self._clients[config.judge_id] = client
            self._limits[config.judge_id] = threading.BoundedSemaphore(config.max_concurrency)
        self.audit_dir = Path(audit_dir) if audit_dir else None

    @property
    def judge_ids(self) -> list[str]:
        return list(self.configs)

    def query(self, judge_id: str, prompt: tuple[str, str], schema_id: str) -> JudgeResponse:
        config = self.configs[judge_id]
        client = self._clients[judge_id]
        system_text, user_text = prompt
        started = time.perf_counter()
        attempts = 0
        last_raw = ""
        failure: str | None = None
        parsed: object | None = None
        while attempts <= config.max_retries:
            attempts += 1
            try:
                with self._limits[judge_id]:
                    last_raw = client.complete(config, system_text, user_text)
            except Exception as exc:
                failure = f"transport failure: {exc}"
                logger.warning("judge %s attempt %d failed: %s", judge_id, attempts, failure)
                continue
            try:
                parsed = validate_response(schema_id, extract_json(last_raw))
                failure = None
                break
            except (ValueError, SchemaError) as exc:
                failure = f"invalid response: {exc}"
                parsed = None
                logger.warning("judge %s attempt %d invalid: %s", judge_id, attempts, failure)
        response = JudgeResponse(
            raw_text=last_raw,
            parsed=parsed,
            attempt_count=attempts,
            latency=time.perf_counter() - started,
            failure=failure,
        )
        self._write_audit_record(config, schema_id, system_text, user_text, response)
        return response

    def _write_audit_record(
        self,
        config: JudgeConfig,
        schema_id: str,
        system_text: str,
        user_text: str,
        response: JudgeResponse,
    ) -> None:
        if self.audit_dir is None:
            return
        request = {
            "judge_id": config.judge_id,
            "model_name": config.model_name,
            "schema": schema_id,
            "system_text": system_text,
            "user_text": user_text,
        }
        digest = hashlib.sha256(
            json.dumps(request, sort_keys=True, ensure_ascii=False).encode("utf-8")
        ).hexdigest()
        record = {
            "request": request,
            "response": {
                "raw_text": response.raw_text,
                "parsed": response.parsed,
                "attempt_count": response.attempt_count,
                "latency": response.latency,
                "failure": response.failure,
            },
        }
        self.audit_dir.mkdir(parents=True, exist_ok=True)
        path = self.audit_dir / f"{digest}.json"
        tmp = path.with_name(f".{digest}.{threading.get_ident()}.tmp")
        tmp.write_text(json.dumps(record, indent=2, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, path)


def ensemble_mean(scores: list[float]) -> float:
    """Arithmetic mean of the per-judge scores."""
    if not scores:
        raise ValueError("ensemble_mean requires at least one score")
    if any(not math.isfinite(s) for s in scores):
        raise ValueError("ensemble_mean requires finite scores")
    return statistics.fmean(scores)
