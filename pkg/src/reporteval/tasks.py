"""Benchmark task records: loading, validation, and evaluation-date resolution.

A task file is line-delimited JSON, one task per line:

    {"id": "q1", "query_template": "...", "domain": "...", "category": "...",
     "coverage_checklist": [{"item_id": 1, "text": "Does ...?"}, ...]}

Templates may contain the literal placeholder ``{{date}}``, substituted with
the rendered evaluation date at run time.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger(__name__)

DATE_PLACEHOLDER = "{{date}}"

KNOWN_DOMAINS = frozenset(
    {
        "science & technology",
        "economy & business",
        "health & wellbeing",
        "law & governance",
        "society & culture",
        "education & knowledge",
        "media & entertainment",
    }
)

KNOWN_CATEGORIES = frozenset(
    {
        "market analysis",
        "technical support",
        "decision support",
        "policy & regulation",
        "literature review",
        "competitive analysis",
        "pros & cons",
        "wide information search",
        "topic exploration",
        "top rankings",
    }
)


class TaskFileError(Exception):
    """Task file is unreadable, syntactically malformed, or semantically invalid."""

    def __init__(self, message: str, problems: list[str] | None = None):
        super().__init__(message)
        self.problems = problems or []


@dataclass(frozen=True)
class ChecklistItem:
    """One yes/no unit question from a task's coverage checklist."""

    item_id: int
    text: str


@dataclass(frozen=True)
class BenchmarkTask:
    id: str
    query_template: str
    domain: str
    category: str
    coverage_checklist: tuple[ChecklistItem, ...]


@dataclass(frozen=True)
class ResolvedTask:
    """A task bound to an evaluation date, with ``{{date}}`` substituted."""

    task: BenchmarkTask
    eval_date: dt.date
    query: str


def _validate_task(task: BenchmarkTask, problems: list[str]) -> None:
    prefix = f"task {task.id!r}" if task.id else "task with empty id"
    if not task.id:
        problems.append("task id empty")
    if not task.query_template.strip():
        problems.append(f"{prefix}: query_template empty")
    if not task.coverage_checklist:
        problems.append(f"{prefix}: coverage_checklist empty")
    seen_items: set[int] = set()
    for item in task.coverage_checklist:
        if item.item_id in seen_items:
            problems.append(f"{prefix}: duplicate checklist item_id {item.item_id}")
        seen_items.add(item.item_id)
        if not item.text.strip():
            problems.append(f"{prefix}: checklist item {item.item_id} text empty")
        elif not item.text.rstrip().endswith("?"):
            logger.warning(
                "%s: checklist item %d is not phrased as a question: %r",
                prefix,
                item.item_id,
                item.text,
            )
    if task.domain and task.domain.lower() not in KNOWN_DOMAINS:
        logger.warning("%s: unknown domain %r", prefix, task.domain)
    if task.category and task.category.lower() not in KNOWN_CATEGORIES:
        logger.warning("%s: unknown category %r", prefix, task.category)


def _task_from_record(record: dict, line_no: int, problems: list[str]) -> BenchmarkTask | None:
    if not isinstance(record, dict):
        problems.append(f"line {line_no}: record is not an object")
        return None
    missing = [k for k in ("id", "query_template", "coverage_checklist") if k not in record]
    if missing:
        problems.append(f"line {line_no}: missing fields {missing}")
        return None
    items = []
    raw_items = record.get("coverage_checklist") or []
    if not isinstance(raw_items, list):
        problems.append(f"line {line_no}: coverage_checklist is not a list")
        return None
    for raw in raw_items:
        if not isinstance(raw, dict) or "item_id" not in raw or "text" not in raw:
            problems.append(f"line {line_no}: malformed checklist item {raw!r}")
            continue
        items.append(ChecklistItem(item_id=int(raw["item_id"]), text=str(raw["text"])))
    return BenchmarkTask(
        id=str(record["id"]),
        query_template=str(record["query_template"]),
        domain=str(record.get("domain", "")),
        category=str(record.get("category", "")),
        coverage_checklist=tuple(items),
    )


def load_tasks(path: str | Path) -> list[BenchmarkTask]:
    """Load all benchmark tasks from a line-delimited JSON file.

    Validation problems are collected across the whole file and raised
    together as one :class:`TaskFileError`, so a single bad task does not
    mask the rest.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TaskFileError(f"cannot read task file {path}: {exc}") from exc

    tasks: list[BenchmarkTask] = []
    problems: list[str] = []
    seen_ids: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TaskFileError(f"malformed task file {path} at line {line_no}: {exc}") from exc
        task = _task_from_record(record, line_no, problems)
        if task is None:
            continue
        if task.id in seen_ids:
            problems.append(f"duplicate task id {task.id!r}")
            continue
        seen_ids.add(task.id)
        _validate_task(task, problems)
        tasks.append(task)

    if problems:
        raise TaskFileError(
            f"task file {path} has {len(problems)} validation problem(s)", problems=problems
        )
    return tasks


def dump_tasks(tasks: list[BenchmarkTask], path: str | Path) -> None:
    """Write tasks back out as line-delimited JSON (inverse of load_tasks)."""
    lines = []
    for task in tasks:
        lines.append(
            json.dumps(
                {
                    "id": task.id,
                    "query_template": task.query_template,
                    "domain": task.domain,
                    "category": task.category,
                    "coverage_checklist": [
                        {"item_id": item.item_id, "text": item.text}
                        for item in task.coverage_checklist
                    ],
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_MONTHS = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)


def render_date(eval_date: dt.date, date_format: str | None = None) -> str:
    """Render a date for query substitution.

    ``date_format`` is a strftime spec; the default is long English form
    ("September 15, 2025"), locale-independent.
    """
    if date_format:
        rendered = eval_date.strftime(date_format)
    else:
        rendered = f"{_MONTHS[eval_date.month - 1]} {eval_date.day}, {eval_date.year}"
    if not rendered:
        raise ValueError(f"date format {date_format!r} rendered an empty string")
    return rendered


def resolve_date(
    task: BenchmarkTask, eval_date: dt.date, date_format: str | None = None
) -> ResolvedTask:
    """Substitute every ``{{date}}`` occurrence in the task's query template."""
    query = task.query_template.replace(DATE_PLACEHOLDER, render_date(eval_date, date_format))
    return ResolvedTask(task=task, eval_date=eval_date, query=query)
