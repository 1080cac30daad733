"""Run planning and resumable execution.

A run enumerates (system, task, metric) units plus depth pairs against the
baseline, executes the ones not already in the unit cache under a bounded
worker pool, and aggregates everything into a results directory:

    <out>/<run-id>/leaderboard.{json,csv,md}
    <out>/<run-id>/transcripts/<system>/<task>/<metric>.json
    <out>/<run-id>/manifest

The manifest is content-addressed: task records and report bytes are hashed,
so the same inputs, cache, and scripted judges reproduce the same run id and
byte-identical outputs regardless of where files live on disk.
"""

from __future__ import annotations

import concurrent.futures
import datetime as dt
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from .aggregate import AggregateTables, RunRecord, aggregate, render
from .citations import audit_report
from .fetching import Fetcher, FetchPolicy
from .judges import JudgeConfig, JudgeGateway
from .metrics import (
    DEFAULT_BAND_TABLES,
    METRIC_IDS,
    RubricBandTable,
    score_checklist_metric,
    score_depth_pair,
    score_pointwise_metric,
    presentation_checklist_items,
)
from .parsing import parse_report
from .tasks import BenchmarkTask, TaskFileError, load_tasks, resolve_date

logger = logging.getLogger(__name__)

PER_REPORT_METRICS = ("presentation", "consistency", "coverage", "association", "accuracy")


class ConfigError(Exception):
    """Invalid run configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    tasks_path: Path
    reports_dir: Path
    judges: list[JudgeConfig]
    metrics: tuple[str, ...]
    eval_date: dt.date
    date_format: str | None = None
    depth_baseline: str | None = None
    systems: dict[str, dict[str, Path]] | None = None  # explicit roster, else discovered
    fetch: FetchPolicy = field(default_factory=FetchPolicy)
    concurrency: int = 4
    cache_dir: Path = Path(".reporteval-cache")
    out_dir: Path = Path("results")
    band_tables: dict[str, RubricBandTable] = field(default_factory=dict)
    run_id: str | None = None

    def validate(self) -> None:
        unknown = [m for m in self.metrics if m not in METRIC_IDS]
        if unknown:
            raise ConfigError(f"unknown metrics selected: {unknown}")
        if not self.metrics:
            raise ConfigError("no metrics selected")
        if "depth" in self.metrics and not self.depth_baseline:
            raise ConfigError("depth metric requires a depth baseline system")
        if not self.judges:
            raise ConfigError("judge roster is empty")

    @classmethod
    def load(cls, path: str | Path, **overrides) -> RunConfig:
        """Read a declarative JSON config; relative paths resolve next to it."""
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        base = path.parent

        def respath(value: str | None) -> Path | None:
            if value is None:
                return None
            candidate = Path(value)
            return candidate if candidate.is_absolute() else base / candidate

        judges = []
        for spec in raw.get("judges", []):
            try:
                judges.append(JudgeConfig(**spec))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad judge config {spec!r}: {exc}") from exc

        fetch_raw = dict(raw.get("fetch", {}))
        if "cache_dir" not in fetch_raw and raw.get("cache_dir"):
            fetch_raw["cache_dir"] = str(respath(raw["cache_dir"]))
        if overrides.pop("offline", False):
            fetch_raw["offline"] = True
        rewrites = overrides.pop("url_rewrites", None)
        if rewrites:
            fetch_raw["url_rewrites"] = {**fetch_raw.get("url_rewrites", {}), **rewrites}
        try:
            fetch = FetchPolicy(**fetch_raw)
        except TypeError as exc:
            raise ConfigError(f"bad fetch policy: {exc}") from exc

        band_tables = {}
        for metric, pairs in raw.get("band_tables", {}).items():
            if metric not in DEFAULT_BAND_TABLES:
                raise ConfigError(f"band table override for non-pointwise metric {metric!r}")
            try:
                band_tables[metric] = RubricBandTable.from_pairs(
                    [(bound, score) for bound, score in pairs],
                    count_label=DEFAULT_BAND_TABLES[metric].count_label,
                )
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad band table for {metric}: {exc}") from exc

        systems = None
        if raw.get("systems"):
            systems = {
                name: {task_id: respath(p) for task_id, p in mapping.items()}
                for name, mapping in raw["systems"].items()
            }

        eval_date_raw = overrides.pop("eval_date", None) or raw.get("eval_date")
        if not eval_date_raw:
            raise ConfigError("eval_date is required (ISO-8601)")
        try:
            eval_date = dt.date.fromisoformat(str(eval_date_raw))
        except ValueError as exc:
            raise ConfigError(f"bad eval_date {eval_date_raw!r}: {exc}") from exc

        tasks_path = overrides.pop("tasks_path", None) or respath(raw.get("tasks"))
        reports_dir = overrides.pop("reports_dir", None) or respath(raw.get("reports"))
        if tasks_path is None or reports_dir is None:
            raise ConfigError("config must provide tasks and reports paths")

        metrics = overrides.pop("metrics", None) or tuple(raw.get("metrics", METRIC_IDS))
        config = cls(
            tasks_path=Path(tasks_path),
            reports_dir=Path(reports_dir),
            judges=judges,
            metrics=tuple(metrics),
            eval_date=eval_date,
            date_format=overrides.pop("date_format", None) or raw.get("date_format"),
            depth_baseline=overrides.pop("depth_baseline", None) or raw.get("depth_baseline"),
            systems=systems,
            fetch=fetch,
            concurrency=int(raw.get("concurrency", 4)),
            cache_dir=respath(raw.get("cache_dir")) or base / ".reporteval-cache",
            out_dir=overrides.pop("out_dir", None) or respath(raw.get("out_dir")) or base / "results",
            band_tables=band_tables,
            run_id=raw.get("run_id"),
        )
        if overrides:
            raise ConfigError(f"unknown overrides: {sorted(overrides)}")
        config.validate()
        return config


@dataclass(frozen=True)
class WorkUnit:
    system: str
    task_id: str
    metric: str  # one of PER_REPORT_METRICS or "depth"
    report_path: Path | None
    baseline_path: Path | None = None  # depth units only

    @property
    def absent(self) -> bool:
        return self.report_path is None or (self.metric == "depth" and self.baseline_path is None)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.system, self.task_id, self.metric)


@dataclass
class RunPlan:
    tasks: list[BenchmarkTask]
    systems: dict[str, dict[str, Path]]
    units: list[WorkUnit]

    def pending(self, config: RunConfig) -> list[WorkUnit]:
        return [
            u
            for u in self.units
            if not u.absent and not unit_cache_path(config, u).exists()
        ]

    def absent_units(self) -> list[WorkUnit]:
        return [u for u in self.units if u.absent]


def discover_systems(reports_dir: Path, tasks: list[BenchmarkTask]) -> dict[str, dict[str, Path]]:
    """Reports are laid out as ``<reports_dir>/<system>/<task_id>.md``."""
    systems: dict[str, dict[str, Path]] = {}
    if not reports_dir.is_dir():
        raise ConfigError(f"reports directory {reports_dir} does not exist")
    for entry in sorted(reports_dir.iterdir()):
        if not entry.is_dir():
            continue
        mapping = {}
        for task in tasks:
            candidate = entry / f"{task.id}.md"
            if candidate.exists():
                mapping[task.id] = candidate
        systems[entry.name] = mapping
    if not systems:
        raise ConfigError(f"no system subdirectories under {reports_dir}")
    return systems


def plan_run(config: RunConfig) -> RunPlan:
    """Enumerate every work unit for the configured metrics and systems."""
    config.validate()
    try:
        tasks = load_tasks(config.tasks_path)
    except TaskFileError as exc:
        raise ConfigError(f"{exc}: {exc.problems}") from exc
    if config.systems is not None:
        systems = config.systems
    else:
        systems = discover_systems(config.reports_dir, tasks)

    if "depth" in config.metrics and config.depth_baseline not in systems:
        raise ConfigError(
            f"depth baseline {config.depth_baseline!r} is not among the systems {sorted(systems)}"
        )

    units: list[WorkUnit] = []
    for system in sorted(systems):
        for task in tasks:
            report_path = systems[system].get(task.id)
            for metric in PER_REPORT_METRICS:
                if metric in config.metrics:
                    units.append(WorkUnit(system, task.id, metric, report_path))
            if "depth" in config.metrics and system != config.depth_baseline:
                baseline_path = systems[config.depth_baseline].get(task.id)
                units.append(
                    WorkUnit(system, task.id, "depth", report_path, baseline_path=baseline_path)
                )
    return RunPlan(tasks=tasks, systems=systems, units=units)


def unit_cache_path(config: RunConfig, unit: WorkUnit) -> Path:
    return config.cache_dir / "units" / unit.system / unit.task_id / f"{unit.metric}.json"


def _dumps(obj: object) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write_atomic(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(content, encoding="utf-8")
    os.replace(tmp, path)


@dataclass
class UnitFailure:
    unit: WorkUnit
    error: str


@dataclass
class ExecutionResult:
    exit_code: int
    results_dir: Path | None
    failures: list[UnitFailure]
    executed: int
    skipped: int
    interrupted: bool = False


class Executor:
    """Executes a plan against the unit cache and writes the results tree."""

    def __init__(self, config: RunConfig, plan: RunPlan):
        self.config = config
        self.plan = plan
        self.tasks_by_id = {t.id: t for t in plan.tasks}
        try:
            self.gateway = JudgeGateway(config.judges, audit_dir=config.cache_dir / "audit")
        except ValueError as exc:
            raise ConfigError(f"judge roster unusable: {exc}") from exc
        fetch_policy = config.fetch
        if fetch_policy.cache_dir is None:
            fetch_policy = FetchPolicy(**{**fetch_policy.__dict__, "cache_dir": config.cache_dir})
        self.fetcher = Fetcher(fetch_policy)

    # -- unit execution -------------------------------------------------------

    def _resolved(self, task_id: str):
        task = self.tasks_by_id[task_id]
        return task, resolve_date(task, self.config.eval_date, self.config.date_format)

    def run_unit(self, unit: WorkUnit) -> dict:
        task, resolved = self._resolved(unit.task_id)
        report_text = unit.report_path.read_text(encoding="utf-8")
        if unit.metric == "presentation":
            result = score_checklist_metric(
                "presentation", resolved, report_text, presentation_checklist_items(), self.gateway
            )
            payload = result.to_record()
        elif unit.metric == "coverage":
            items = [(i.item_id, i.text) for i in task.coverage_checklist]
            result = score_checklist_metric("coverage", resolved, report_text, items, self.gateway)
            payload = result.to_record()
        elif unit.metric in ("consistency", "association"):
            result = score_pointwise_metric(
                unit.metric,
                resolved,
                report_text,
                self.gateway,
                band_table=self.config.band_tables.get(unit.metric),
            )
            payload = result.to_record()
        elif unit.metric == "depth":
            baseline_text = unit.baseline_path.read_text(encoding="utf-8")
            outcome = score_depth_pair(resolved, report_text, baseline_text, self.gateway)
            if outcome is None:
                payload = {
                    "metric": "depth",
                    "verdict": None,
                    "baseline": self.config.depth_baseline,
                    "warnings": ["all judge calls failed; outcome unavailable"],
                }
            else:
                payload = {
                    "metric": "depth",
                    "verdict": outcome.verdict,
                    "total_a": outcome.total_a,
                    "total_b": outcome.total_b,
                    "baseline": self.config.depth_baseline,
                    "calls": list(outcome.calls),
                    "warnings": list(outcome.warnings),
                }
        elif unit.metric == "accuracy":
            parsed = parse_report(report_text)
            summary = audit_report(resolved, parsed, self.gateway, self.fetcher)
            payload = {"metric": "accuracy"} | summary.to_record()
        else:
            raise ValueError(f"unknown metric {unit.metric!r}")
        return {
            "system": unit.system,
            "task_id": unit.task_id,
            "metric": unit.metric,
            "category": task.category,
            "payload": payload,
        }

    def execute_pending(self, stop_after: int | None = None) -> tuple[list[UnitFailure], int, bool]:
        pending = self.plan.pending(self.config)
        if stop_after is not None:
            to_run, interrupted = pending[:stop_after], len(pending) > stop_after
        else:
            to_run, interrupted = pending, False
        failures: list[UnitFailure] = []
        if "accuracy" in self.config.metrics and self.config.fetch.offline:
            fetch_cache = Path(self.fetcher.policy.cache_dir or "") / "fetch"
            if not fetch_cache.is_dir() or not any(fetch_cache.iterdir()):
                raise ConfigError(
                    "offline citation accuracy requires a populated fetch cache; "
                    f"cache required at {fetch_cache}"
                )

        def run_one(unit: WorkUnit) -> None:
            record = self.run_unit(unit)
            _write_atomic(unit_cache_path(self.config, unit), _dumps(record))

        with concurrent.futures.ThreadPoolExecutor(max_workers=self.config.concurrency) as pool:
            futures = {pool.submit(run_one, unit): unit for unit in to_run}
            for future in concurrent.futures.as_completed(futures):
                unit = futures[future]
                try:
                    future.result()
                except Exception as exc:
                    logger.error("unit %s failed: %s", unit.key, exc)
                    failures.append(UnitFailure(unit=unit, error=f"{type(exc).__name__}: {exc}"))
        return failures, len(to_run), interrupted

    # -- aggregation and results ----------------------------------------------

    def collect_records(self) -> list[RunRecord]:
        records = []
        for unit in self.plan.units:
            if unit.absent:
                continue
            path = unit_cache_path(self.config, unit)
            if not path.exists():
                continue
            data = json.loads(path.read_text(encoding="utf-8"))
            records.append(
                RunRecord(
                    system=data["system"],
                    task_id=data["task_id"],
                    metric=data["metric"],
                    category=data.get("category", ""),
                    payload=data["payload"],
                    transcript=f"transcripts/{unit.system}/{unit.task_id}/{unit.metric}.json",
                )
            )
        return records

    def manifest(self) -> dict:
        tasks_digest = [
            {
                "id": task.id,
                "sha256": hashlib.sha256(
                    json.dumps(
                        {
                            "id": task.id,
                            "query_template": task.query_template,
                            "domain": task.domain,
                            "category": task.category,
                            "checklist": [
                                [i.item_id, i.text] for i in task.coverage_checklist
                            ],
                        },
                        sort_keys=True,
                        ensure_ascii=False,
                    ).encode("utf-8")
                ).hexdigest(),
            }
            for task in self.plan.tasks
        ]
        systems_digest = {
            system: {
                task_id: hashlib.sha256(path.read_bytes()).hexdigest()
                for task_id, path in sorted(mapping.items())
                if path.exists()
            }
            for system, mapping in sorted(self.plan.systems.items())
        }
        body = {
            "eval_date": self.config.eval_date.isoformat(),
            "date_format": self.config.date_format,
            "metrics": sorted(self.config.metrics),
            "depth_baseline": self.config.depth_baseline,
            "judges": [
                {"judge_id": j.judge_id, "model_name": j.model_name, "endpoint": j.endpoint}
                for j in self.config.judges
            ],
            "band_tables": {
                metric: [[band.max_count, band.score] for band in table.bands]
                for metric, table in sorted(self.config.band_tables.items())
            },
            "tasks": tasks_digest,
            "systems": systems_digest,
            "absent_units": [list(u.key) for u in self.plan.absent_units()],
        }
        config_hash = hashlib.sha256(
            json.dumps(body, sort_keys=True, ensure_ascii=False).encode("utf-8")
        ).hexdigest()
        run_id = self.config.run_id or config_hash[:12]
        return {"run_id": run_id, "config_hash": config_hash, **body}

    def write_results(self) -> tuple[Path, AggregateTables]:
        manifest = self.manifest()
        results_dir = self.config.out_dir / manifest["run_id"]
        records = self.collect_records()
        tables = aggregate(records, depth_baseline=self.config.depth_baseline)
        for fmt, suffix in (("json", "json"), ("csv", "csv"), ("markdown", "md")):
            _write_atomic(results_dir / f"leaderboard.{suffix}", render(tables, fmt))
        _write_atomic(results_dir / "manifest", _dumps(manifest))
        for unit in self.plan.units:
            if unit.absent:
                continue
            cache_path = unit_cache_path(self.config, unit)
            if cache_path.exists():
                destination = (
                    results_dir / "transcripts" / unit.system / unit.task_id / f"{unit.metric}.json"
                )
                _write_atomic(destination, cache_path.read_text(encoding="utf-8"))
        return results_dir, tables


def execute(plan: RunPlan, config: RunConfig, stop_after: int | None = None) -> ExecutionResult:
    """Run all pending units, then aggregate; idempotent over a completed cache.

    ``stop_after`` bounds how many pending units this invocation executes,
    which simulates an interrupted run: resuming just means calling execute
    again with the same config.
    """
    executor = Executor(config, plan)
    skipped = len([u for u in plan.units if not u.absent]) - len(plan.pending(config))
    failures, executed, interrupted = executor.execute_pending(stop_after=stop_after)
    if interrupted:
        return ExecutionResult(
            exit_code=1,
            results_dir=None,
            failures=failures,
            executed=executed,
            skipped=skipped,
            interrupted=True,
        )
    results_dir, _ = executor.write_results()
    return ExecutionResult(
        exit_code=1 if failures else 0,
        results_dir=results_dir,
        failures=failures,
        executed=executed,
        skipped=skipped,
    )
