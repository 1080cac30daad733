"""Command-line interface.

Subcommands:
    evaluate          run the configured metrics end to end
    lint              structural audit only; one violation record per line
    verify-citations  citation accuracy only
    report            re-aggregate results from the unit cache

Exit codes: 0 success, 1 unit failures or lint findings, 2 configuration
errors. Judge credentials come from the environment variables named in the
judge roster (``api_key_env``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .lint import audit_structure
from .parsing import parse_report
from .runner import ConfigError, Executor, RunConfig, execute, plan_run


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to the run config (JSON)")
    parser.add_argument("--tasks", help="task file override (line-delimited JSON)")
    parser.add_argument("--reports", help="reports directory override")
    parser.add_argument("--eval-date", help="evaluation date override (ISO-8601)")
    parser.add_argument("--date-format", help="strftime spec for {{date}} substitution")
    parser.add_argument("--metrics", help="comma-separated metric selection")
    parser.add_argument("--depth-baseline", help="baseline system for the depth metric")
    parser.add_argument("--offline", action="store_true", help="serve all fetches from the cache")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument(
        "--rewrite-url",
        action="append",
        default=[],
        metavar="FROM=TO",
        help="rewrite a URL prefix at fetch time (e.g. point fixtures at a local test server)",
    )


def _load_config(args: argparse.Namespace, force_metrics: tuple[str, ...] | None = None) -> RunConfig:
    overrides: dict = {}
    if args.tasks:
        overrides["tasks_path"] = Path(args.tasks)
    if args.reports:
        overrides["reports_dir"] = Path(args.reports)
    if args.eval_date:
        overrides["eval_date"] = args.eval_date
    if args.date_format:
        overrides["date_format"] = args.date_format
    if args.depth_baseline:
        overrides["depth_baseline"] = args.depth_baseline
    if args.out:
        overrides["out_dir"] = Path(args.out)
    if args.offline:
        overrides["offline"] = True
    if args.rewrite_url:
        rewrites = {}
        for spec in args.rewrite_url:
            source, _, target = spec.partition("=")
            if not source or not target:
                raise ConfigError(f"bad --rewrite-url {spec!r}; expected FROM=TO")
            rewrites[source] = target
        overrides["url_rewrites"] = rewrites
    if force_metrics is not None:
        overrides["metrics"] = force_metrics
    elif args.metrics:
        overrides["metrics"] = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    return RunConfig.load(args.config, **overrides)


def _run_pipeline(args: argparse.Namespace, force_metrics: tuple[str, ...] | None = None) -> int:
    config = _load_config(args, force_metrics=force_metrics)
    plan = plan_run(config)
    result = execute(plan, config)
    for failure in result.failures:
        print(f"FAILED {failure.unit.key}: {failure.error}", file=sys.stderr)
    if result.results_dir is not None:
        print(f"results: {result.results_dir}")
    print(f"executed {result.executed} unit(s), {result.skipped} served from cache")
    return result.exit_code


def _cmd_evaluate(args: argparse.Namespace) -> int:
    return _run_pipeline(args)


def _cmd_verify_citations(args: argparse.Namespace) -> int:
    return _run_pipeline(args, force_metrics=("accuracy",))


def _cmd_report(args: argparse.Namespace) -> int:
    config = _load_config(args)
    plan = plan_run(config)
    results_dir, _ = Executor(config, plan).write_results()
    print(f"results: {results_dir}")
    return 0


def _iter_lint_targets(args: argparse.Namespace) -> list[Path]:
    targets = [Path(p) for p in args.files]
    if args.reports:
        root = Path(args.reports)
        if not root.is_dir():
            raise ConfigError(f"reports directory {root} does not exist")
        targets.extend(sorted(root.rglob("*.md")))
    if not targets:
        raise ConfigError("lint needs report files or --reports <dir>")
    return targets


def _cmd_lint(args: argparse.Namespace) -> int:
    dirty = False
    for path in _iter_lint_targets(args):
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read report {path}: {exc}") from exc
        audit = audit_structure(parse_report(text))
        for violation in audit.violations:
            dirty = True
            print(json.dumps({"file": str(path)} | violation.to_record(), ensure_ascii=False))
        for advisory in audit.advisories:
            print(
                json.dumps({"file": str(path), "advisory": advisory}, ensure_ascii=False),
                file=sys.stderr,
            )
    return 1 if dirty else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reporteval",
        description="Evaluate citation-grounded research reports.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    evaluate = commands.add_parser("evaluate", help="run the full evaluation pipeline")
    _add_config_options(evaluate)
    evaluate.set_defaults(handler=_cmd_evaluate)

    lint = commands.add_parser("lint", help="deterministic structural audit")
    lint.add_argument("files", nargs="*", help="report files to lint")
    lint.add_argument("--reports", help="lint every .md report under this directory")
    lint.set_defaults(handler=_cmd_lint)

    verify = commands.add_parser("verify-citations", help="citation accuracy only")
    _add_config_options(verify)
    verify.set_defaults(handler=_cmd_verify_citations)

    report = commands.add_parser("report", help="re-aggregate results from the cache")
    _add_config_options(report)
    report.set_defaults(handler=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
