"""Aggregation of per-report results into leaderboards and error tables.

Dimension scores are task means of the ensemble scores; the Avg column is
the mean of the four judge-scored dimensions (presentation, consistency,
coverage, association). Depth is reported separately as a win rate against
the configured baseline, and citation accuracy as mean E1/E2/E3 error
counts per task category. Aggregation is deterministic under record
reordering; display values are rounded half-up to one decimal while the
JSON output keeps full precision and provenance.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

LEADERBOARD_DIMENSIONS = ("presentation", "consistency", "coverage", "association")

LEADERBOARD_HEADERS = {
    "presentation": "Presentation & Organization",
    "consistency": "Fact & Logic Consistency",
    "coverage": "Coverage & Comprehensiveness",
    "association": "Citation Association",
}

UNAVAILABLE_CELL = "—"  # em dash rendered for undefined cells


@dataclass(frozen=True)
class RunRecord:
    """One completed evaluation unit: (system, task, metric) plus its payload."""

    system: str
    task_id: str
    metric: str
    payload: dict
    category: str = ""
    transcript: str = ""


@dataclass
class LeaderboardRow:
    system: str
    scores: dict[str, float | None]
    avg: float | None


@dataclass
class WinRateRow:
    system: str
    wins: int
    losses: int
    ties: int
    win_rate: float | None


@dataclass
class CitationErrorRow:
    system: str
    category: str
    reports: int
    e1: float
    e2: float
    e3: float

    @property
    def total(self) -> float:
        return self.e1 + self.e2 + self.e3


@dataclass
class AggregateTables:
    leaderboard: list[LeaderboardRow]
    win_rates: list[WinRateRow]
    citation_errors: list[CitationErrorRow]
    depth_baseline: str | None
    footnotes: list[str] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def aggregate(records: list[RunRecord], depth_baseline: str | None = None) -> AggregateTables:
    """Fold run records into the three output tables.

    Records may arrive in any order; everything is sorted before folding so
    shuffled input produces byte-identical tables.
    """
    ordered = sorted(records, key=lambda r: (r.system, r.task_id, r.metric))
    deduped: dict[tuple[str, str, str], RunRecord] = {}
    for record in ordered:
        key = (record.system, record.task_id, record.metric)
        if key in deduped:
            raise ValueError(f"duplicate run record for {key}")
        deduped[key] = record

    systems = sorted({r.system for r in ordered})
    footnotes: list[str] = []
    provenance: dict = {}

    leaderboard: list[LeaderboardRow] = []
    for system in systems:
        scores: dict[str, float | None] = {}
        cell_provenance: dict = {}
        for dimension in LEADERBOARD_DIMENSIONS:
            task_scores: list[float] = []
            tasks: dict = {}
            for record in ordered:
                if record.system != system or record.metric != dimension:
                    continue
                score = record.payload.get("score")
                tasks[record.task_id] = {"score": score, "transcript": record.transcript}
                if score is not None:
                    task_scores.append(float(score))
            scores[dimension] = _mean(task_scores) if task_scores else None
            if tasks:
                cell_provenance[dimension] = tasks
            if scores[dimension] is None:
                footnotes.append(f"{system}: {dimension} unavailable; excluded from Avg")
        present = [s for s in scores.values() if s is not None]
        avg = _mean(present) if present else None
        leaderboard.append(LeaderboardRow(system=system, scores=scores, avg=avg))
        provenance[system] = cell_provenance

    win_rates: list[WinRateRow] = []
    for system in systems:
        if depth_baseline is None or system == depth_baseline:
            continue
        verdicts = [
            r.payload.get("verdict")
            for r in ordered
            if r.system == system and r.metric == "depth"
        ]
        verdicts = [v for v in verdicts if v is not None]
        if not verdicts:
            continue
        wins = sum(1 for v in verdicts if v == "A")
        losses = sum(1 for v in verdicts if v == "B")
        ties = sum(1 for v in verdicts if v == "tie")
        rate = wins / (wins + losses) if wins + losses else None
        win_rates.append(
            WinRateRow(system=system, wins=wins, losses=losses, ties=ties, win_rate=rate)
        )

    citation_errors: list[CitationErrorRow] = []
    by_cell: dict[tuple[str, str], list[dict]] = {}
    for record in ordered:
        if record.metric != "accuracy":
            continue
        by_cell.setdefault((record.system, record.category), []).append(record.payload)
    for (system, category), payloads in sorted(by_cell.items()):
        citation_errors.append(
            CitationErrorRow(
                system=system,
                category=category,
                reports=len(payloads),
                e1=_mean([float(p.get("e1", 0)) for p in payloads]),
                e2=_mean([float(p.get("e2", 0)) for p in payloads]),
                e3=_mean([float(p.get("e3", 0)) for p in payloads]),
            )
        )

    return AggregateTables(
        leaderboard=leaderboard,
        win_rates=win_rates,
        citation_errors=citation_errors,
        depth_baseline=depth_baseline,
        footnotes=footnotes,
        provenance=provenance,
    )


def round_display(value: float | None, places: int = 1) -> str:
    """Half-up decimal rendering; undefined values become an em dash."""
    if value is None:
        return UNAVAILABLE_CELL
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(str(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def _leaderboard_cells(row: LeaderboardRow) -> list[str]:
    cells = [row.system]
    for dimension in LEADERBOARD_DIMENSIONS:
        cells.append(round_display(row.scores.get(dimension)))
    cells.append(round_display(row.avg))
    return cells


def render(tables: AggregateTables, fmt: str) -> str:
    """Render the aggregate tables as a json, csv, or markdown document."""
    if fmt == "json":
        return _render_json(tables)
    if fmt == "csv":
        return _render_csv(tables)
    if fmt == "markdown":
        return _render_markdown(tables)
    raise ValueError(f"unknown render format {fmt!r}")


def _render_json(tables: AggregateTables) -> str:
    document = {
        "leaderboard": [
            {
                "system": row.system,
                "scores": row.scores,
                "avg": row.avg,
                "provenance": tables.provenance.get(row.system, {}),
            }
            for row in tables.leaderboard
        ],
        "win_rates": {
            "baseline": tables.depth_baseline,
            "rows": [
                {
                    "system": row.system,
                    "wins": row.wins,
                    "losses": row.losses,
                    "ties": row.ties,
                    "win_rate": row.win_rate,
                }
                for row in tables.win_rates
            ],
        },
        "citation_errors": [
            {
                "system": row.system,
                "category": row.category,
                "reports": row.reports,
                "e1": row.e1,
                "e2": row.e2,
                "e3": row.e3,
                "total": row.total,
            }
            for row in tables.citation_errors
        ],
        "footnotes": tables.footnotes,
    }
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _render_csv(tables: AggregateTables) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["Agent Name"] + [LEADERBOARD_HEADERS[d] for d in LEADERBOARD_DIMENSIONS] + ["Avg"]
    )
    for row in tables.leaderboard:
        writer.writerow(_leaderboard_cells(row))
    return buffer.getvalue()


def _md_table(headers: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(headers) + " |", "|" + "|".join(" --- " for _ in headers) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return lines


def _render_markdown(tables: AggregateTables) -> str:
    lines: list[str] = ["# Leaderboard", ""]
    lines += _md_table(
        ["Agent Name"] + [LEADERBOARD_HEADERS[d] for d in LEADERBOARD_DIMENSIONS] + ["Avg"],
        [_leaderboard_cells(row) for row in tables.leaderboard],
    )
    if tables.footnotes:
        lines.append("")
        for note in sorted(set(tables.footnotes)):
            lines.append(f"- {note}")
    if tables.win_rates:
        lines += ["", f"# Analysis Depth (win rate vs {tables.depth_baseline})", ""]
        lines += _md_table(
            ["Agent Name", "Wins", "Losses", "Ties", "Win Rate"],
            [
                [
                    row.system,
                    str(row.wins),
                    str(row.losses),
                    str(row.ties),
                    round_display(row.win_rate, places=3),
                ]
                for row in tables.win_rates
            ],
        )
    if tables.citation_errors:
        lines += ["", "# Citation Accuracy (mean errors per report)", ""]
        lines += _md_table(
            ["Agent Name", "Task Category", "Reports", "E1 Errors", "E2 Errors", "E3 Errors", "Total"],
            [
                [
                    row.system,
                    row.category or UNAVAILABLE_CELL,
                    str(row.reports),
                    round_display(row.e1),
                    round_display(row.e2),
                    round_display(row.e3),
                    round_display(row.total),
                ]
                for row in tables.citation_errors
            ],
        )
    return "\n".join(lines) + "\n"
