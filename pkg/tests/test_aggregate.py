from __future__ import annotations

import json
import random

import pytest

from reporteval.aggregate import RunRecord, aggregate, render, round_display


def _score_record(system, task, metric, score, category="market analysis"):
    return RunRecord(
        system=system,
        task_id=task,
        metric=metric,
        category=category,
        payload={"metric": metric, "score": score},
        transcript=f"transcripts/{system}/{task}/{metric}.json",
    )


def _depth_record(system, task, verdict):
    return RunRecord(
        system=system,
        task_id=task,
        metric="depth",
        payload={"metric": "depth", "verdict": verdict},
        transcript=f"transcripts/{system}/{task}/depth.json",
    )


def _accuracy_record(system, task, e1, e2, e3, category):
    return RunRecord(
        system=system,
        task_id=task,
        metric="accuracy",
        category=category,
        payload={"metric": "accuracy", "e1": e1, "e2": e2, "e3": e3, "total": e1 + e2 + e3},
    )


def test_table_one_row_arithmetic():
    dims = {"presentation": 71.6, "consistency": 68.3, "coverage": 83.4, "association": 69.0}
    records = [_score_record("system-a", "t1", metric, score) for metric, score in dims.items()]
    tables = aggregate(records)
    row = tables.leaderboard[0]
    assert round_display(row.avg) == "73.1"


def test_dimension_scores_are_task_means():
    records = [
        _score_record("s", "t1", "coverage", 80.0),
        _score_record("s", "t2", "coverage", 60.0),
    ]
    tables = aggregate(records)
    assert tables.leaderboard[0].scores["coverage"] == 70.0


def test_shuffled_records_render_identically():
    rng = random.Random(3)
    records = []
    for system in ("a-sys", "b-sys"):
        for task in ("t1", "t2", "t3"):
            for metric in ("presentation", "consistency", "coverage", "association"):
                records.append(_score_record(system, task, metric, rng.uniform(40, 95)))
            records.append(_depth_record(system, task, rng.choice(["A", "B", "tie"])))
            records.append(_accuracy_record(system, task, 1, 0, 2, "market analysis"))
    baseline_docs = [render(aggregate(records, depth_baseline="a-sys"), f) for f in ("json", "csv", "markdown")]
    for seed in (1, 2, 3):
        shuffled = records[:]
        random.Random(seed).shuffle(shuffled)
        docs = [render(aggregate(shuffled, depth_baseline="a-sys"), f) for f in ("json", "csv", "markdown")]
        assert docs == baseline_docs


def test_duplicate_records_rejected():
    records = [_score_record("s", "t", "coverage", 1.0), _score_record("s", "t", "coverage", 2.0)]
    with pytest.raises(ValueError, match="duplicate"):
        aggregate(records)


def test_missing_metric_renders_unavailable_and_footnoted():
    records = [_score_record("s", "t1", "coverage", 80.0)]
    tables = aggregate(records)
    row = tables.leaderboard[0]
    assert row.scores["presentation"] is None
    assert row.avg == 80.0
    assert any("presentation unavailable" in n for n in tables.footnotes)
    markdown = render(tables, "markdown")
    assert "—" in markdown


def test_markdown_leaderboard_shape():
    records = [
        _score_record(system, "t1", metric, 50.0)
        for system in ("sys-one", "sys-two")
        for metric in ("presentation", "consistency", "coverage", "association")
    ]
    markdown = render(aggregate(records), "markdown")
    lines = [l for l in markdown.splitlines() if l.startswith("|")]
    assert "Agent Name" in lines[0] and "Avg" in lines[0]
    assert len(lines) == 4  # header + separator + 2 system rows


def test_undefined_win_rate_renders_em_dash():
    records = [_depth_record("s", t, "tie") for t in ("t1", "t2")]
    records.append(_score_record("s", "t1", "coverage", 50.0))
    records.append(_score_record("base", "t1", "coverage", 50.0))
    tables = aggregate(records, depth_baseline="base")
    assert tables.win_rates[0].win_rate is None
    markdown = render(tables, "markdown")
    assert "| s | 0 | 0 | 2 | — |" in markdown


def test_win_rate_row_counts():
    verdicts = ["A"] * 4 + ["B"] * 2 + ["tie"] * 4
    records = [_depth_record("s", f"t{i}", v) for i, v in enumerate(verdicts)]
    tables = aggregate(records, depth_baseline="base")
    row = tables.win_rates[0]
    assert (row.wins, row.losses, row.ties) == (4, 2, 4)
    assert round_display(row.win_rate, places=3) == "0.667"


def test_citation_errors_averaged_per_category():
    records = [
        _accuracy_record("s", "t1", 2, 1, 3, "market analysis"),
        _accuracy_record("s", "t2", 4, 1, 5, "market analysis"),
        _accuracy_record("s", "t3", 0, 0, 1, "wide information search"),
    ]
    tables = aggregate(records)
    by_category = {(r.system, r.category): r for r in tables.citation_errors}
    market = by_category[("s", "market analysis")]
    assert (market.e1, market.e2, market.e3) == (3.0, 1.0, 4.0)
    assert market.total == 8.0
    assert by_category[("s", "wide information search")].reports == 1


def test_json_round_trip():
    records = [
        _score_record("s", "t1", "coverage", 81.25),
        _depth_record("s", "t1", "A"),
        _accuracy_record("s", "t1", 1, 2, 3, "market analysis"),
    ]
    tables = aggregate(records, depth_baseline="base")
    document = json.loads(render(tables, "json"))
    assert document["leaderboard"][0]["scores"]["coverage"] == 81.25
    assert document["win_rates"]["rows"][0]["wins"] == 1
    assert document["citation_errors"][0]["total"] == 6.0
    # full precision preserved in JSON, display rounding only in csv/markdown
    assert document["leaderboard"][0]["avg"] == 81.25


def test_csv_has_header_and_rows():
    records = [_score_record("s", "t1", "coverage", 80.0)]
    csv_text = render(aggregate(records), "csv")
    lines = csv_text.strip().splitlines()
    assert lines[0].startswith("Agent Name,Presentation & Organization")
    assert lines[1].startswith("s,")


def test_round_display_half_up():
    assert round_display(73.075) == "73.1"
    assert round_display(72.25) == "72.3"  # half-up, not banker's
    assert round_display(0.05) == "0.1"
    assert round_display(None) == "—"
    assert round_display(2 / 3, places=3) == "0.667"


def test_avg_matches_mean_within_rounding():
    records = [
        _score_record("s", "t1", m, v)
        for m, v in (
            ("presentation", 71.64),
            ("consistency", 68.31),
            ("coverage", 83.44),
            ("association", 68.97),
        )
    ]
    row = aggregate(records).leaderboard[0]
    mean = (71.64 + 68.31 + 83.44 + 68.97) / 4
    assert abs(row.avg - mean) < 0.05
