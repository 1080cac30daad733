from __future__ import annotations

import json

import pytest

from reporteval.runner import ConfigError, RunConfig, execute, plan_run


def _load(env, **overrides):
    return RunConfig.load(env.config_path, url_rewrites=env.rewrites, **overrides)


def test_plan_enumerates_units(e2e_env):
    config = _load(e2e_env)
    plan = plan_run(config)
    # 3 systems x 3 tasks x 5 per-report metrics + 2 systems x 3 tasks depth pairs
    assert len(plan.units) == 45 + 6
    assert not plan.absent_units()


def test_plan_unit_count_is_systems_by_tasks_by_metrics(e2e_env):
    config = _load(e2e_env, metrics=("presentation", "consistency"))
    plan = plan_run(config)
    per_system = {u.system for u in plan.units}
    assert len(plan.units) == 3 * 3 * 2
    assert per_system == {"alpha-research", "beta-search", "gamma-baseline"}


def test_plan_with_explicit_two_system_roster_is_twelve_units(e2e_env):
    import json as _json

    raw = _json.loads(e2e_env.config_path.read_text())
    raw["systems"] = {
        name: {tid: f"reports/{name}/{tid}.md" for tid in ("t1", "t2", "t3")}
        for name in ("alpha-research", "beta-search")
    }
    raw["metrics"] = ["presentation", "consistency"]
    e2e_env.config_path.write_text(_json.dumps(raw))
    plan = plan_run(_load(e2e_env))
    assert len(plan.units) == 2 * 3 * 2
    assert all(not u.absent for u in plan.units)


def test_missing_report_marked_absent(e2e_env):
    (e2e_env.root / "reports" / "beta-search" / "t2.md").unlink()
    config = _load(e2e_env)
    plan = plan_run(config)
    absent = {u.key for u in plan.absent_units()}
    assert ("beta-search", "t2", "coverage") in absent
    assert ("beta-search", "t2", "depth") in absent


def test_depth_baseline_must_exist(e2e_env):
    with pytest.raises(ConfigError, match="baseline"):
        plan_run(_load(e2e_env, depth_baseline="nonexistent"))


def test_execute_full_run_scores(e2e_env):
    config = _load(e2e_env)
    result = execute(plan_run(config), config)
    assert result.exit_code == 0 and not result.failures
    assert result.executed == 51

    leaderboard = json.loads((result.results_dir / "leaderboard.json").read_text())
    rows = {row["system"]: row for row in leaderboard["leaderboard"]}
    alpha, beta, gamma = (
        rows["alpha-research"],
        rows["beta-search"],
        rows["gamma-baseline"],
    )
    assert alpha["scores"]["presentation"] == pytest.approx(295 / 3)
    assert alpha["scores"]["coverage"] == 100.0
    assert alpha["scores"]["association"] == 100.0
    assert beta["scores"]["coverage"] == pytest.approx(75.0)
    assert beta["scores"]["consistency"] == pytest.approx((85 + 90 + 100) / 3)
    assert gamma["scores"]["coverage"] == pytest.approx((25 + 75 + 100) / 3)

    win_rows = {r["system"]: r for r in leaderboard["win_rates"]["rows"]}
    assert win_rows["alpha-research"]["wins"] == 3
    assert win_rows["alpha-research"]["win_rate"] == 1.0
    assert win_rows["beta-search"]["losses"] == 2
    assert win_rows["beta-search"]["ties"] == 1
    assert win_rows["beta-search"]["win_rate"] == 0.0

    citation_rows = {
        (r["system"], r["category"]): r for r in leaderboard["citation_errors"]
    }
    assert citation_rows[("alpha-research", "market analysis")]["e3"] == 1.0
    assert citation_rows[("beta-search", "market analysis")]["e1"] == 1.0
    assert citation_rows[("beta-search", "market analysis")]["e2"] == 1.0
    assert citation_rows[("beta-search", "wide information search")]["e1"] == 1.0


def test_network_requests_bounded_by_distinct_urls(e2e_env):
    config = _load(e2e_env)
    execute(plan_run(config), config)
    # solid1, solid2, solid3, weak1, dead1, offtopic1
    assert e2e_env.server.get_request_count() == 6


def test_rerun_is_idempotent_and_all_units_skippable(e2e_env):
    config = _load(e2e_env)
    plan = plan_run(config)
    first = execute(plan, config)
    assert plan_run(config).pending(config) == []
    second = execute(plan_run(config), config)
    assert second.executed == 0
    assert second.skipped == 51
    first_bytes = (first.results_dir / "leaderboard.json").read_bytes()
    assert (second.results_dir / "leaderboard.json").read_bytes() == first_bytes


def test_interrupt_and_resume_matches_uninterrupted(e2e_env, tmp_path):
    config = _load(e2e_env)
    interrupted = execute(plan_run(config), config, stop_after=7)
    assert interrupted.interrupted and interrupted.results_dir is None
    resumed = execute(plan_run(config), config)
    assert resumed.exit_code == 0
    assert resumed.executed == 51 - 7

    clean_root = tmp_path / "clean"
    import shutil

    shutil.copytree(e2e_env.root, clean_root, ignore=shutil.ignore_patterns("cache", "results"))
    clean_config = RunConfig.load(clean_root / "config.json", url_rewrites=e2e_env.rewrites)
    clean = execute(plan_run(clean_config), clean_config)
    for name in ("leaderboard.json", "leaderboard.csv", "leaderboard.md", "manifest"):
        assert (resumed.results_dir / name).read_bytes() == (clean.results_dir / name).read_bytes()


def test_unit_failure_is_isolated(e2e_env):
    config = _load(e2e_env)
    plan = plan_run(config)
    (e2e_env.root / "reports" / "beta-search" / "t3.md").unlink()  # after planning
    result = execute(plan, config)
    assert result.exit_code == 1
    failed_units = {f.unit.key for f in result.failures}
    assert all(key[0] == "beta-search" and key[1] == "t3" for key in failed_units)
    leaderboard = json.loads((result.results_dir / "leaderboard.json").read_text())
    rows = {row["system"]: row for row in leaderboard["leaderboard"]}
    assert rows["alpha-research"]["scores"]["coverage"] == 100.0


def test_offline_with_cold_cache_aborts(e2e_env):
    config = _load(e2e_env, offline=True)
    with pytest.raises(ConfigError, match="cache required"):
        execute(plan_run(config), config)


def test_offline_replay_after_warm_run(e2e_env):
    config = _load(e2e_env)
    warm = execute(plan_run(config), config)
    requests_after_warm = e2e_env.server.get_request_count()

    import shutil

    shutil.rmtree(e2e_env.root / "cache" / "units")  # force re-judging, keep fetch cache
    offline_config = _load(e2e_env, offline=True)
    replay = execute(plan_run(offline_config), offline_config)
    assert replay.exit_code == 0
    assert e2e_env.server.get_request_count() == requests_after_warm
    assert (replay.results_dir / "leaderboard.json").read_bytes() == (
        warm.results_dir / "leaderboard.json"
    ).read_bytes()


def test_manifest_contents(e2e_env):
    config = _load(e2e_env)
    result = execute(plan_run(config), config)
    manifest = json.loads((result.results_dir / "manifest").read_text())
    assert manifest["run_id"] == "golden"
    assert manifest["eval_date"] == "2025-09-15"
    assert {t["id"] for t in manifest["tasks"]} == {"t1", "t2", "t3"}
    assert set(manifest["systems"]) == {"alpha-research", "beta-search", "gamma-baseline"}
    assert len(manifest["config_hash"]) == 64
    assert [j["judge_id"] for j in manifest["judges"]] == ["alpha", "beta"]


def test_transcripts_written_per_unit(e2e_env):
    config = _load(e2e_env)
    result = execute(plan_run(config), config)
    transcript = result.results_dir / "transcripts" / "alpha-research" / "t1" / "consistency.json"
    record = json.loads(transcript.read_text())
    assert record["payload"]["score"] == 95.0
    assert record["payload"]["per_judge_scores"] == {"alpha": 100.0, "beta": 90.0}


def test_unusable_judge_roster_is_config_error(e2e_env):
    import json as _json

    raw = _json.loads(e2e_env.config_path.read_text())
    raw["judges"] = [{"judge_id": "x", "endpoint": "carrier-pigeon:coop"}]
    e2e_env.config_path.write_text(_json.dumps(raw))
    config = _load(e2e_env)
    with pytest.raises(ConfigError, match="judge roster"):
        execute(plan_run(config), config)


def test_band_table_override_via_config(e2e_env):
    import json as _json

    raw = _json.loads(e2e_env.config_path.read_text())
    raw["band_tables"] = {"consistency": [[0, 100], [None, 1]]}
    e2e_env.config_path.write_text(_json.dumps(raw))
    config = _load(e2e_env, metrics=("consistency",))
    result = execute(plan_run(config), config)
    transcript = (
        result.results_dir / "transcripts" / "gamma-baseline" / "t1" / "consistency.json"
    )
    import json

    record = json.loads(transcript.read_text())
    # one planted issue now falls into the harsh terminal band for both judges
    assert record["payload"]["score"] == 1.0
