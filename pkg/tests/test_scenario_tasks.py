import json

import pytest

from celery_app.tasks.scenario_tasks import RESULT_KEYS, run_scenario_task


def test_task_runs_scenario_eagerly(tmp_path):
    out = tmp_path / "oracles"
    result = run_scenario_task.apply(args=("[checks]\noracle_tolerance = 1e-8\n", "check-oracles", str(out))).get()
    assert result["status"] == "success"
    assert result["passed"]
    assert set(result) <= set(RESULT_KEYS)
    assert str(out / "oracles.csv") in result["artifacts"]
    json.dumps(result)


def test_task_applies_overrides(tmp_path):
    out = tmp_path / "steady"
    text = "[grid]\nn_x = 32\nn_p = 48\np_max = 6\n[output]\nwrite_raw = false\n"
    result = run_scenario_task.apply(args=(text, "steady-linear", str(out)),
                                     kwargs={"overrides": {"mass": 2.0}}).get()
    assert result["passed"]
    assert result["summary"]["mass"] == pytest.approx(2.0, rel=1e-12)


def test_task_reports_config_error(tmp_path):
    out = tmp_path / "bad"
    result = run_scenario_task.apply(args=("[grid]\nn_p = 1\n", "run-linear", str(out))).get()
    assert result["status"] == "error"
    assert not result["passed"]
    assert (out / "failure.json").exists()
