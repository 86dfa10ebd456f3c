import json

import pandas as pd
import pytest
from click.testing import CliRunner

from cli import EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, cli

LIGHTCONE = """\
[scenario]
kind = check-lightcone

[grid]
n_x = 32
n_p = 64

[potential]
kind = free

[solver]
t_end = 2.0
initial = compact
p_shift = 0.0
lightcone_step = true
{extra}

[output]
write_raw = false
"""

SMALL_LINEAR = """\
[grid]
n_x = 32
n_p = 48
p_max = 6

[potential]
kind = harmonic

[solver]
dt = 1e-3
t_end = 0.05
record_every = 5

[checks]
entropy_tolerance = 0.5

[output]
write_raw = false
"""


@pytest.fixture
def runner():
    return CliRunner()


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_check_oracles_passes(runner, tmp_path):
    out = tmp_path / "oracles"
    result = runner.invoke(cli, ["check-oracles", "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    table = pd.read_csv(out / "oracles.csv")
    assert table["pass"].all()
    assert pd.read_csv(out / "checks.csv")["passed"].all()
    assert (out / "manifest").exists()


def test_lightcone_within_cone(runner, tmp_path):
    config = _write(tmp_path, "cone.cfg", LIGHTCONE.format(extra=""))
    out = tmp_path / "cone"
    result = runner.invoke(cli, ["check-lightcone", "--config", config, "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    frame = pd.read_csv(out / "lightcone.csv")
    assert (frame["margin"] >= 0.0).all()
    assert (out / "snapshot_t0000.csv").exists()


def test_superluminal_transport_leaves_cone(runner, tmp_path):
    config = _write(tmp_path, "fast.cfg", LIGHTCONE.format(extra="superluminal_factor = 1.5"))
    result = runner.invoke(cli, ["check-lightcone", "--config", config, "--out", str(tmp_path / "fast")])
    assert result.exit_code == EXIT_CHECK_FAILED, result.output


def test_steady_linear_with_mass_override(runner, tmp_path):
    config = _write(tmp_path, "steady.cfg", SMALL_LINEAR)
    out = tmp_path / "steady"
    result = runner.invoke(cli, ["steady-linear", "--config", config, "--out", str(out), "--mass", "3.0"])
    assert result.exit_code == EXIT_OK, result.output
    frame = pd.read_csv(out / "snapshot_t0000.csv")
    spacing = (16.0 / 32) * (12.0 / 48)
    assert frame["f"].sum() * spacing == pytest.approx(3.0, rel=1e-12)


def test_run_linear_writes_diagnostics(runner, tmp_path):
    config = _write(tmp_path, "run.cfg", SMALL_LINEAR)
    out = tmp_path / "run"
    result = runner.invoke(cli, ["run-linear", "--config", config, "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    diagnostics = pd.read_csv(out / "diagnostics.csv")
    assert list(diagnostics.columns)[:3] == ["t", "mass", "Q"]
    assert diagnostics["Q"].is_monotonic_decreasing
    assert (out / "snapshots.csv").exists()
    checks = pd.read_csv(out / "checks.csv").set_index("name")
    assert {"mass_drift", "continuity", "entropy_identity", "chi2_non_increasing"} <= set(checks.index)
    assert checks.loc["continuity", "value"] <= 1e-12
    assert checks.loc["entropy_identity", "value"] < 0.5


def test_check_invariance_in_two_dimensions(runner, tmp_path):
    config = _write(tmp_path, "inv.cfg", "[grid]\nd = 2\n[checks]\nn_points = 5\nboost = 0.3\n")
    out = tmp_path / "inv"
    result = runner.invoke(cli, ["check-invariance", "--config", config, "--out", str(out), "--seed", "3"])
    assert result.exit_code == EXIT_OK, result.output
    assert (out / "invariance.csv").exists()


def test_bad_config_writes_failure(runner, tmp_path):
    config = _write(tmp_path, "bad.cfg", "[grid]\nn_xx = 16\n")
    out = tmp_path / "bad"
    result = runner.invoke(cli, ["run-linear", "--config", config, "--out", str(out)])
    assert result.exit_code == EXIT_ERROR
    record = json.loads((out / "failure.json").read_text(encoding="utf-8"))
    assert record["error_type"] == "ConfigError"
    assert record["details"]["line"] == 2


def test_solver_error_writes_failure(runner, tmp_path):
    config = _write(tmp_path, "cfl.cfg", SMALL_LINEAR.replace("dt = 1e-3", "dt = 1.0").replace("t_end = 0.05", "t_end = 2.0"))
    out = tmp_path / "cfl"
    result = runner.invoke(cli, ["run-linear", "--config", config, "--out", str(out)])
    assert result.exit_code == EXIT_ERROR
    record = json.loads((out / "failure.json").read_text(encoding="utf-8"))
    assert record["error_type"] == "CFLViolationError"
    assert record["details"]["direction"] in ("x", "p")


def test_kind_mismatch_is_config_error(runner, tmp_path):
    config = _write(tmp_path, "kind.cfg", "[scenario]\nkind = check-oracles\n")
    result = runner.invoke(cli, ["steady-vmfp", "--config", config, "--out", str(tmp_path / "kind")])
    assert result.exit_code == EXIT_ERROR
