from pathlib import Path

import pytest

from config import SCENARIO_KINDS, get_section_defaults
from parsers.scenario_parser import ConfigError, load_config, parse_config

BASE = """\
# эталонный прогон
[scenario]
kind = run-linear
mass = 2.0 ; масса

[grid]
n_x = 64
n_p = 32

[solver]
splitting = lie
snapshot_times = 0.1, 0.5 ,1.0
transport_enabled = false
"""


def test_parse_full_scenario():
    scenario = parse_config(BASE)
    assert scenario.kind == "run-linear"
    assert scenario.mass == 2.0
    assert scenario.grid.n_x == 64
    assert scenario.grid.x_max == 8.0
    assert scenario.solver.snapshot_times == (0.1, 0.5, 1.0)
    assert scenario.solver.transport_enabled is False
    assert scenario.source == BASE

    grid = scenario.phase_grid()
    assert grid.shape == (64, 32)
    config = scenario.solver_config()
    assert config.splitting == "lie"
    assert not config.transport_enabled


@pytest.mark.parametrize("section", ["grid", "potential", "solver", "steady", "checks", "output"])
def test_empty_section_takes_config_defaults(section):
    scenario = parse_config("", "run-linear")
    assert getattr(scenario, section).model_dump() == get_section_defaults(section)


def test_scenario_defaults_and_unknown_section():
    scenario = parse_config("", "run-linear")
    defaults = get_section_defaults("scenario")
    assert (scenario.seed, scenario.mass) == (defaults["seed"], defaults["mass"])
    with pytest.raises(ValueError):
        get_section_defaults("plot")


def test_kind_from_command_line():
    scenario = parse_config("[grid]\nn_x = 16\n", "check-oracles")
    assert scenario.kind == "check-oracles"
    assert parse_config("", "steady-vmfp").kind == "steady-vmfp"


def test_missing_kind():
    with pytest.raises(ConfigError, match="kind"):
        parse_config("[grid]\nn_x = 16\n")


def test_kind_mismatch_points_to_line():
    with pytest.raises(ConfigError) as info:
        parse_config(BASE, "steady-vmfp")
    assert info.value.line == 3


def test_unknown_key_has_line_and_suggestion():
    text = "[scenario]\nkind = run-linear\n[grid]\nn_xx = 10\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == 4
    assert info.value.suggestion == "n_x"
    assert "n_x" in str(info.value)


def test_unknown_section_suggestion():
    with pytest.raises(ConfigError) as info:
        parse_config("[gird]\nn_x = 10\n", "run-linear")
    assert info.value.line == 1
    assert info.value.suggestion == "grid"


@pytest.mark.parametrize("text, line", [
    ("[grid]\nn_x = 10\nn_x = 20\n", 3),
    ("[grid]\n[grid]\n", 2),
    ("n_x = 10\n", 1),
    ("[grid]\nn_x =\n", 2),
    ("[grid]\njust text\n", 2),
])
def test_malformed_lines(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "run-linear")
    assert info.value.line == line


def test_invalid_value_reports_key_line():
    text = "[scenario]\nkind = run-linear\n\n[solver]\ndt = -1\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == 5
    assert "dt" in str(info.value)


def test_section_level_validation_uses_header_line():
    with pytest.raises(ConfigError) as info:
        parse_config("[grid]\nx_min = 1\nx_max = 0\n", "run-linear")
    assert info.value.line == 1


def test_epsilons_must_be_below_one():
    with pytest.raises(ConfigError):
        parse_config("[steady]\nepsilons = 0.1, 1.5\n", "steady-vmfp")


def test_tabulated_potential_needs_table():
    with pytest.raises(ConfigError):
        parse_config("[potential]\nkind = tabulated\n", "run-linear")
    text = "[potential]\nkind = tabulated\ntable_r = 0, 1, 2, 3, 4\ntable_v = 0, 0.5, 2, 4.5, 8\n"
    V = parse_config(text, "run-linear").external_potential()
    assert V.kind == "tabulated"
    assert float(V.radial(2.0)) == pytest.approx(2.0, rel=1e-2)


def test_with_overrides_revalidates():
    scenario = parse_config(BASE)
    updated = scenario.with_overrides({"mass": 3.0, "steady.tol": 1e-8, "seed": None})
    assert updated.mass == 3.0
    assert updated.steady.tol == 1e-8
    assert updated.seed == scenario.seed
    assert scenario.mass == 2.0
    with pytest.raises(ConfigError, match="mass"):
        scenario.with_overrides({"mass": -1.0})


def test_fixed_point_config_from_scenario():
    text = "[grid]\nr_max = 6\nn_r = 120\n[steady]\ndamping = 0.7\ncontinuation_seed_mass = 0.02\n"
    config = parse_config(text, "steady-vnfp").fixed_point_config()
    assert config.grid.n_r == 120
    assert config.damping == 0.7
    assert config.seed_mass == 0.02


def test_load_config(tmp_path):
    path = tmp_path / "scenario.cfg"
    path.write_text(BASE, encoding="utf-8")
    assert load_config(str(path)).grid.n_p == 32


SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.mark.parametrize("path", sorted(SCENARIO_DIR.glob("*.cfg")), ids=lambda p: p.stem)
def test_shipped_scenarios_parse(path):
    scenario = load_config(str(path))
    assert scenario.kind in SCENARIO_KINDS
    assert path.stem.startswith(scenario.kind.replace("-", "_"))


def test_reference_scenarios():
    vnfp = load_config(str(SCENARIO_DIR / "steady_vnfp.cfg"))
    assert vnfp.mass == 1.0
    linear = load_config(str(SCENARIO_DIR / "run_linear.cfg"))
    assert linear.solver.t_end == 0.2
    assert linear.checks.entropy_tolerance == 0.05
