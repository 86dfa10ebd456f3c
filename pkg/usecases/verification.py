"""
Проверки без интегрирования по времени: инвариантность операторов и
эталонные значения импульсных интегралов.
"""
import os
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from scipy.special import kn

from invariance_lab import (
    InvarianceReport,
    convergence_order,
    galilean_invariance_residual,
    gaussian_function,
    lorentz_invariance_residual,
    sample_points,
)
from logger_config import setup_logger
from mean_field_steady import (
    MomentumGrid,
    density_integral_closed_form,
    momentum_density_integral,
    momentum_number_integral,
    number_integral_closed_form,
)
from parsers.scenario_parser import Scenario
from usecases.reporting import build_result, check_row, prepare_output, relative_error
from utils.io_utils import write_frame, write_manifest

logger = setup_logger("verification")

NEGATIVE_CONTROL_BETA = 1.0
NEGATIVE_CONTROL_U = 0.6
NEGATIVE_CONTROL_MIN = 1e-2
ORDER_STEPS = (0.1, 0.05)
MIN_ORDER = 1.8
SMALL_A = 1e-6
GRID_A = np.linspace(0.3, 5.0, 10)
MONOTONE_A = np.linspace(0.5, 3.0, 26)


def _boost_vector(value: float, d: int) -> np.ndarray:
    u = np.zeros(d)
    u[0] = value
    return u


def _report_rows(report: InvarianceReport, label: str) -> pd.DataFrame:
    frame = report.to_frame()
    frame.insert(0, "check", label)
    frame.insert(1, "u", float(np.linalg.norm(report.u)))
    frame.insert(2, "beta", report.beta)
    frame.insert(3, "h", report.h)
    return frame


def check_invariance(scenario: Scenario, out_dir: str) -> Dict[str, Any]:
    """
    Лоренцева инвариантность релятивистского оператора и галилеева классического при beta = 0

    Дополнительно: отрицательный контроль с трением beta = 1 (расхождение
    должно быть большим) и наблюдаемый порядок разностей без экстраполяции.

    Args:
        scenario: Сценарий check-invariance
        out_dir: Директория результатов

    Returns:
        Dict[str, Any]: Итог сценария и отчеты для таблицы
    """
    prepare_output(out_dir)
    c = scenario.checks
    d = scenario.grid.d
    rng = np.random.default_rng(scenario.seed)
    points = sample_points(c.n_points, d, rng)
    f = gaussian_function(d)

    reports = []
    checks: List[Dict[str, Any]] = []
    for value in c.boost:
        report = lorentz_invariance_residual(_boost_vector(value, d), f, points, beta=0.0,
                                             h=c.fd_step, tolerance=c.invariance_tolerance)
        reports.append(("lorentz", report))
        checks.append(check_row(f"lorentz_u={value:g}", report.max_discrepancy,
                                c.invariance_tolerance, report.passed))
    for value in c.galilean_boost:
        report = galilean_invariance_residual(_boost_vector(value, d), f, points, beta=0.0,
                                              h=c.fd_step, tolerance=c.invariance_tolerance)
        reports.append(("galilean", report))
        checks.append(check_row(f"galilean_u={value:g}", report.max_discrepancy,
                                c.invariance_tolerance, report.passed))

    control_u = _boost_vector(NEGATIVE_CONTROL_U, d)
    control = lorentz_invariance_residual(control_u, f, points, beta=NEGATIVE_CONTROL_BETA,
                                          h=c.fd_step, tolerance=c.invariance_tolerance)
    reports.append(("negative_control", control))
    checks.append(check_row("negative_control_beta=1", control.max_discrepancy, NEGATIVE_CONTROL_MIN,
                            control.max_discrepancy > NEGATIVE_CONTROL_MIN))

    coarse_h, fine_h = ORDER_STEPS
    coarse = lorentz_invariance_residual(control_u, f, points, h=coarse_h, richardson=False)
    fine = lorentz_invariance_residual(control_u, f, points, h=fine_h, richardson=False)
    order = convergence_order(coarse, fine)
    checks.append(check_row("observed_order", order, MIN_ORDER, order >= MIN_ORDER))

    frame = pd.concat([_report_rows(r, label) for label, r in reports], ignore_index=True)
    artifacts = [write_frame(frame, os.path.join(out_dir, "invariance.csv"), scenario.output.float_format)]
    artifacts.append(write_manifest(out_dir, scenario.kind, scenario.source, {
        "n_points": c.n_points,
        "fd_step": c.fd_step,
        "seed": scenario.seed,
    }))
    result = build_result(scenario.kind, checks, artifacts, {"order": order})
    result["reports"] = [(label, r) for label, r in reports]
    return result


def _oracle(name: str, computed: float, expected: float, tolerance: float) -> Dict[str, Any]:
    error = relative_error(computed, expected)
    return {"name": name, "computed": computed, "expected": expected,
            "rel_error": error, "tolerance": tolerance, "pass": error <= tolerance}


def oracle_table(tolerance: float, momentum: MomentumGrid) -> pd.DataFrame:
    """
    Сравнение квадратур с замкнутыми формами через функции Макдональда

    Returns:
        pd.DataFrame: name, computed, expected, rel_error, tolerance, pass
    """
    rows = [
        _oracle("number_integral(a=1)", momentum_number_integral(1.0), 4.0 * np.pi * kn(1, 1.0), tolerance),
        _oracle("density_integral_d3(a=1)", momentum_density_integral(1.0, 3), 4.0 * np.pi * kn(2, 1.0), tolerance),
        _oracle("density_integral_d1(a=1)", momentum_density_integral(1.0, 1), 2.0 * kn(1, 1.0), tolerance),
        _oracle(f"number_integral(a={SMALL_A:g})", momentum_number_integral(SMALL_A), 4.0 * np.pi, tolerance),
    ]
    numbers = momentum.number_integral(GRID_A)
    densities = momentum.density_integral(GRID_A)
    for a, n_value, rho_value in zip(GRID_A, numbers, densities):
        rows.append(_oracle(f"grid_number(a={a:.4g})", float(n_value),
                            float(number_integral_closed_form(a)), tolerance))
        rows.append(_oracle(f"grid_density(a={a:.4g})", float(rho_value),
                            float(density_integral_closed_form(a, 3)), tolerance))

    values = number_integral_closed_form(MONOTONE_A)
    steps = np.diff(values)
    rows.append({"name": "number_integral_decreasing", "computed": float(steps.max()), "expected": 0.0,
                 "rel_error": float(max(steps.max(), 0.0)), "tolerance": 0.0, "pass": bool(np.all(steps < 0.0))})
    return pd.DataFrame(rows)


def check_oracles(scenario: Scenario, out_dir: str) -> Dict[str, Any]:
    """Эталонные значения импульсных интегралов; oracles.csv."""
    prepare_output(out_dir)
    tolerance = scenario.checks.oracle_tolerance
    table = oracle_table(tolerance, scenario.fixed_point_config().momentum)
    artifacts = [write_frame(table, os.path.join(out_dir, "oracles.csv"), scenario.output.float_format)]
    artifacts.append(write_manifest(out_dir, scenario.kind, scenario.source, {"tolerance": tolerance}))
    checks = [check_row(row["name"], row["rel_error"], row["tolerance"], row["pass"])
              for row in table.to_dict("records")]
    result = build_result(scenario.kind, checks, artifacts, {"oracles": len(table)})
    result["table"] = table
    return result
