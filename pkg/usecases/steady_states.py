"""
Стационарные состояния систем с самосогласованным полем (VMFP и VNFP)
и сертификаты их минимальности.
"""
import os
from typing import Any, Dict, List

import numpy as np

from logger_config import setup_logger
from mean_field_steady import (
    ContinuationError,
    SteadyState,
    energy_vnfp,
    entropy_lower_bound,
    minimizer_certificate,
    sobolev_check,
    vmfp_entropy,
    vmfp_steady,
    vnfp_static_residual,
    vnfp_steady,
)
from parsers.scenario_parser import Scenario
from usecases.reporting import build_result, check_row, prepare_output, relative_error
from utils.io_utils import write_frame, write_manifest

logger = setup_logger("steady_states")


def _common_checks(scenario: Scenario, state: SteadyState, functional: float) -> List[Dict[str, Any]]:
    checks = scenario.checks
    config = scenario.fixed_point_config()
    mass_error = relative_error(state.distribution.mass(), state.mass)
    bound = entropy_lower_bound(state.mass, state.potential, config.grid, config.momentum)
    return [
        check_row("elliptic_residual", state.elliptic_residual, checks.residual_tolerance,
                  state.elliptic_residual <= checks.residual_tolerance),
        check_row("mass", mass_error, checks.mass_tolerance, mass_error <= checks.mass_tolerance),
        check_row("entropy_lower_bound", functional - bound, 0.0, functional >= bound),
    ]


def _certificate(scenario: Scenario, state: SteadyState, out_dir: str, n_jobs: int):
    rng = np.random.default_rng(scenario.seed)
    report = minimizer_certificate(state, scenario.steady.n_perturbations, scenario.steady.epsilons,
                                   rng=rng, n_jobs=n_jobs)
    path = write_frame(report.to_frame(), os.path.join(out_dir, "certificate.csv"),
                       scenario.output.float_format)
    return report, path


def _write_state(scenario: Scenario, state: SteadyState, out_dir: str) -> List[str]:
    fmt = scenario.output.float_format
    return [
        write_frame(state.profile_frame(), os.path.join(out_dir, "profile.csv"), fmt),
        write_frame(state.fixed_point.history_frame(), os.path.join(out_dir, "convergence.csv"), fmt),
    ]


def steady_vmfp(scenario: Scenario, out_dir: str, n_jobs: int = 1) -> Dict[str, Any]:
    """
    Стационарное состояние VMFP массы scenario.mass

    Args:
        scenario: Сценарий steady-vmfp
        out_dir: Директория результатов
        n_jobs: Число процессов для сертификата

    Returns:
        Dict[str, Any]: Итог сценария
    """
    prepare_output(out_dir)
    V = scenario.external_potential()
    state = vmfp_steady(scenario.mass, V, scenario.fixed_point_config())
    artifacts = _write_state(scenario, state, out_dir)

    entropy = vmfp_entropy(state.distribution, V)
    checks = _common_checks(scenario, state, entropy)
    report, path = _certificate(scenario, state, out_dir, n_jobs)
    artifacts.append(path)
    checks.append(check_row("certificate_min_gap", report.min_gap, 0.0, report.passed))
    checks.append(check_row("certificate_first_variation", float(np.max(np.abs(report.first_variation))),
                            report.stationarity_tol * max(abs(report.base_value), 1.0), report.stationary))

    artifacts.append(write_manifest(out_dir, scenario.kind, scenario.source, {
        "mass": scenario.mass,
        "potential": V.kind,
        "iterations": state.fixed_point.iterations,
        "seed": scenario.seed,
    }))
    summary = {
        "iterations": state.fixed_point.iterations,
        "contraction_ratio": state.fixed_point.contraction_ratio,
        "entropy": entropy,
        "min_gap": report.min_gap,
    }
    return build_result(scenario.kind, checks, artifacts, summary)


def steady_vnfp(scenario: Scenario, out_dir: str, n_jobs: int = 1) -> Dict[str, Any]:
    """
    Стационарное состояние VNFP с продолжением по массе

    Кроме общих проверок: отношение сжатия < 1, итерации u в [0, 1],
    неравенство Соболева для phi0 и невязки статического уравнения.
    При обрыве продолжения continuation.csv записывается до подъема ошибки.

    Returns:
        Dict[str, Any]: Итог сценария
    """
    prepare_output(out_dir)
    V = scenario.external_potential()
    fmt = scenario.output.float_format
    continuation_path = os.path.join(out_dir, "continuation.csv")
    try:
        state = vnfp_steady(scenario.mass, V, scenario.fixed_point_config())
    except ContinuationError as e:
        write_frame(e.continuation.stages_frame(), continuation_path, fmt)
        raise

    artifacts = _write_state(scenario, state, out_dir)
    if state.continuation is not None:
        artifacts.append(write_frame(state.continuation.stages_frame(), continuation_path, fmt))

    energy = energy_vnfp(state.distribution, state.field, V)
    checks = _common_checks(scenario, state, energy)
    tolerance = scenario.checks.residual_tolerance
    ratio = state.fixed_point.contraction_ratio
    l6, bound, sobolev_ok = sobolev_check(state.field)
    transport_residual, collision_residual = vnfp_static_residual(state)
    checks += [
        check_row("contraction_ratio", ratio, 1.0, ratio < 1.0),
        check_row("unit_interval", float(state.fixed_point.stayed_in_unit_interval), 1.0,
                  state.fixed_point.stayed_in_unit_interval),
        check_row("sobolev", l6 - bound, 0.0, sobolev_ok),
        check_row("static_transport", transport_residual, tolerance, transport_residual <= tolerance),
        check_row("static_collision", collision_residual, tolerance, collision_residual <= tolerance),
    ]

    report, path = _certificate(scenario, state, out_dir, n_jobs)
    artifacts.append(path)
    checks.append(check_row("certificate_min_gap", report.min_gap, 0.0, report.passed))
    checks.append(check_row("certificate_first_variation", float(np.max(np.abs(report.first_variation))),
                            report.stationarity_tol * max(abs(report.base_value), 1.0), report.stationary))

    artifacts.append(write_manifest(out_dir, scenario.kind, scenario.source, {
        "mass": scenario.mass,
        "potential": V.kind,
        "iterations": state.fixed_point.iterations,
        "stages": len(state.continuation.stages) if state.continuation else 1,
        "seed": scenario.seed,
    }))
    summary = {
        "iterations": state.fixed_point.iterations,
        "contraction_ratio": ratio,
        "energy": energy,
        "phi0_center": float(state.field.values[0]),
        "min_gap": report.min_gap,
    }
    return build_result(scenario.kind, checks, artifacts, summary)
