"""
Сценарии линейного уравнения: прогон по времени, дискретное стационарное
состояние и проверка светового конуса.
"""
import os
from dataclasses import replace
from typing import Any, Dict

import numpy as np
import pandas as pd

from diagnostics import (
    entropy_identity_residual,
    is_non_increasing,
    lightcone_check,
    relative_mass_drift,
    support_radius,
)
from fp_solver import FokkerPlanckSolver, SolverState, lightcone_step, make_initial_field, run, steady_state_linear
from logger_config import setup_logger
from parsers.scenario_parser import Scenario
from phase_grid import density, mass, momentum_tail_bound
from usecases.reporting import build_result, check_row, prepare_output, relative_error
from utils.io_utils import snapshot_name, write_frame, write_manifest, write_snapshot_csv, write_snapshot_raw, write_snapshots

logger = setup_logger("linear_runs")

STATIONARY_STEPS = 10_000
STATIONARY_TOLERANCE = 1e-12


def _initial_state(scenario: Scenario, grid, V) -> SolverState:
    s = scenario.solver
    f0 = make_initial_field(
        s.initial, grid, V, total_mass=scenario.mass, p_shift=s.p_shift,
        x_center=s.x_center, x_width=s.x_width, support_halfwidth=s.support_halfwidth,
        rng=np.random.default_rng(scenario.seed),
    )
    return SolverState(f=f0, potential=V)


def run_linear(scenario: Scenario, out_dir: str) -> Dict[str, Any]:
    """
    Прогон линейного уравнения до t_end с записью диагностик

    Проверки: дрейф массы, невязка неразрывности по потокам схемы, баланс энтропии;
    при удерживающем потенциале невозрастание Q и chi^2.

    Args:
        scenario: Сценарий run-linear
        out_dir: Директория результатов

    Returns:
        Dict[str, Any]: Итог со статусом, проверками и артефактами
    """
    prepare_output(out_dir)
    grid = scenario.phase_grid()
    V = scenario.external_potential()
    config = scenario.solver_config()
    m_ref = steady_state_linear(scenario.mass, V, grid) if V.confining else None

    state = _initial_state(scenario, grid, V)
    result = run(state, config, m_ref=m_ref, record_every=scenario.solver.record_every,
                 snapshot_times=scenario.solver.snapshot_times, x0=scenario.solver.x_center)
    series = result.series
    fmt = scenario.output.float_format

    artifacts = [write_frame(series.to_frame(), os.path.join(out_dir, "diagnostics.csv"), fmt)]
    snapshots = [(0.0, state.f)] + result.snapshots + [(result.state.t, result.state.f)]
    artifacts += write_snapshots(snapshots, out_dir, scenario.output.write_raw, fmt)

    checks = []
    drift = relative_mass_drift(series)
    checks.append(check_row("mass_drift", drift, scenario.checks.mass_tolerance,
                            drift <= scenario.checks.mass_tolerance))
    if m_ref is not None and scenario.checks.monotone_free_energy:
        q = series.column("Q")
        checks.append(check_row("free_energy_monotone", float(np.max(np.diff(q), initial=0.0)), 0.0,
                                is_non_increasing(q)))
    if m_ref is not None and scenario.checks.chi2_contraction:
        chi2 = series.column("chi2")
        checks.append(check_row("chi2_non_increasing", float(np.max(np.diff(chi2), initial=0.0)), 0.0,
                                is_non_increasing(chi2)))
    continuity = result.continuity_max * config.dt / max(float(density(state.f).max()), np.finfo(float).tiny)
    checks.append(check_row("continuity", continuity, scenario.checks.mass_tolerance,
                            continuity <= scenario.checks.mass_tolerance))
    if len(series) > 1:
        delta, integral, relative = entropy_identity_residual(series)
        checks.append(check_row("entropy_identity", relative, scenario.checks.entropy_tolerance,
                                relative <= scenario.checks.entropy_tolerance))

    artifacts.append(write_manifest(out_dir, scenario.kind, scenario.source, {
        "steps": result.state.step_count,
        "dt": config.dt,
        "splitting": config.splitting,
        "potential": V.kind,
        "momentum_tail_bound": momentum_tail_bound(grid),
        "seed": scenario.seed,
    }))
    summary = {
        "t_end": result.state.t,
        "steps": result.state.step_count,
        "mass": mass(result.state.f),
        "continuity_residual": continuity,
        "Q_final": float(series.column("Q")[-1]),
    }
    return build_result(scenario.kind, checks, artifacts, summary)


def steady_linear(scenario: Scenario, out_dir: str) -> Dict[str, Any]:
    """
    Дискретное стационарное состояние m_M и проверка того, что шаг решателя его сохраняет

    Returns:
        Dict[str, Any]: Итог сценария
    """
    prepare_output(out_dir)
    grid = scenario.phase_grid()
    V = scenario.external_potential()
    config = scenario.solver_config()
    fmt = scenario.output.float_format

    m = steady_state_linear(scenario.mass, V, grid)
    base = os.path.join(out_dir, snapshot_name(0))
    artifacts = [write_snapshot_csv(m, base + ".csv", fmt)]
    if scenario.output.write_raw:
        artifacts.append(write_snapshot_raw(m, 0.0, base + ".raw"))

    solver = FokkerPlanckSolver(grid, V, config)
    state = SolverState(f=m, potential=V)
    for _ in range(STATIONARY_STEPS):
        state = solver.step(state)
    peak = float(m.values.max())
    deviation = float(np.max(np.abs(state.f.values - m.values))) / peak

    mass_error = relative_error(mass(m), scenario.mass)
    checks = [
        check_row("mass", mass_error, scenario.checks.mass_tolerance,
                  mass_error <= scenario.checks.mass_tolerance),
        check_row("stationary", deviation, STATIONARY_TOLERANCE, deviation <= STATIONARY_TOLERANCE),
    ]
    artifacts.append(write_manifest(out_dir, scenario.kind, scenario.source, {
        "potential": V.kind,
        "mass": scenario.mass,
        "stationary_steps": STATIONARY_STEPS,
    }))
    logger.info(f"m_M: масса {mass(m):.15g}, отклонение после {STATIONARY_STEPS} шагов {deviation:.3e}")
    return build_result(scenario.kind, checks, artifacts, {"mass": mass(m), "deviation": deviation})


def check_lightcone(scenario: Scenario, out_dir: str) -> Dict[str, Any]:
    """
    Носитель компактных начальных данных не должен выходить за световой конус

    При lightcone_step = true шаг dt выбирается согласованным с конусом.
    Снимки берутся на каждом шаге.

    Returns:
        Dict[str, Any]: Итог сценария
    """
    prepare_output(out_dir)
    grid = scenario.phase_grid()
    V = scenario.external_potential()
    config = scenario.solver_config()
    if scenario.solver.lightcone_step:
        config = replace(config, dt=lightcone_step(grid, V, config))
        logger.info(f"Шаг, согласованный со световым конусом: dt = {config.dt:.6g}")
    x0 = scenario.solver.x_center
    threshold = scenario.checks.support_threshold
    fmt = scenario.output.float_format

    state = _initial_state(scenario, grid, V)
    times = config.dt * np.arange(1, config.n_steps + 1)
    result = run(state, config, record_every=scenario.solver.record_every, snapshot_times=times, x0=x0)
    snapshots = [(0.0, state.f)] + result.snapshots
    verdict = lightcone_check(snapshots, t0=0.0, x0=x0, threshold=threshold)

    radius0 = support_radius(state.f, x0, threshold)
    rows = []
    for t, f in snapshots:
        radius = support_radius(f, x0, threshold)
        bound = radius0 + t + grid.dx
        rows.append({"t": t, "support_radius": radius, "bound": bound, "margin": bound - radius})
    artifacts = [write_frame(pd.DataFrame(rows), os.path.join(out_dir, "lightcone.csv"), fmt)]
    artifacts += write_snapshots([snapshots[0], snapshots[-1]], out_dir, scenario.output.write_raw, fmt)
    artifacts.append(write_manifest(out_dir, scenario.kind, scenario.source, {
        "dt": config.dt,
        "superluminal_factor": config.superluminal_factor,
        "momentum_tail_bound": momentum_tail_bound(grid),
        "potential": V.kind,
    }))

    checks = [check_row("lightcone_margin", verdict.margin, 0.0, verdict.passed)]
    return build_result(scenario.kind, checks, artifacts,
                        {"margin": verdict.margin, "dt": config.dt, "steps": result.state.step_count})
