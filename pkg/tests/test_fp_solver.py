import numpy as np
import pytest

from diagnostics import is_non_increasing
from fp_solver import (
    CFLViolationError,
    CollisionSolveError,
    FokkerPlanckSolver,
    SolverConfig,
    SolverState,
    collision_matrix,
    collision_step,
    lightcone_step,
    make_initial_field,
    run,
    steady_state_linear,
    step,
    transport_step,
)
from phase_grid import DistributionField, PhaseGrid, PotentialError, mass


def _random_field(grid, rng):
    x = grid.x_centers[:, None]
    return DistributionField(grid, rng.random(grid.shape) * np.exp(-0.5 * x ** 2))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0)
    with pytest.raises(ValueError):
        SolverConfig(splitting="yoshida")
    with pytest.raises(ValueError):
        SolverConfig(cfl_transport=1.5)
    assert SolverConfig(dt=0.1, t_end=1.0).n_steps == 10


def test_steady_state_has_exact_mass(small_grid, harmonic):
    m = steady_state_linear(2.5, harmonic, small_grid)
    assert mass(m) == pytest.approx(2.5, rel=1e-14)
    with pytest.raises(ValueError):
        steady_state_linear(0.0, harmonic, small_grid)


def test_steady_state_needs_confinement(small_grid, free):
    with pytest.raises(PotentialError):
        steady_state_linear(1.0, free, small_grid)


@pytest.mark.parametrize("splitting", ["lie", "strang"])
@pytest.mark.parametrize("scheme", ["upwind1", "muscl_minmod"])
def test_equilibrium_is_preserved(small_grid, harmonic, splitting, scheme):
    m = steady_state_linear(1.0, harmonic, small_grid)
    config = SolverConfig(dt=5e-3, splitting=splitting, transport_scheme=scheme)
    solver = FokkerPlanckSolver(small_grid, harmonic, config)
    state = solver.step(SolverState(f=m, potential=harmonic))
    assert state.step_count == 1
    assert state.t == pytest.approx(5e-3)

    peak = m.values.max()
    values = state.f.values
    worst_step = np.max(np.abs(values - m.values))
    for _ in range(10_000 - 1):
        updated = solver.advance_values(values)
        worst_step = max(worst_step, np.max(np.abs(updated - values)))
        values = updated
    assert worst_step / peak <= 1e-12
    assert np.max(np.abs(values - m.values)) / peak <= 1e-12
    assert abs(values.sum() - m.values.sum()) <= 1e-12 * m.values.sum()


def test_transport_conserves_mass_and_positivity(small_grid, harmonic, rng):
    f = _random_field(small_grid, rng)
    g = transport_step(f, harmonic, 5e-3)
    assert mass(g) == pytest.approx(mass(f), rel=1e-13)
    assert g.values.min() >= 0.0


def test_collision_step_keeps_juttner_columns(small_grid):
    p = small_grid.p_centers
    column = np.exp(-np.sqrt(1.0 + p ** 2))
    f = DistributionField(small_grid, np.outer(np.linspace(0.1, 1.0, small_grid.n_x), column))
    g = collision_step(f, 0.5)
    np.testing.assert_allclose(g.values, f.values, rtol=1e-11, atol=1e-15)


@pytest.mark.parametrize("time_scheme", ["backward_euler", "crank_nicolson"])
def test_collision_step_conserves_column_mass(small_grid, rng, time_scheme):
    f = _random_field(small_grid, rng)
    config = SolverConfig(dt=1e-2, collision_time_scheme=time_scheme)
    g = collision_step(f, 1e-2, config)
    np.testing.assert_allclose(g.values.sum(axis=1), f.values.sum(axis=1), rtol=1e-12)
    assert g.values.min() >= 0.0


def test_chang_cooper_matrix_annihilates_juttner(small_grid):
    lower, main, upper = collision_matrix(small_grid)
    p = small_grid.p_centers
    m = np.exp(-np.sqrt(1.0 + p ** 2))
    applied = main * m
    applied[:-1] += upper[1:] * m[1:]
    applied[1:] += lower[:-1] * m[:-1]
    assert np.max(np.abs(applied)) <= 1e-13 * np.max(np.abs(main * m))
    assert np.all(upper[1:] > 0) and np.all(lower[:-1] > 0)


def test_centered_weights_on_coarse_grid_fail():
    grid = PhaseGrid(d=1, n_x=2, p_max=6.0, n_p=4)
    f = DistributionField(grid, np.ones(grid.shape))
    with pytest.raises(CollisionSolveError):
        collision_step(f, 0.1, SolverConfig(dt=0.1, collision_weights="centered"))


def test_cfl_violation_is_reported(small_grid, harmonic):
    with pytest.raises(CFLViolationError) as info:
        FokkerPlanckSolver(small_grid, harmonic, SolverConfig(dt=1.0))
    assert info.value.ratio > 1.0
    assert info.value.direction in ("x", "p")


def test_run_records_monotone_free_energy(small_grid, harmonic):
    config = SolverConfig(dt=1e-2, t_end=0.3)
    f0 = make_initial_field("shifted_juttner", small_grid, harmonic, p_shift=2.0)
    m = steady_state_linear(1.0, harmonic, small_grid)
    result = run(SolverState(f=f0, potential=harmonic), config, m_ref=m, record_every=2,
                 snapshot_times=(0.1, 0.2))
    times = result.series.column("t")
    assert np.all(np.diff(times) > 0)
    assert times[-1] == pytest.approx(0.3)
    assert [t for t, _ in result.snapshots] == pytest.approx([0.1, 0.2])
    assert is_non_increasing(result.series.column("Q"))
    assert is_non_increasing(result.series.column("chi2"))
    masses = result.series.column("mass")
    np.testing.assert_allclose(masses, masses[0], rtol=1e-12)


@pytest.mark.parametrize("kind", ["equilibrium", "shifted_juttner", "gaussian", "compact", "random"])
def test_initial_fields_are_normalized(small_grid, harmonic, kind):
    f = make_initial_field(kind, small_grid, harmonic, total_mass=3.0, rng=np.random.default_rng(0))
    assert mass(f) == pytest.approx(3.0, rel=1e-12)


def test_unknown_initial_field(small_grid, harmonic):
    with pytest.raises(ValueError):
        make_initial_field("delta", small_grid, harmonic)


def test_lightcone_step(small_grid, free):
    config = SolverConfig(splitting="lie")
    assert lightcone_step(small_grid, free, config) == pytest.approx(small_grid.dx)
    with pytest.raises(ValueError):
        lightcone_step(small_grid, free, SolverConfig(transport_scheme="muscl_minmod"))


def test_solver_hook_is_called(small_grid, harmonic):
    seen = []
    m = steady_state_linear(1.0, harmonic, small_grid)
    state = SolverState(f=m, potential=harmonic, hook=lambda s: seen.append(s.step_count))
    solver = FokkerPlanckSolver(small_grid, harmonic, SolverConfig(dt=1e-2))
    for _ in range(3):
        state = solver.step(state)
    assert seen == [1, 2, 3]


@pytest.mark.parametrize("seed", range(20))
def test_random_runs_contract_free_energy_and_chi2(small_grid, harmonic, seed):
    rng = np.random.default_rng(seed)
    f0 = make_initial_field("random", small_grid, harmonic, x_width=rng.uniform(1.0, 3.0), rng=rng)
    m = steady_state_linear(1.0, harmonic, small_grid)
    result = run(SolverState(f=f0, potential=harmonic), SolverConfig(dt=1e-2, t_end=0.2),
                 m_ref=m, record_every=1)
    assert len(result.series) == 21
    assert is_non_increasing(result.series.column("Q"))
    assert is_non_increasing(result.series.column("chi2"))


def _split_solution(grid, V, f0, dt, transport_scheme, time_scheme, t_end=0.2):
    config = SolverConfig(dt=dt, t_end=t_end, transport_scheme=transport_scheme,
                          collision_time_scheme=time_scheme)
    solver = FokkerPlanckSolver(grid, V, config)
    values = f0.values
    for _ in range(config.n_steps):
        values = solver.advance_values(values)
    return values


def _self_convergence_order(transport_scheme, time_scheme, harmonic):
    grid = PhaseGrid(d=1, x_min=-8.0, x_max=8.0, p_max=8.0, n_x=64, n_p=64)
    f0 = make_initial_field("shifted_juttner", grid, harmonic, p_shift=2.0)
    coarse, medium, fine = (_split_solution(grid, harmonic, f0, dt, transport_scheme, time_scheme)
                            for dt in (4e-3, 2e-3, 1e-3))
    return np.log2(np.abs(coarse - medium).sum() / np.abs(medium - fine).sum())


def test_strang_is_second_order_with_muscl_and_crank_nicolson(harmonic):
    assert _self_convergence_order("muscl_minmod", "crank_nicolson", harmonic) >= 1.8


def test_strang_with_backward_euler_is_first_order(harmonic):
    order = _self_convergence_order("upwind1", "backward_euler", harmonic)
    assert 0.8 <= order < 1.5


def test_run_reports_continuity_at_rounding(small_grid, harmonic):
    f0 = make_initial_field("shifted_juttner", small_grid, harmonic, p_shift=2.0)
    config = SolverConfig(dt=1e-2, t_end=0.2)
    result = run(SolverState(f=f0, potential=harmonic), config, record_every=5)
    rho_peak = f0.values.sum(axis=1).max() * small_grid.dp
    assert 0.0 <= result.continuity_max * config.dt <= 1e-12 * rho_peak


def test_step_function_advances_state(small_grid, harmonic):
    f0 = make_initial_field("shifted_juttner", small_grid, harmonic, p_shift=2.0)
    state = step(SolverState(f=f0, potential=harmonic), SolverConfig(dt=1e-2))
    assert state.step_count == 1
    assert state.t == pytest.approx(1e-2)
    assert mass(state.f) == pytest.approx(mass(f0), rel=1e-13)
    assert state.f.values.min() >= 0.0
