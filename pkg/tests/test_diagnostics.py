import numpy as np
import pytest

from diagnostics import (
    DiagnosticRecord,
    DiagnosticSeries,
    MassMismatchError,
    chi2_divergence,
    continuity_residual,
    entropy_dissipation,
    entropy_gap_lower_bound,
    entropy_identity_residual,
    free_energy,
    free_energy_plus,
    is_non_increasing,
    lightcone_check,
    relative_mass_drift,
    support_radius,
)
from fp_solver import FokkerPlanckSolver, SolverConfig, SolverState, make_initial_field, run, steady_state_linear
from phase_grid import DistributionField, PhaseGrid, density, make_potential, mass


def _bump(grid, center, halfwidth):
    x = grid.x_centers[:, None]
    p = grid.p_centers[None, :]
    values = (np.abs(x - center) <= halfwidth) * np.exp(-np.sqrt(1.0 + p ** 2))
    return DistributionField(grid, values.astype(float))


def _rec(t, q=0.0, m=1.0):
    return DiagnosticRecord(t=t, mass=m, Q=q, Qplus=q, dissipation=0.0, chi2=0.0, support_radius=0.0)


def test_equilibrium_minimizes_free_energy(small_grid, harmonic, rng):
    m = steady_state_linear(1.0, harmonic, small_grid)
    x = small_grid.x_centers[:, None]
    values = rng.random(small_grid.shape) * np.exp(-0.5 * x ** 2)
    f = DistributionField(small_grid, values / (values.sum() * small_grid.cell_volume))
    assert free_energy(f, harmonic) > free_energy(m, harmonic)
    assert free_energy_plus(m, harmonic) >= free_energy(m, harmonic)


@pytest.mark.parametrize("seed", range(50))
def test_entropy_gap_bound_holds(small_grid, harmonic, seed):
    rng = np.random.default_rng(seed)
    m = steady_state_linear(1.0, harmonic, small_grid)
    x = small_grid.x_centers[:, None]
    values = rng.random(small_grid.shape) * np.exp(-0.5 * (x / rng.uniform(0.5, 3.0)) ** 2)
    f = DistributionField(small_grid, values / (values.sum() * small_grid.cell_volume))
    lhs, rhs = entropy_gap_lower_bound(f, m)
    assert lhs >= rhs > 0.0


def test_entropy_gap_vanishes_at_equilibrium(small_grid, harmonic):
    m = steady_state_linear(1.0, harmonic, small_grid)
    lhs, rhs = entropy_gap_lower_bound(m, m)
    assert lhs == pytest.approx(0.0, abs=1e-13)
    assert rhs == pytest.approx(0.0, abs=1e-13)


def test_entropy_gap_rejects_different_mass(small_grid, harmonic):
    m = steady_state_linear(1.0, harmonic, small_grid)
    heavier = steady_state_linear(1.5, harmonic, small_grid)
    with pytest.raises(MassMismatchError):
        entropy_gap_lower_bound(heavier, m)


def test_chi2_of_equilibrium_equals_mass(small_grid, harmonic):
    m = steady_state_linear(2.0, harmonic, small_grid)
    assert chi2_divergence(m, m) == pytest.approx(2.0, rel=1e-13)
    zero = m.with_values(np.zeros(small_grid.shape))
    with pytest.raises(ValueError):
        chi2_divergence(m, zero)


def test_dissipation_vanishes_on_juttner(small_grid, harmonic):
    m = steady_state_linear(1.0, harmonic, small_grid)
    assert entropy_dissipation(m) == pytest.approx(0.0, abs=1e-12)
    shifted = make_initial_field("shifted_juttner", small_grid, harmonic, p_shift=2.0)
    assert entropy_dissipation(shifted) > 0.0


def test_continuity_residual_of_unchanged_equilibrium(small_grid, harmonic):
    m = steady_state_linear(1.0, harmonic, small_grid)
    residual = continuity_residual(m, m.copy(), 1e-3)
    assert residual.shape == (small_grid.n_x,)
    assert np.max(np.abs(residual)) < 1e-12
    other = PhaseGrid(d=1, n_x=16, n_p=16)
    with pytest.raises(ValueError):
        continuity_residual(m, DistributionField(other, np.ones(other.shape)), 1e-3)


def test_support_radius(small_grid):
    f = _bump(small_grid, center=0.0, halfwidth=1.0)
    assert support_radius(f, 0.0) == pytest.approx(0.75)
    zero = f.with_values(np.zeros(small_grid.shape))
    assert support_radius(zero) == 0.0


def test_lightcone_check_detects_fast_front(small_grid):
    start = _bump(small_grid, 0.0, 1.0)
    slow = _bump(small_grid, 0.0, 1.5)
    fast = _bump(small_grid, 0.0, 4.0)
    assert lightcone_check([(0.0, start), (0.5, slow)], t0=0.0).passed
    verdict = lightcone_check([(0.0, start), (0.5, fast)], t0=0.0)
    assert not verdict.passed
    assert verdict.margin < 0.0
    with pytest.raises(ValueError):
        lightcone_check([], t0=0.0)


def test_series_requires_increasing_time():
    series = DiagnosticSeries()
    series.append(_rec(0.0))
    series.append(_rec(0.1))
    with pytest.raises(ValueError):
        series.append(_rec(0.1))
    frame = series.to_frame()
    assert list(frame.columns)[:3] == ["t", "mass", "Q"]
    assert len(series) == 2


def test_relative_mass_drift():
    series = DiagnosticSeries()
    for t, m in [(0.0, 2.0), (1.0, 2.0 + 2e-12), (2.0, 2.0 - 4e-12)]:
        series.append(_rec(t, m=m))
    assert relative_mass_drift(series) == pytest.approx(2e-12, rel=1e-3)
    assert relative_mass_drift(DiagnosticSeries()) == 0.0


def test_is_non_increasing_tolerates_rounding():
    assert is_non_increasing(np.array([3.0, 2.0, 2.0 + 1e-15, 1.0]))
    assert not is_non_increasing(np.array([3.0, 2.0, 2.5]))
    assert is_non_increasing(np.array([1.0]))


def test_entropy_identity_for_homogeneous_relaxation(harmonic):
    grid = PhaseGrid(d=1, x_min=-8.0, x_max=8.0, p_max=8.0, n_x=8, n_p=256)
    f0 = make_initial_field("shifted_juttner", grid, harmonic, p_shift=2.0)
    config = SolverConfig(dt=1e-3, t_end=0.2, transport_enabled=False)
    result = run(SolverState(f=f0, potential=harmonic), config, record_every=1)
    delta, integral, relative = entropy_identity_residual(result.series)
    assert delta < 0.0
    assert integral > 0.0
    assert relative < 0.05
    assert mass(result.state.f) == pytest.approx(mass(f0), rel=1e-12)
    with pytest.raises(ValueError):
        entropy_identity_residual(DiagnosticSeries([_rec(0.0)]))


def _reference_grid(n):
    return PhaseGrid(d=1, x_min=-8.0, x_max=8.0, p_max=8.0, n_x=n, n_p=n)


@pytest.mark.parametrize("scheme", ["upwind1", "muscl_minmod"])
@pytest.mark.parametrize("n", [32, 64])
def test_continuity_with_scheme_fluxes_holds_to_rounding(harmonic, scheme, n):
    grid = _reference_grid(n)
    f0 = make_initial_field("shifted_juttner", grid, harmonic, p_shift=2.0)
    config = SolverConfig(dt=2e-3, transport_scheme=scheme)
    solver = FokkerPlanckSolver(grid, harmonic, config)
    state = SolverState(f=f0, potential=harmonic)
    rho_peak = float(density(f0).max())
    for _ in range(5):
        previous = state.f
        state = solver.step(state)
        exact = continuity_residual(previous, state.f, config.dt, face_flux=solver.last_x_flux)
        assert np.max(np.abs(exact)) * config.dt <= 1e-12 * rho_peak
    moment = continuity_residual(previous, state.f, config.dt)
    assert np.max(np.abs(moment)) * config.dt > 1e-9 * rho_peak


def test_continuity_of_moment_current_converges_with_scheme_order(harmonic):
    residuals = []
    for n in (64, 128):
        grid = _reference_grid(n)
        f0 = make_initial_field("shifted_juttner", grid, harmonic, p_shift=2.0)
        config = SolverConfig(dt=0.1 * grid.dx)
        f1 = FokkerPlanckSolver(grid, harmonic, config).step(SolverState(f=f0, potential=harmonic)).f
        residuals.append(np.max(np.abs(continuity_residual(f0, f1, config.dt))))
    assert np.log2(residuals[0] / residuals[1]) > 0.7


def test_continuity_face_flux_shape_is_checked(small_grid, harmonic):
    m = steady_state_linear(1.0, harmonic, small_grid)
    with pytest.raises(ValueError):
        continuity_residual(m, m.copy(), 1e-3, face_flux=np.zeros(small_grid.n_x))
    residual = continuity_residual(m, m.copy(), 1e-3, face_flux=np.zeros(small_grid.n_x - 1))
    assert np.max(np.abs(residual)) == 0.0


def _entropy_identity(n, dt):
    grid = _reference_grid(n)
    V = make_potential("harmonic", 1.0)
    f0 = make_initial_field("shifted_juttner", grid, V, p_shift=2.0)
    result = run(SolverState(f=f0, potential=V), SolverConfig(dt=dt, t_end=0.2), record_every=1)
    return entropy_identity_residual(result.series)


def test_entropy_identity_for_full_run():
    delta, integral, relative = _entropy_identity(128, 1e-3)
    assert delta < 0.0 < integral
    assert relative <= 0.05


def test_entropy_identity_improves_under_refinement():
    _, _, coarse = _entropy_identity(32, 4e-3)
    _, _, fine = _entropy_identity(64, 2e-3)
    assert fine < 0.75 * coarse
