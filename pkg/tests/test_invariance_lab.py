import numpy as np
import pytest

from invariance_lab import (
    Points,
    boosted_function,
    classical_operator_residual,
    convergence_order,
    derivatives,
    equilibrium_function,
    galilean_invariance_residual,
    gaussian_function,
    juttner_function,
    lorentz_invariance_residual,
    relativistic_operator_residual,
    sample_points,
)


@pytest.fixture
def points():
    return sample_points(12, d=2, rng=np.random.default_rng(5))


def test_sample_points_shapes(points):
    assert points.t.shape == (12,)
    assert points.x.shape == (12, 2)
    assert np.all(np.abs(points.p) <= 3.0)


def test_derivatives_of_gaussian_match_closed_form():
    f = gaussian_function(1, drift=[0.0], width_x=1.0, width_p=1.0)
    pts = Points(np.array([0.3]), np.array([[0.4]]), np.array([[-0.7]]))
    der = derivatives(f, pts)
    value = np.exp(-0.5 * 0.4 ** 2 - 0.5 * 0.7 ** 2)
    assert der.grad_x[0, 0] == pytest.approx(-0.4 * value, rel=1e-9)
    assert der.grad_p[0, 0] == pytest.approx(0.7 * value, rel=1e-9)
    assert der.hess_p[0, 0, 0] == pytest.approx((0.7 ** 2 - 1.0) * value, rel=1e-8)
    assert der.dt[0] == pytest.approx(0.0, abs=1e-12)


def test_juttner_is_stationary_with_unit_friction(points):
    f = juttner_function(2)
    np.testing.assert_allclose(relativistic_operator_residual(f, points, beta=1.0), 0.0, atol=1e-9)
    assert np.max(np.abs(relativistic_operator_residual(f, points, beta=0.0))) > 1e-3


def test_classical_maxwellian_is_stationary(points):
    from invariance_lab import TestFunction

    maxwellian = TestFunction("maxwellian", lambda t, x, p: np.exp(-0.5 * np.sum(p ** 2, axis=-1)), 2)
    residual = classical_operator_residual(maxwellian, points, beta=1.0)
    np.testing.assert_allclose(residual, 0.0, atol=1e-9)


def test_lorentz_invariance_without_friction(points):
    report = lorentz_invariance_residual(np.array([0.3, -0.1]), gaussian_function(2), points)
    assert report.passed
    assert report.max_discrepancy < 1e-8
    frame = report.to_frame()
    assert list(frame.columns) == ["point", "r_original", "r_boosted", "weight", "diff", "pass"]
    assert frame["pass"].all()


def test_galilean_invariance_without_friction(points):
    report = galilean_invariance_residual(np.array([1.0, 0.5]), gaussian_function(2), points)
    assert report.passed
    np.testing.assert_allclose(report.weight, 1.0)


def test_friction_breaks_lorentz_invariance(points):
    report = lorentz_invariance_residual(np.array([0.6, 0.0]), gaussian_function(2), points, beta=1.0)
    assert not report.passed
    assert report.max_discrepancy > 1e-2


def test_observed_order_without_extrapolation(points):
    u = np.array([0.3, 0.0])
    f = gaussian_function(2)
    coarse = lorentz_invariance_residual(u, f, points, h=0.1, richardson=False)
    fine = lorentz_invariance_residual(u, f, points, h=0.05, richardson=False)
    assert convergence_order(coarse, fine) >= 1.8


def test_boost_by_zero_is_identity(points):
    f = gaussian_function(2)
    same = boosted_function(f, np.zeros(2))
    np.testing.assert_allclose(same(points.t, points.x, points.p), f(points.t, points.x, points.p))


def test_equilibrium_function_uses_potential(harmonic):
    f = equilibrium_function(harmonic, d=1)
    value = f(np.array([0.0]), np.array([[2.0]]), np.array([[0.0]]))
    assert value[0] == pytest.approx(np.exp(-1.0 - 2.0))
