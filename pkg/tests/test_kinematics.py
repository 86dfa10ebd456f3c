import numpy as np
import pytest

from kinematics import (
    conformal_energy,
    diffusion_matrix,
    energy,
    galilean_boost,
    hyperbolic_metric,
    juttner,
    lorentz_boost,
    rel_velocity,
)


def test_energy_scalar_and_batch():
    assert energy([3.0, 4.0]) == pytest.approx(np.sqrt(26.0))
    assert energy(0.0) == pytest.approx(1.0)
    batch = energy(np.array([[0.0], [1.0], [2.0]]))
    np.testing.assert_allclose(batch, np.sqrt([1.0, 2.0, 5.0]))


def test_energy_rejects_non_finite():
    with pytest.raises(ValueError):
        energy([np.nan, 1.0])


def test_conformal_energy_reduces_to_energy_at_zero_field():
    p = np.array([[0.5, -1.0, 2.0]])
    np.testing.assert_allclose(conformal_energy(p, 0.0), energy(p))


def test_velocity_is_subluminal():
    p = np.linspace(-50.0, 50.0, 101)[:, None]
    speed = np.abs(rel_velocity(p))
    assert np.all(speed < 1.0)


def test_diffusion_matrix_eigenvector_along_momentum():
    p = np.array([1.0, -2.0, 0.5])
    D = diffusion_matrix(p)
    np.testing.assert_allclose(D @ p, energy(p) * p)
    np.testing.assert_allclose(D, D.T)


def test_hyperbolic_metric_inverse_and_determinant():
    p = np.array([[0.3, 1.2], [-2.0, 0.1]])
    sample = hyperbolic_metric(p)
    eye = np.einsum("...ij,...jk->...ik", sample.h, sample.h_inv)
    np.testing.assert_allclose(eye, np.broadcast_to(np.eye(2), eye.shape), atol=1e-12)
    np.testing.assert_allclose(sample.det_h, np.linalg.det(sample.h))


def test_juttner_requires_positive_gamma():
    assert juttner([0.0]) == pytest.approx(np.exp(-1.0))
    with pytest.raises(ValueError):
        juttner([0.0], gamma=0.0)


def test_lorentz_boost_keeps_mass_shell_and_inverts():
    rng = np.random.default_rng(3)
    u = np.array([0.4, -0.2, 0.1])
    t = rng.uniform(0, 1, 5)
    x = rng.normal(size=(5, 3))
    p = rng.normal(size=(5, 3))
    t1, x1, p1 = lorentz_boost(u, t, x, p)
    u0 = energy(u)
    np.testing.assert_allclose(energy(p1), u0 * energy(p) - p @ u, rtol=1e-13)
    t2, x2, p2 = lorentz_boost(-u, t1, x1, p1)
    np.testing.assert_allclose(t2, t, atol=1e-13)
    np.testing.assert_allclose(x2, x, atol=1e-13)
    np.testing.assert_allclose(p2, p, atol=1e-13)


def test_lorentz_boost_small_velocity_is_continuous():
    x = np.array([[1.0, 2.0]])
    p = np.array([[0.5, 0.5]])
    _, x_small, p_small = lorentz_boost(np.array([1e-9, 0.0]), 0.0, x, p)
    np.testing.assert_allclose(x_small, x, atol=1e-8)
    np.testing.assert_allclose(p_small, p, atol=1e-8)


def test_galilean_boost_shifts_position_and_momentum():
    t, x, p = galilean_boost(np.array([1.0]), 2.0, np.array([0.5]), np.array([3.0]))
    assert t == 2.0
    np.testing.assert_allclose(x, [-1.5])
    np.testing.assert_allclose(p, [2.0])
