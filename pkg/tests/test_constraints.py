"""Tests for the constraint map, its derivative and the multiplier pairing."""
import numpy as np
import pytest

from fraktur import constraints, exceptions, fields


class TestConstraintMap:
    def test_feasible_state(self, small_model, rng):
        phi0 = rng.uniform(0.5, 1.0, small_model.n_scalar)
        state = small_model.zero_state()
        state.phi[:] = phi0 - np.linspace(0.0, 0.3, small_model.n_times)[:, None]
        g_e, g_i = constraints.constraint_g(small_model, state, phi0)
        np.testing.assert_allclose(g_e, 0.0)
        np.testing.assert_allclose(g_i, 0.1 / small_model.grid.dt)
        assert constraints.cone_membership_K2(g_i)[0]

    def test_increasing_phase_field_leaves_cone(self, small_model):
        state = small_model.zero_state()
        state.phi[2, 0] = 0.01
        _, g_i = constraints.constraint_g(small_model, state, np.zeros(small_model.n_scalar))
        member, violation = constraints.cone_membership_K2(g_i)
        assert not member
        assert violation == pytest.approx(0.01 / small_model.grid.dt)

    def test_wrong_initial_shape(self, small_model):
        with pytest.raises(exceptions.InvalidArgumentError):
            constraints.constraint_g(small_model, small_model.zero_state(), np.ones(2))

    @pytest.mark.parametrize(
        "field, member, violation",
        [([0.0, 1.0], True, 0.0), ([-1e-3, 2.0], False, 1e-3), ([], True, 0.0)],
    )
    def test_cone_membership(self, field, member, violation):
        assert constraints.cone_membership_K2(field) == (member, pytest.approx(violation))

    def test_cone_tolerance(self):
        assert constraints.cone_membership_K2([-1e-12], tol=1e-10)[0]


class TestDerivative:
    def test_right_inverse(self, small_model, rng):
        z1 = rng.standard_normal(small_model.n_scalar)
        z2 = rng.standard_normal((small_model.n_steps, small_model.n_scalar))
        direction = constraints.g_prime_right_inverse(small_model, z1, z2)
        image_1, image_2 = constraints.g_prime(small_model, direction)
        np.testing.assert_allclose(image_1, z1, atol=1e-13)
        np.testing.assert_allclose(image_2, z2, atol=1e-12)
        np.testing.assert_array_equal(direction.u, 0.0)

    def test_derivative_is_affine_difference(self, small_model, rng):
        phi0 = rng.uniform(size=small_model.n_scalar)
        first = small_model.zero_state()
        first.phi[:] = rng.uniform(size=first.phi.shape)
        second = small_model.zero_state()
        second.phi[:] = rng.uniform(size=second.phi.shape)
        g1 = constraints.constraint_g(small_model, first, phi0)
        g2 = constraints.constraint_g(small_model, second, phi0)
        d1, d2 = constraints.g_prime(small_model, first - second)
        np.testing.assert_allclose(d1, g1[0] - g2[0], atol=1e-14)
        np.testing.assert_allclose(d2, g1[1] - g2[1], atol=1e-12)

    def test_right_inverse_shape(self, small_model):
        with pytest.raises(exceptions.InvalidArgumentError):
            constraints.g_prime_right_inverse(small_model, np.zeros(2), np.zeros((1, 2)))


class TestMultiplierPairing:
    def test_pairing_formula(self, small_model, rng):
        multiplier = fields.LowerMultiplier(
            l1=rng.standard_normal(small_model.n_scalar),
            l2=rng.standard_normal((small_model.n_steps, small_model.n_scalar)),
        )
        direction = fields.Direction(
            u=rng.standard_normal((small_model.n_times, small_model.n_vector)),
            phi=rng.standard_normal((small_model.n_times, small_model.n_scalar)),
        )
        lumped = small_model.disc.lumped_mass
        expected = multiplier.l1 @ (lumped * direction.phi[0])
        for m in range(1, small_model.n_times):
            expected -= multiplier.l2[m - 1] @ (lumped * (direction.phi[m] - direction.phi[m - 1]))
        assert constraints.pair_multiplier(small_model, multiplier, direction) == pytest.approx(expected)

    def test_pairing_ignores_displacement(self, small_model, rng):
        multiplier = fields.LowerMultiplier(
            l1=rng.standard_normal(small_model.n_scalar),
            l2=rng.standard_normal((small_model.n_steps, small_model.n_scalar)),
        )
        pairing = constraints.multiplier_pairing(small_model, multiplier)
        np.testing.assert_array_equal(pairing.u, 0.0)

    def test_wrong_multiplier_shape(self, small_model):
        multiplier = fields.LowerMultiplier.zeros(small_model.n_steps + 1, small_model.n_scalar)
        with pytest.raises(exceptions.InvalidArgumentError):
            constraints.multiplier_pairing(small_model, multiplier)
