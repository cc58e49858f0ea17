"""Tests for the crack energy, its derivatives and the space-time norms."""
import numpy as np
import pytest

from fraktur import energy, exceptions, fields, models


def _state(model, rng):
    return fields.SpaceTimeState(
        u=0.1 * rng.standard_normal((model.n_times, model.n_vector)),
        phi=rng.uniform(0.0, 1.0, (model.n_times, model.n_scalar)),
    )


def _direction(model, rng):
    return fields.Direction(
        u=rng.standard_normal((model.n_times, model.n_vector)),
        phi=rng.standard_normal((model.n_times, model.n_scalar)),
    )


# ---------------------------------------------------------------------------
# Degradation
# ---------------------------------------------------------------------------


class TestDegradation:
    params = models.PhysParams(kappa=0.1)

    @pytest.mark.parametrize("phi, expected", [(0.0, 0.1), (1.0, 1.0), (0.5, 0.325)])
    def test_values(self, phi, expected):
        assert energy.degradation(phi, self.params) == pytest.approx(expected)

    def test_vectorized(self):
        values = energy.degradation(np.array([0.0, 1.0]), self.params)
        np.testing.assert_allclose(values, [0.1, 1.0])


# ---------------------------------------------------------------------------
# Energy and derivatives
# ---------------------------------------------------------------------------


class TestEnergy:
    def test_fully_broken_at_rest(self, small_model):
        # u = 0, phi = 0: only g_c / (2 eps) |1|^2 survives, integrated over I
        state = small_model.zero_state()
        value = small_model.energy(state, small_model.zero_control())
        assert value == pytest.approx(0.5 * 1.0 / 0.1 * 1.0)

    def test_gradient_along_constant_phase_field(self, small_model):
        state = small_model.zero_state()
        direction = small_model.zero_direction()
        direction.phi[:] = 1.0
        gradient = small_model.gradient(state, small_model.zero_control())
        assert gradient.dot(direction) == pytest.approx(-1.0 / 0.1)

    def test_hessian_along_constant_phase_field(self, small_model):
        state = small_model.zero_state()
        direction = small_model.zero_direction()
        direction.phi[:] = 1.0
        assert small_model.hessian_form(state, direction, direction) == pytest.approx(1.0 / 0.1)

    def test_intact_unloaded_state_is_stationary(self, small_model):
        state = small_model.zero_state()
        state.phi[:] = 1.0
        gradient = small_model.gradient(state, small_model.zero_control())
        np.testing.assert_allclose(gradient.flat(), 0.0, atol=1e-14)

    def test_parts_match_assembled_matrix(self, small_model, rng):
        u = 0.1 * rng.standard_normal(small_model.n_vector)
        phi = rng.uniform(0.0, 1.0, small_model.n_scalar)
        q = rng.standard_normal(small_model.n_neumann)
        k_uu, _, _ = small_model.node_hessian_blocks(u, phi)
        parts = small_model.energy_parts(u, phi, q)
        assert parts["elastic"] == pytest.approx(0.5 * u @ (k_uu @ u), rel=1e-12)
        assert parts["load"] == pytest.approx(small_model.load(q) @ u, rel=1e-12)

    def test_hessian_form_is_symmetric(self, small_model, rng):
        state = _state(small_model, rng)
        first, second = _direction(small_model, rng), _direction(small_model, rng)
        assert small_model.hessian_form(state, first, second) == small_model.hessian_form(state, second, first)

    def test_node_hessian_is_symmetric(self, small_model, rng):
        u = 0.1 * rng.standard_normal(small_model.n_vector)
        phi = rng.uniform(0.0, 1.0, small_model.n_scalar)
        hessian = small_model.node_hessian(u, phi).toarray()
        np.testing.assert_allclose(hessian, hessian.T, atol=1e-13)

    def test_gradient_by_central_difference(self, small_model, rng):
        state = _state(small_model, rng)
        control = fields.Control(q=rng.standard_normal((small_model.n_times, small_model.n_neumann)))
        direction = _direction(small_model, rng)
        h = 1e-5
        quotient = (
            small_model.energy(state + direction * h, control)
            - small_model.energy(state - direction * h, control)
        ) / (2 * h)
        exact = small_model.gradient(state, control).dot(direction)
        assert quotient == pytest.approx(exact, rel=1e-6)

    def test_hessian_by_gradient_difference(self, small_model, rng):
        state = _state(small_model, rng)
        control = small_model.zero_control()
        first, second = _direction(small_model, rng), _direction(small_model, rng)
        h = 1e-5
        quotient = (
            small_model.gradient(state + first * h, control).dot(second)
            - small_model.gradient(state - first * h, control).dot(second)
        ) / (2 * h)
        assert quotient == pytest.approx(small_model.hessian_form(state, first, second), rel=1e-6)

    def test_shape_mismatch(self, small_model):
        state = fields.SpaceTimeState.zeros(2, small_model.n_vector, small_model.n_scalar)
        with pytest.raises(exceptions.InvalidArgumentError):
            small_model.energy(state, small_model.zero_control())


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


class TestNorms:
    def test_zero_state(self, small_model):
        assert small_model.spacetime_norms(small_model.zero_state()) == (0.0, 0.0, 0.0)

    def test_components_combine(self, small_model, rng):
        norm_u, norm_phi, total = small_model.spacetime_norms(_state(small_model, rng))
        assert total == pytest.approx(np.hypot(norm_u, norm_phi))

    def test_time_constant_phase_field(self, small_model, rng):
        phi = rng.standard_normal(small_model.n_scalar)
        state = small_model.zero_state()
        state.phi[:] = phi
        _, norm_phi, _ = small_model.spacetime_norms(state)
        h1 = phi @ (small_model.disc.scalar_h1 @ phi)
        assert norm_phi**2 == pytest.approx(small_model.grid.t_final * h1)

    def test_initial_displacement_does_not_count(self, small_model, rng):
        state = _state(small_model, rng)
        moved = state.copy()
        moved.u[0] += 1.0
        assert small_model.spacetime_norms(moved)[0] == small_model.spacetime_norms(state)[0]

    def test_time_constant_displacement(self, small_model, rng):
        u = rng.standard_normal(small_model.n_vector)
        state = small_model.zero_state()
        state.u[1:] = u
        norm_u, _, _ = small_model.spacetime_norms(state)
        h1 = u @ (small_model.disc.vector_h1 @ u)
        assert norm_u**2 == pytest.approx(small_model.grid.t_final * h1)

    def test_l2_bound(self, small_model, rng):
        for _ in range(5):
            state = _state(small_model, rng)
            other = _state(small_model, rng)
            psi = rng.uniform(-1.0, 1.0, (small_model.n_times, small_model.n_scalar))
            ratios = small_model.norm_estimate_ratios(state, other, psi)
            assert ratios["l2_bound_holds"]
            assert ratios["sup_ratio"] > 0
            assert ratios["product_ratio"] >= 0
