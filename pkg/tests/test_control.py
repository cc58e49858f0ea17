"""Tests for the tracking cost and the upper-level constraint system."""
import numpy as np
import pytest

from fraktur import checks, constraints, control, exceptions, fields, models


@pytest.fixture
def spec(pull_model, pull_solution):
    target = pull_solution.state.phi - 0.01
    q_r = 0.5 * pull_solution.control.q
    return models.ControlProblemSpec(alpha=1e-2, phi_d=target, q_r=q_r)


def _control(model, rng):
    return fields.Control(q=rng.standard_normal((model.n_times, model.n_neumann)))


class TestCost:
    def test_vanishes_on_targets(self, pull_model, pull_solution):
        spec = models.ControlProblemSpec(
            alpha=1.0, phi_d=pull_solution.state.phi, q_r=pull_solution.control.q
        )
        assert control.cost_J(pull_model, pull_solution.control, pull_solution.state, spec) == 0.0

    def test_final_time_target_broadcasts(self, pull_model, pull_solution):
        spec = models.ControlProblemSpec(alpha=1.0, phi_d=np.ones(pull_model.n_scalar), q_r=0.0)
        phi_d, q_r = control.targets(pull_model, spec)
        assert phi_d.shape == (pull_model.n_times, pull_model.n_scalar)
        np.testing.assert_array_equal(q_r, 0.0)

    def test_gradient_is_exact_for_quadratic(self, pull_model, pull_solution, spec, rng):
        d_control = _control(pull_model, rng)
        d_state = checks.random_direction(pull_model, rng)
        q, state = pull_solution.control, pull_solution.state
        plus = control.cost_J(pull_model, q + d_control, state + d_state, spec)
        minus = control.cost_J(pull_model, q - d_control, state - d_state, spec)
        g_control, g_state = control.cost_gradient(pull_model, q, state, spec)
        exact = g_control.flat() @ d_control.flat() + g_state.dot(d_state)
        assert 0.5 * (plus - minus) == pytest.approx(exact, rel=1e-10)

    def test_hessian_is_second_difference(self, pull_model, pull_solution, spec, rng):
        d_control = _control(pull_model, rng)
        d_state = checks.random_direction(pull_model, rng)
        q, state = pull_solution.control, pull_solution.state
        plus = control.cost_J(pull_model, q + d_control, state + d_state, spec)
        middle = control.cost_J(pull_model, q, state, spec)
        minus = control.cost_J(pull_model, q - d_control, state - d_state, spec)
        form = control.cost_hessian_form(pull_model, spec, (d_control, d_state), (d_control, d_state))
        assert plus - 2 * middle + minus == pytest.approx(form, rel=1e-9)

    def test_nonpositive_alpha(self, pull_model):
        with pytest.raises(exceptions.InvalidParametersError):
            models.ControlProblemSpec(alpha=0.0, phi_d=np.ones(pull_model.n_scalar), q_r=0.0)

    def test_wrong_target_shape(self, pull_model, pull_solution):
        spec = models.ControlProblemSpec(alpha=1.0, phi_d=np.ones(3), q_r=0.0)
        with pytest.raises(exceptions.InvalidArgumentError):
            control.cost_J(pull_model, pull_solution.control, pull_solution.state, spec)


class TestSemilinearMap:
    def test_vanishes_at_forward_solution(self, pull_model, pull_solution):
        value = control.semilinear_a(
            pull_model, pull_solution.control, pull_solution.state, pull_solution.multiplier
        )
        constraint = control.upper_constraint_G(
            pull_model, pull_solution.control, pull_solution.state, pull_solution.multiplier, pull_solution.phi0
        )
        np.testing.assert_array_equal(constraint.state.flat(), value.flat())
        assert constraint.feasible(pull_model, 1e-8)

    def test_derivative_ignores_multiplier_value(self, pull_model, pull_solution, rng):
        other = checks.random_multiplier(pull_model, rng)
        first = control.a_prime_matrix(
            pull_model, pull_solution.control, pull_solution.state, pull_solution.multiplier
        )
        second = control.a_prime_matrix(pull_model, pull_solution.control, pull_solution.state, other)
        np.testing.assert_array_equal(first.toarray(), second.toarray())

    def test_derivative_by_central_difference(self, pull_model, pull_solution, rng):
        table = checks.a_prime_check(
            pull_model,
            pull_solution.control,
            pull_solution.state,
            pull_solution.multiplier,
            _control(pull_model, rng),
            checks.random_direction(pull_model, rng),
            checks.random_multiplier(pull_model, rng),
        )
        assert checks.observed_order(table) >= 1.9

    def test_multiplier_block_is_negative_pairing(self, pull_model, pull_solution, rng):
        d_multiplier = checks.random_multiplier(pull_model, rng)
        action = control.a_prime_action(
            pull_model,
            pull_solution.control,
            pull_solution.state,
            pull_solution.multiplier,
            pull_model.zero_control(),
            pull_model.zero_direction(),
            d_multiplier,
        )
        pairing = constraints.multiplier_pairing(pull_model, d_multiplier)
        np.testing.assert_allclose(action.flat(), -pairing.flat(), atol=1e-14)

    def test_violated_sign_condition(self, pull_model, pull_solution):
        multiplier = pull_solution.multiplier.copy()
        multiplier.l2[0, 0] = -1.0
        constraint = control.upper_constraint_G(
            pull_model, pull_solution.control, pull_solution.state, multiplier, pull_solution.phi0
        )
        assert constraint.violations(pull_model)["multiplier"] == pytest.approx(1.0)
        assert not constraint.feasible(pull_model, 1e-8)


class TestUpperMultiplier:
    def test_fit_respects_signs(self, pull_model, pull_solution, spec):
        fit = control.recover_upper_multiplier(
            pull_model, pull_solution.control, pull_solution.state, pull_solution.multiplier, spec
        )
        assert fit.pi.pi3.min() >= 0.0
        assert fit.pi.pi4.min() >= 0.0
        assert fit.residual >= 0.0
        residual = control.upper_kkt_residual(
            pull_model,
            pull_solution.control,
            pull_solution.state,
            pull_solution.multiplier,
            fit.pi,
            spec,
            pull_solution.phi0,
        )
        assert residual.r_pi3 == 0.0
        assert residual.r_pi4 == 0.0
        assert residual.feasibility() <= 1e-8

    def test_zero_multiplier_leaves_cost_derivative(self, pull_model, pull_solution, spec):
        pi = fields.UpperMultiplier.zeros(pull_model.n_steps, pull_model.n_vector, pull_model.n_scalar)
        residual = control.upper_kkt_residual(
            pull_model,
            pull_solution.control,
            pull_solution.state,
            pull_solution.multiplier,
            pi,
            spec,
            pull_solution.phi0,
        )
        assert residual.r_comp == 0.0
        assert residual.r_comp_rel == 0.0
        assert residual.r_stat > 0.0
