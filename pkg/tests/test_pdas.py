"""Tests for the primal-dual active set forward solver."""
import numpy as np
import pytest

from fraktur import exceptions, fields, kkt, models, pdas


class TestForwardSolve:
    def test_unloaded_phase_field_stays_intact(self, pull_model, zero_solution):
        np.testing.assert_array_equal(zero_solution.state.phi, 1.0)
        np.testing.assert_allclose(zero_solution.state.u, 0.0, atol=1e-14)
        np.testing.assert_array_equal(zero_solution.newton_counts(), 0)

    def test_irreversibility_holds(self, pull_solution):
        increments = np.diff(pull_solution.state.phi, axis=0)
        assert increments.max() <= 1e-12

    def test_ramp_grows_the_crack(self, pull_model, pull_solution):
        table = pull_solution.time_table(pull_model)
        assert list(table.columns) == [
            "step", "time", "elastic", "surface", "load", "energy",
            "phi_min", "phi_max", "active", "newton_iterations",
        ]
        assert len(table) == pull_model.n_times
        assert np.all(np.diff(table["phi_min"]) <= 1e-12)
        assert table["phi_min"].iloc[-1] < 1.0
        assert table["phi_max"].max() <= 1.0

    def test_initial_displacement_is_elastic(self, pull_model, pull_solution):
        expected = pdas.initial_displacement(pull_model, pull_solution.phi0, pull_solution.control.q[0])
        np.testing.assert_allclose(pull_solution.state.u[0], expected)
        # q(0) = 0 on the ramp
        np.testing.assert_allclose(pull_solution.state.u[0], 0.0, atol=1e-14)

    def test_multiplier_is_nonnegative(self, pull_solution):
        assert pull_solution.multiplier.l2.min() >= -1e-12

    def test_iteration_log(self, pull_model, pull_solution):
        log = pull_solution.iterations
        assert set(log["step"]) == set(range(1, pull_model.n_times))
        assert log.groupby("step")["residual"].last().max() <= models.SolverOptions().tol

    def test_phase_field_outside_unit_interval(self, small_model, make_ramp):
        phi0 = np.full(small_model.n_scalar, 1.5)
        with pytest.raises(exceptions.InvalidArgumentError, match="\\[0, 1\\]"):
            pdas.pdas_forward_solve(small_model, make_ramp(small_model), phi0)

    def test_wrong_control_shape(self, small_model):
        control = fields.Control.zeros(small_model.n_times, small_model.n_neumann + 1)
        with pytest.raises(exceptions.InvalidArgumentError):
            pdas.pdas_forward_solve(small_model, control, np.ones(small_model.n_scalar))

    def test_iteration_limit(self, small_model, make_ramp):
        options = models.SolverOptions(max_iter=1, tol=1e-14)
        with pytest.raises(exceptions.SolverFailureError) as error:
            pdas.pdas_forward_solve(small_model, make_ramp(small_model), np.ones(small_model.n_scalar), options)
        assert error.value.step == 1


def _load_unload(model):
    profile = np.zeros(model.n_times)
    profile[1] = 1.0
    return fields.Control(q=np.outer(profile, np.ones(model.n_neumann)))


class TestEnumerationOracle:
    def test_agrees_with_active_set_iteration(self, make_model, make_ramp):
        model = make_model(n=1, n_steps=2)
        control = make_ramp(model, 0.5)
        phi0 = np.ones(model.n_scalar)
        iterated = pdas.pdas_forward_solve(model, control, phi0)
        enumerated = pdas.pdas_forward_solve(model, control, phi0, step_solver=pdas.enumerate_active_sets)
        np.testing.assert_allclose(iterated.state.phi, enumerated.state.phi, atol=1e-9)
        np.testing.assert_allclose(iterated.state.u, enumerated.state.u, atol=1e-9)

    def test_agrees_on_active_bounds(self, make_model):
        model = make_model(n=1, n_steps=2)
        control = _load_unload(model)
        phi0 = np.ones(model.n_scalar)
        iterated = pdas.pdas_forward_solve(model, control, phi0)
        enumerated = pdas.pdas_forward_solve(model, control, phi0, step_solver=pdas.enumerate_active_sets)
        # unloading pins every node at its damaged value
        assert enumerated.active_set.flags[1].all()
        np.testing.assert_array_equal(iterated.active_set.flags, enumerated.active_set.flags)
        np.testing.assert_allclose(iterated.state.phi, enumerated.state.phi, atol=1e-9)
        np.testing.assert_allclose(iterated.state.u, enumerated.state.u, atol=1e-9)
        np.testing.assert_allclose(iterated.step_multipliers, enumerated.step_multipliers, atol=1e-9)

    def test_enumerated_solution_is_kkt_point(self, make_model, make_ramp):
        model = make_model(n=1, n_steps=2)
        control = make_ramp(model, 0.5)
        phi0 = np.ones(model.n_scalar)
        solution = pdas.pdas_forward_solve(model, control, phi0, step_solver=pdas.enumerate_active_sets)
        residual = kkt.kkt_residual_lower(model, solution.state, control, solution.multiplier, phi0)
        assert residual.ok(1e-8)
        assert solution.certified

    def test_fixed_active_set_pins_phase_field(self, small_model, make_ramp):
        control = make_ramp(small_model)
        phi_prev = np.full(small_model.n_scalar, 0.9)
        active = np.zeros(small_model.n_scalar, dtype=bool)
        active[:3] = True
        result = pdas.solve_step_with_active_set(
            small_model, np.zeros(small_model.n_vector), phi_prev, control.q[1], active
        )
        np.testing.assert_array_equal(result.phi[:3], 0.9)
        np.testing.assert_array_equal(result.active, active)


class TestCertificate:
    def test_ramp_solution_is_certified(self, pull_model, pull_solution):
        residual = kkt.kkt_residual_lower(
            pull_model, pull_solution.state, pull_solution.control, pull_solution.multiplier, pull_solution.phi0
        )
        assert pull_solution.residual == residual
        assert pull_solution.certified
        assert residual.r_comp_nodal <= 1e-10

    def test_unloading_breaks_the_certificate(self, make_model, caplog):
        model = make_model(n=1, n_steps=2)
        with caplog.at_level("WARNING", logger="fraktur.pdas"):
            solution = pdas.pdas_forward_solve(model, _load_unload(model), np.ones(model.n_scalar))
        # the step 2 multiplier accumulates onto step 1, where phi moved
        assert solution.residual.r_comp_nodal > 1e-8
        assert not solution.certified
        assert "not a KKT point" in caplog.text

    def test_certificate_follows_kkt_tol(self, make_model):
        model = make_model(n=1, n_steps=2)
        options = models.SolverOptions(kkt_tol=1.0)
        solution = pdas.pdas_forward_solve(model, _load_unload(model), np.ones(model.n_scalar), options)
        assert solution.certified


class TestMultiplierRecovery:
    def test_suffix_sums(self, pull_model, pull_solution):
        lumped = pull_model.disc.lumped_mass
        weights = pull_model.weights
        nu = pull_solution.step_multipliers
        for m in range(1, pull_model.n_times):
            expected = np.sum(weights[m:, None] * nu[m - 1:], axis=0) / lumped
            np.testing.assert_allclose(pull_solution.multiplier.l2[m - 1], expected, atol=1e-14)
