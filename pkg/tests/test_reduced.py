"""Tests for the reduced gradient and the control solver."""
import numpy as np
import pytest

from fraktur import models, pdas, reduced

SOLVER = models.SolverOptions(tol=1e-12)


def _problem(model, make_ramp, target_amplitude=1.5, nominal_amplitude=0.5, alpha=1e-3):
    phi0 = np.ones(model.n_scalar)
    target = pdas.pdas_forward_solve(model, make_ramp(model, target_amplitude), phi0, SOLVER)
    spec = models.ControlProblemSpec(
        alpha=alpha, phi_d=target.state.phi, q_r=make_ramp(model, nominal_amplitude).q
    )
    return spec, phi0


def _recovery_error(model, control, reference):
    boundary = model.disc.boundary_mass

    def norm_sq(q):
        return sum(w * row @ (boundary @ row) for w, row in zip(model.weights, q))

    return np.sqrt(norm_sq(control.q - reference.q) / norm_sq(reference.q))


class TestReducedGradient:
    def test_central_difference(self, make_model, make_ramp, rng):
        model = make_model(n=2, n_steps=3)
        spec, phi0 = _problem(model, make_ramp)
        cost = reduced.ReducedCost(model, spec, phi0, SOLVER)
        point = make_ramp(model, 1.0).flat()
        _, gradient, _ = cost.evaluate(point)
        direction = rng.standard_normal(point.size)
        h = 1e-4
        plus, _, _ = cost.evaluate(point + h * direction)
        minus, _, _ = cost.evaluate(point - h * direction)
        assert (plus - minus) / (2 * h) == pytest.approx(gradient @ direction, rel=1e-5, abs=1e-9)

    def test_tikhonov_part(self, make_model, make_ramp):
        model = make_model(n=2, n_steps=2)
        phi0 = np.ones(model.n_scalar)
        control = make_ramp(model, 1.0)
        solution = pdas.pdas_forward_solve(model, control, phi0, SOLVER)
        # tracking the own trajectory leaves only alpha (q - q_r)
        spec = models.ControlProblemSpec(alpha=2.0, phi_d=solution.state.phi, q_r=0.0)
        gradient = reduced.reduced_gradient(model, solution, spec)
        expected = 2.0 * model.weights[:, None] * (model.disc.boundary_mass @ control.q.T).T
        np.testing.assert_allclose(gradient.q, expected, atol=1e-14)

    def test_cache_counts_forward_solves(self, make_model, make_ramp):
        model = make_model(n=2, n_steps=2)
        spec, phi0 = _problem(model, make_ramp)
        cost = reduced.ReducedCost(model, spec, phi0, SOLVER)
        point = make_ramp(model, 1.0).flat()
        cost(point)
        cost(point)
        assert cost.evaluations == 1
        assert cost.best[0] == cost(point)[0]


class TestSolveControl:
    def test_recovers_generating_force(self, make_model, make_ramp):
        model = make_model(n=2, n_steps=3)
        spec, phi0 = _problem(model, make_ramp, target_amplitude=1.0, nominal_amplitude=0.8, alpha=1e-4)
        options = models.ControlOptions(max_iter=100)
        result = reduced.solve_control(model, spec, phi0, make_ramp(model, 0.7), options, SOLVER)
        assert _recovery_error(model, result.control, make_ramp(model, 1.0)) <= 0.05
        history = result.history
        assert list(history.columns) == ["iter", "J", "grad_norm", "step_length", "complementarity_held"]
        assert result.cost <= history["J"].iloc[0]
        assert np.all(np.diff(history["J"]) <= 1e-14)
        assert result.complementarity_held
        assert result.residual.r_pi3 == 0.0

    def test_large_alpha_keeps_nominal_force(self, make_model, make_ramp):
        model = make_model(n=2, n_steps=2)
        spec, phi0 = _problem(model, make_ramp, target_amplitude=1.0, nominal_amplitude=0.5, alpha=1e3)
        result = reduced.solve_control(model, spec, phi0, make_ramp(model, 0.7), solver_options=SOLVER)
        np.testing.assert_allclose(result.control.q, make_ramp(model, 0.5).q, atol=1e-3)
