"""Tests for the discrete regularity probe."""
import numpy as np
import pytest

from fraktur import regularity


class TestRegularityProbe:
    def test_loaded_state_is_regular(self, pull_model, pull_solution):
        report = regularity.regularity_probe(pull_model, pull_solution.state)
        assert report.north_ok
        assert report.infsup_A > 0
        assert report.infsup_B == min(report.infsup_initial, report.infsup_constant)
        assert not report.zero_strain
        assert not report.zero_phase_field

    def test_displacement_part_dominates_elastic_bound(self, pull_model, pull_solution):
        report = regularity.regularity_probe(pull_model, pull_solution.state)
        assert report.elastic_bound > 0
        assert report.infsup_u >= report.elastic_bound * (1 - 1e-10)
        assert report.sigma_max_A >= report.infsup_A

    def test_unloaded_state_is_degenerate(self, pull_model, zero_solution, caplog):
        report = regularity.regularity_probe(pull_model, zero_solution.state)
        assert report.zero_strain
        assert not report.north_ok
        assert report.infsup_constant == 0.0
        assert "Degenerate state" in caplog.text

    def test_fully_broken_state_is_degenerate(self, pull_model, pull_solution):
        state = pull_solution.state.copy()
        state.phi[1:] = 0.0
        report = regularity.regularity_probe(pull_model, state)
        assert report.zero_phase_field
        assert not report.north_ok

    def test_reproducible(self, pull_model, pull_solution):
        first = regularity.regularity_probe(pull_model, pull_solution.state)
        second = regularity.regularity_probe(pull_model, pull_solution.state)
        assert first._to_json() == second._to_json()

    def test_time_gram_is_positive_definite(self, pull_model):
        gram = regularity.time_gram(pull_model)
        np.testing.assert_allclose(gram, gram.T)
        assert np.linalg.eigvalsh(gram).min() > 0
        assert np.trace(gram) == pytest.approx(pull_model.grid.t_final + 2 * pull_model.n_steps / pull_model.grid.dt)
