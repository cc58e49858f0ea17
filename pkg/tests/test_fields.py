"""Tests for the field containers."""
import numpy as np
import pytest

from fraktur import exceptions, fields


class TestSpaceTimeState:
    def test_arithmetic_keeps_type(self):
        direction = fields.Direction.zeros(3, 4, 2)
        assert isinstance(direction + direction, fields.Direction)
        assert isinstance(-direction, fields.Direction)
        assert isinstance(direction * 2.0, fields.Direction)

    def test_flat_layout(self):
        state = fields.SpaceTimeState(u=[[1.0, 2.0], [3.0, 4.0]], phi=[[5.0], [6.0]])
        np.testing.assert_array_equal(state.flat(), [1.0, 2.0, 5.0, 3.0, 4.0, 6.0])
        again = fields.SpaceTimeState.from_flat(state.flat(), 2, 2, 1)
        np.testing.assert_array_equal(again.u, state.u)

    def test_copy_is_independent(self):
        state = fields.SpaceTimeState.zeros(2, 2, 2)
        copy = state.copy()
        copy.phi[0, 0] = 1.0
        assert state.phi[0, 0] == 0.0

    def test_mismatched_time_nodes(self):
        with pytest.raises(exceptions.InvalidArgumentError):
            fields.SpaceTimeState(u=np.zeros((3, 2)), phi=np.zeros((2, 2)))

    def test_non_finite_values(self):
        with pytest.raises(exceptions.InvalidArgumentError):
            fields.SpaceTimeState(u=np.zeros((2, 2)), phi=np.full((2, 2), np.nan))


class TestMultipliers:
    def test_active_set_steps(self):
        active = fields.ActiveSet(flags=[[True, False], [False, False]])
        np.testing.assert_array_equal(active.step(1), [True, False])
        np.testing.assert_array_equal(active.counts(), [1, 0])
        assert not active.is_empty()
        assert fields.ActiveSet.empty(2, 2).is_empty()

    def test_upper_multiplier_layout(self):
        pi = fields.UpperMultiplier.zeros(n_steps=2, n_vector=4, n_scalar=3)
        assert pi.flat().shape == (3 + 3 * 7 + 2 * 3 + 2 * 3,)
        vector = np.arange(pi.flat().size, dtype=float)
        rebuilt = fields.UpperMultiplier.from_flat(vector, 2, 4, 3)
        np.testing.assert_array_equal(rebuilt.flat(), vector)
        np.testing.assert_array_equal(rebuilt.pi4[-1], vector[-3:])
