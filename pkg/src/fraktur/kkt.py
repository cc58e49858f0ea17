"""Residuals of the first-order system of the crack model."""
from __future__ import annotations

import dataclasses as _dataclasses

import numpy as _np

import fraktur.constraints as _constraints
import fraktur.energy as _energy
import fraktur.fields as _fields
import fraktur.models as _models
import fraktur.util as _util


@_dataclasses.dataclass(frozen=True)
class LowerKKTResidual(_models._Model):
    """Violations of the lower-level KKT system, all nonnegative.

    Attributes:
        r_feas_init (float): L2 norm of phi(0) - phi_0
        r_feas_irr (float): Largest increase phi^m - phi^{m-1} over all nodes
        r_dual (float): Largest negative part of l2
        r_stat (float): Dual norm of the stationarity residual f' - l g'
        r_comp (float): Absolute value of the complementarity pairing
        r_comp_nodal (float): Largest |min(l2, phi^{m-1} - phi^m)| over all nodes
    """

    r_feas_init: float
    r_feas_irr: float
    r_dual: float
    r_stat: float
    r_comp: float
    r_comp_nodal: float

    def max(self) -> float:
        return max(self._to_json().values())

    def ok(self, tol: float) -> bool:
        return self.max() <= tol


def state_dual_weights(model: _energy.PhaseFieldModel) -> _fields.Direction:
    """Inverse lumped masses, the weights of the dual norm on the state space."""
    inverse = model.zero_direction()
    inverse.u[:] = 1.0 / model.disc.lumped_vector_mass
    inverse.phi[:] = 1.0 / model.disc.lumped_mass
    return inverse


def dual_norm(model: _energy.PhaseFieldModel, functional: _fields.SpaceTimeState) -> float:
    """The lumped-mass dual norm of a coefficient vector on the state space."""
    weights = state_dual_weights(model)
    return _util.weighted_norm(functional.flat(), weights.flat())


def stationarity_residual(
    model: _energy.PhaseFieldModel,
    state: _fields.SpaceTimeState,
    control: _fields.Control,
    multiplier: _fields.LowerMultiplier,
) -> _fields.Direction:
    """f'(u) - l g'(u) as a coefficient vector."""
    return model.gradient(state, control) - _constraints.multiplier_pairing(model, multiplier)


def complementarity_pairing(model: _energy.PhaseFieldModel, state: _fields.SpaceTimeState, multiplier: _fields.LowerMultiplier, phi0) -> float:
    """<l1, phi(0) - phi_0> - sum_m dt <l2^m, (phi^m - phi^{m-1}) / dt>."""
    lumped = model.disc.lumped_mass
    initial = multiplier.l1 @ (lumped * (state.phi[0] - phi0))
    increments = _np.diff(state.phi, axis=0)
    return float(initial - _np.sum(multiplier.l2 * increments * lumped))


def complementarity_gap(state: _fields.SpaceTimeState, multiplier: _fields.LowerMultiplier) -> float:
    """The largest nodal |min(l2^m_i, phi^{m-1}_i - phi^m_i)|."""
    decrease = -_np.diff(state.phi, axis=0)
    if decrease.size == 0:
        return 0.0
    return float(_np.max(_np.abs(_np.minimum(multiplier.l2, decrease))))


def kkt_residual_lower(
    model: _energy.PhaseFieldModel,
    state: _fields.SpaceTimeState,
    control: _fields.Control,
    multiplier: _fields.LowerMultiplier,
    phi0,
) -> LowerKKTResidual:
    """Evaluates the five lower-level KKT conditions.

    Args:
        model (PhaseFieldModel): The discretized model
        state (SpaceTimeState): The primal point
        control (Control): The boundary force
        multiplier (LowerMultiplier): The multiplier of the initial condition and irreversibility
        phi0: The nodal initial phase-field

    Returns:
        LowerKKTResidual: The residual, each component in its own norm

    Raises:
        InvalidArgumentError: Shapes do not match the discretization
    """
    model.check_multiplier(multiplier)
    g_e, _ = _constraints.constraint_g(model, state, phi0)
    residual = stationarity_residual(model, state, control, multiplier)
    return LowerKKTResidual(
        r_feas_init=float(_np.sqrt(max(g_e @ (model.disc.mass @ g_e), 0.0))),
        r_feas_irr=_util.positive_part_max(_np.diff(state.phi, axis=0)),
        r_dual=_util.negative_part_max(multiplier.l2),
        r_stat=dual_norm(model, residual),
        r_comp=abs(complementarity_pairing(model, state, multiplier, phi0)),
        r_comp_nodal=complementarity_gap(state, multiplier),
    )
