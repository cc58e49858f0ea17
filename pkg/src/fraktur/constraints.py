"""The constraint map of the crack model, its derivative and the cone K2."""
from __future__ import annotations

import numpy as _np

import fraktur.energy as _energy
import fraktur.exceptions as _exceptions
import fraktur.fields as _fields


def constraint_g(model: _energy.PhaseFieldModel, state: _fields.SpaceTimeState, phi0) -> tuple:
    """Evaluates g(u) = (phi(0) - phi_0, -phi_dot).

    Args:
        model (PhaseFieldModel): The discretized model
        state (SpaceTimeState): The point to evaluate at
        phi0: The nodal initial phase-field

    Returns:
        tuple: ``g_E`` of shape (n_scalar,) and ``g_I`` of shape (M, n_scalar),
        where row m-1 is -(phi^m - phi^{m-1}) / dt

    Raises:
        InvalidArgumentError: Shapes do not match the discretization
    """
    model.check_state(state)
    phi0 = _np.asarray(phi0, dtype=float)
    if phi0.shape != (model.n_scalar,):
        raise _exceptions.InvalidArgumentError(
            f"phi0 has shape {phi0.shape}, expected ({model.n_scalar},)"
        )
    g_e = state.phi[0] - phi0
    g_i = -_np.diff(state.phi, axis=0) / model.grid.dt
    return g_e, g_i


def cone_membership_K2(field, tol: float = 0.0) -> tuple:
    """Tests nodal nonnegativity.

    Returns:
        tuple: Whether min(field) >= -tol, and the worst violation max(0, -min(field))
    """
    field = _np.asarray(field, dtype=float)
    violation = float(max(0.0, -field.min())) if field.size else 0.0
    return violation <= tol, violation


def g_prime(model: _energy.PhaseFieldModel, direction: _fields.SpaceTimeState) -> tuple:
    """The linearized constraint g'(u)(Phi) = (Phi_phi(0), -Phi_phi_dot).

    g is affine, so the result does not depend on the base point.
    """
    direction.check_shape(model.n_times, model.n_vector, model.n_scalar)
    return direction.phi[0].copy(), -_np.diff(direction.phi, axis=0) / model.grid.dt


def g_prime_right_inverse(model: _energy.PhaseFieldModel, z1, z2) -> _fields.Direction:
    """Constructs a direction Phi with g'(Phi) = (z1, z2).

    Phi_u vanishes, Phi_phi(0) = z1 and Phi_phi^m = Phi_phi^{m-1} - dt z2^m.
    """
    z1 = _np.asarray(z1, dtype=float)
    z2 = _np.asarray(z2, dtype=float)
    if z1.shape != (model.n_scalar,) or z2.shape != (model.n_steps, model.n_scalar):
        raise _exceptions.InvalidArgumentError(
            f"Got z1 {z1.shape} and z2 {z2.shape}, expected ({model.n_scalar},) "
            f"and ({model.n_steps}, {model.n_scalar})"
        )
    phi = _np.empty((model.n_times, model.n_scalar))
    phi[0] = z1
    phi[1:] = z1 - model.grid.dt * _np.cumsum(z2, axis=0)
    return _fields.Direction(u=_np.zeros((model.n_times, model.n_vector)), phi=phi)


def multiplier_pairing(model: _energy.PhaseFieldModel, multiplier: _fields.LowerMultiplier) -> _fields.Direction:
    """The coefficient vector of l g'(Phi) = <l1, Phi_phi(0)> - int_I <l2, Phi_phi_dot>.

    With the dt of the time integral cancelling the difference quotient the
    functional reads l1^T D Phi^0 - sum_m l2^m^T D (Phi^m - Phi^{m-1}).
    """
    model.check_multiplier(multiplier)
    lumped = model.disc.lumped_mass
    l2 = _np.vstack([multiplier.l2, _np.zeros((1, model.n_scalar))])
    result = model.zero_direction()
    result.phi[0] = lumped * (multiplier.l1 + l2[0])
    result.phi[1:] = lumped * (l2[1:] - l2[:-1])
    return result


def pair_multiplier(model: _energy.PhaseFieldModel, multiplier: _fields.LowerMultiplier, direction: _fields.SpaceTimeState) -> float:
    return multiplier_pairing(model, multiplier).dot(direction)
