"""The upper-level control problem: cost, the map a, the constraints and their KKT system."""
from __future__ import annotations

import dataclasses as _dataclasses
import logging as _logging

import numpy as _np
import scipy.optimize as _optimize
import scipy.sparse as _sparse

import fraktur.constraints as _constraints
import fraktur.energy as _energy
import fraktur.fields as _fields
import fraktur.kkt as _kkt
import fraktur.models as _models
import fraktur.util as _util

_logger = _logging.getLogger(__name__)


def targets(model: _energy.PhaseFieldModel, spec: _models.ControlProblemSpec) -> tuple:
    """The desired phase-field and nominal control at every time node."""
    phi_d = _util.as_time_field(spec.phi_d, model.n_times, model.n_scalar, "phi_d")
    q_r = _util.as_time_field(spec.q_r, model.n_times, model.n_neumann, "q_r")
    return phi_d, q_r


def cost_J(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    state: _fields.SpaceTimeState,
    spec: _models.ControlProblemSpec,
) -> float:
    """J = 1/2 int_I |phi - phi_d|^2_Omega + alpha |q - q_r|^2_{Gamma_N} dt, trapezoidal in time."""
    model.check_state(state)
    model.check_control(control)
    phi_d, q_r = targets(model, spec)
    mass, boundary = model.disc.mass, model.disc.boundary_mass
    total = 0.0
    for m, w in enumerate(model.weights):
        e = state.phi[m] - phi_d[m]
        d = control.q[m] - q_r[m]
        total += w * (e @ (mass @ e) + spec.alpha * d @ (boundary @ d))
    return 0.5 * float(total)


def cost_gradient(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    state: _fields.SpaceTimeState,
    spec: _models.ControlProblemSpec,
) -> tuple:
    """The coefficient vectors (dJ/dq, dJ/du) of J'."""
    model.check_state(state)
    model.check_control(control)
    phi_d, q_r = targets(model, spec)
    weights = model.weights[:, None]
    d_control = _fields.Control(
        q=spec.alpha * weights * (model.disc.boundary_mass @ (control.q - q_r).T).T
    )
    d_state = model.zero_direction()
    d_state.phi[:] = weights * (model.disc.mass @ (state.phi - phi_d).T).T
    return d_control, d_state


def cost_hessian_form(
    model: _energy.PhaseFieldModel,
    spec: _models.ControlProblemSpec,
    first: tuple,
    second: tuple,
) -> float:
    """J''((dq1, du1), (dq2, du2)); constant since J is quadratic."""
    (dq1, du1), (dq2, du2) = first, second
    total = 0.0
    for m, w in enumerate(model.weights):
        total += w * (
            du1.phi[m] @ (model.disc.mass @ du2.phi[m])
            + spec.alpha * dq1.q[m] @ (model.disc.boundary_mass @ dq2.q[m])
        )
    return float(total)


def semilinear_a(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
) -> _fields.Direction:
    """a(q, u, l) = f'(u) - l g'(u), the left-hand side of the stationarity condition."""
    return _kkt.stationarity_residual(model, state, control, multiplier)


class UpperLayout:
    """Offsets of the blocks of (dq, du, dl) and of pi in flat vectors."""

    def __init__(self, model: _energy.PhaseFieldModel) -> None:
        self.n_times = model.n_times
        self.n_steps = model.n_steps
        self.n_vector = model.n_vector
        self.n_scalar = model.n_scalar
        self.n_node = model.n_vector + model.n_scalar
        self.n_control = model.n_times * model.n_neumann
        self.n_state = model.n_times * self.n_node
        self.n_multiplier = model.n_times * model.n_scalar
        self.n_delta = self.n_control + self.n_state + self.n_multiplier
        self.n_interval = model.n_steps * model.n_scalar
        self.n_pi = model.n_scalar + self.n_state + 2 * self.n_interval

    def phi_rows(self, m: int) -> _np.ndarray:
        """Positions of phi^m inside a flat state vector."""
        start = m * self.n_node + self.n_vector
        return _np.arange(start, start + self.n_scalar)

    def u_rows(self, m: int) -> _np.ndarray:
        start = m * self.n_node
        return _np.arange(start, start + self.n_vector)

    def join_delta(self, d_control: _fields.Control, d_state: _fields.SpaceTimeState, d_multiplier: _fields.LowerMultiplier) -> _np.ndarray:
        return _np.concatenate([d_control.flat(), d_state.flat(), d_multiplier.flat()])


def _coo(rows, cols, values, shape) -> _sparse.csr_matrix:
    return _sparse.coo_matrix(
        (_np.concatenate(values), (_np.concatenate(rows), _np.concatenate(cols))), shape=shape
    ).tocsr()


def multiplier_jacobian(model: _energy.PhaseFieldModel) -> _sparse.csr_matrix:
    """d a / d l: -D on phi^0 for l1, and +D on phi^m, -D on phi^{m-1} for l2^m."""
    layout = UpperLayout(model)
    lumped = model.disc.lumped_mass
    ns = model.n_scalar
    rows, cols, values = [layout.phi_rows(0)], [_np.arange(ns)], [-lumped]
    for m in range(1, model.n_times):
        col = ns * m + _np.arange(ns)
        rows += [layout.phi_rows(m), layout.phi_rows(m - 1)]
        cols += [col, col]
        values += [lumped, -lumped]
    return _coo(rows, cols, values, (layout.n_state, layout.n_multiplier))


def a_prime_matrix(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
) -> _sparse.csr_matrix:
    """The Jacobian of a over (dq, du, dl) as a sparse matrix.

    Rows follow ``SpaceTimeState.flat``; columns are the flat control, state
    and multiplier blocks. Only the state block depends on the base point.
    """
    model.check_control(control)
    model.check_state(state)
    model.check_multiplier(multiplier)
    load = _sparse.vstack(
        [-model.disc.neumann_operator, _sparse.csr_matrix((model.n_scalar, model.n_neumann))]
    )
    control_block = _sparse.block_diag([w * load for w in model.weights], format="csr")
    state_block = _sparse.block_diag(
        [w * model.node_hessian(state.u[m], state.phi[m]) for m, w in enumerate(model.weights)],
        format="csr",
    )
    return _sparse.hstack([control_block, state_block, multiplier_jacobian(model)], format="csr")


def a_prime_action(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
    d_control: _fields.Control,
    d_state: _fields.SpaceTimeState,
    d_multiplier: _fields.LowerMultiplier,
) -> _fields.Direction:
    """a'(q, u, l)(dq, du, dl) as a coefficient vector on the state space."""
    layout = UpperLayout(model)
    matrix = a_prime_matrix(model, control, state, multiplier)
    product = matrix @ layout.join_delta(d_control, d_state, d_multiplier)
    return _fields.Direction.from_flat(product, model.n_times, model.n_vector, model.n_scalar)


@_dataclasses.dataclass(frozen=True, eq=False)
class UpperConstraint:
    """The four blocks of the upper-level constraint operator.

    Attributes:
        initial (numpy.ndarray): phi(0) - phi_0, must vanish
        state (Direction): a(q, u, l), must vanish
        irreversibility (numpy.ndarray): -phi_dot per interval, must be >= 0
        multiplier (numpy.ndarray): l2 per interval, must be >= 0
    """

    initial: _np.ndarray
    state: _fields.Direction
    irreversibility: _np.ndarray
    multiplier: _np.ndarray

    def violations(self, model: _energy.PhaseFieldModel) -> dict:
        initial = float(_np.sqrt(max(self.initial @ (model.disc.mass @ self.initial), 0.0)))
        return {
            "initial": initial,
            "state": _kkt.dual_norm(model, self.state),
            "irreversibility": _util.negative_part_max(self.irreversibility),
            "multiplier": _util.negative_part_max(self.multiplier),
        }

    def feasible(self, model: _energy.PhaseFieldModel, tol: float) -> bool:
        return max(self.violations(model).values()) <= tol


def upper_constraint_G(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
    phi0,
) -> UpperConstraint:
    g_e, g_i = _constraints.constraint_g(model, state, phi0)
    return UpperConstraint(
        initial=g_e,
        state=semilinear_a(model, control, state, multiplier),
        irreversibility=g_i,
        multiplier=multiplier.l2.copy(),
    )


def upper_constraint_derivative(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
) -> _sparse.csr_matrix:
    """The matrix of pi -> pi o G'(dq, du, dl), one row per entry of the flat pi.

    The blocks pair through <pi1, dphi(0)>, <pi2, a'(delta)>,
    -int <pi3, dphi_dot> and int <pi4, dl2>.
    """
    layout = UpperLayout(model)
    lumped = model.disc.lumped_mass
    ns = model.n_scalar
    state_offset = layout.n_control
    multiplier_offset = layout.n_control + layout.n_state

    first = _coo(
        [_np.arange(ns)], [state_offset + layout.phi_rows(0)], [lumped], (ns, layout.n_delta)
    )
    second = a_prime_matrix(model, control, state, multiplier)

    rows, cols, values = [], [], []
    for m in range(1, model.n_times):
        row = (m - 1) * ns + _np.arange(ns)
        rows += [row, row]
        cols += [state_offset + layout.phi_rows(m), state_offset + layout.phi_rows(m - 1)]
        values += [-lumped, lumped]
    third = _coo(rows, cols, values, (layout.n_interval, layout.n_delta))

    dt = model.grid.dt
    fourth = _coo(
        [_np.arange(layout.n_interval)],
        [multiplier_offset + ns + _np.arange(layout.n_interval)],
        [dt * _np.tile(lumped, model.n_steps)],
        (layout.n_interval, layout.n_delta),
    )
    return _sparse.vstack([first, second, third, fourth], format="csr")


def delta_dual_weights(model: _energy.PhaseFieldModel) -> _np.ndarray:
    """Inverse lumped masses over the flat (dq, du, dl) vector."""
    boundary = _np.tile(1.0 / model.disc.lumped_boundary_mass, model.n_times)
    state = _kkt.state_dual_weights(model).flat()
    multiplier = _np.tile(1.0 / model.disc.lumped_mass, model.n_times)
    return _np.concatenate([boundary, state, multiplier])


def cost_derivative_vector(model, control, state, spec) -> _np.ndarray:
    d_control, d_state = cost_gradient(model, control, state, spec)
    return _np.concatenate([d_control.flat(), d_state.flat(), _np.zeros(model.n_times * model.n_scalar)])


@_dataclasses.dataclass(frozen=True)
class UpperKKTResidual(_models._Model):
    """Violations of the eight upper-level KKT conditions.

    Attributes:
        r_init (float): phi(0) - phi_0 in L2
        r_state (float): Dual norm of a
        r_irr (float): Largest negative part of -phi_dot
        r_sign (float): Largest negative part of l2
        r_pi3 (float): Largest negative part of pi3
        r_pi4 (float): Largest negative part of pi4
        r_stat (float): Dual norm of J' - pi o G'
        r_comp (float): |pi o G| as displayed
        r_comp_rel (float): r_comp / |pi|
    """

    r_init: float
    r_state: float
    r_irr: float
    r_sign: float
    r_pi3: float
    r_pi4: float
    r_stat: float
    r_comp: float
    r_comp_rel: float

    def feasibility(self) -> float:
        """The largest violation among the first six conditions."""
        return max(self.r_init, self.r_state, self.r_irr, self.r_sign, self.r_pi3, self.r_pi4)


def upper_complementarity(
    model: _energy.PhaseFieldModel,
    constraint: UpperConstraint,
    pi: _fields.UpperMultiplier,
) -> float:
    """<pi1, phi(0) - phi_0> + <pi2, a> - int (<pi3, phi_dot> - <pi4, l2>)."""
    lumped = model.disc.lumped_mass
    dt = model.grid.dt
    value = pi.pi1 @ (lumped * constraint.initial)
    value += pi.pi2.dot(constraint.state)
    value += dt * _np.sum(pi.pi3 * constraint.irreversibility * lumped)
    value += dt * _np.sum(pi.pi4 * constraint.multiplier * lumped)
    return float(value)


def upper_kkt_residual(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
    pi: _fields.UpperMultiplier,
    spec: _models.ControlProblemSpec,
    phi0,
) -> UpperKKTResidual:
    """Evaluates the eight upper-level KKT conditions at (q, u, l, pi)."""
    constraint = upper_constraint_G(model, control, state, multiplier, phi0)
    violations = constraint.violations(model)
    derivative = upper_constraint_derivative(model, control, state, multiplier)
    stationarity = cost_derivative_vector(model, control, state, spec) - derivative.T @ pi.flat()
    complementarity = abs(upper_complementarity(model, constraint, pi))
    norm = pi.norm()
    return UpperKKTResidual(
        r_init=violations["initial"],
        r_state=violations["state"],
        r_irr=violations["irreversibility"],
        r_sign=violations["multiplier"],
        r_pi3=_util.negative_part_max(pi.pi3),
        r_pi4=_util.negative_part_max(pi.pi4),
        r_stat=_util.weighted_norm(stationarity, delta_dual_weights(model)),
        r_comp=complementarity,
        r_comp_rel=complementarity / norm if norm > 0 else 0.0,
    )


@_dataclasses.dataclass(frozen=True, eq=False)
class MultiplierFit:
    """A least-squares fit of the upper-level multiplier.

    Attributes:
        pi (UpperMultiplier): The fitted multiplier
        residual (float): The weighted norm of J' - pi o G' left over
        status (int): The termination status of ``scipy.optimize.lsq_linear``
    """

    pi: _fields.UpperMultiplier
    residual: float
    status: int


def recover_upper_multiplier(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
    spec: _models.ControlProblemSpec,
    options: _models.ControlOptions | None = None,
) -> MultiplierFit:
    """Fits pi to the stationarity condition J' = pi o G' with pi3, pi4 >= 0.

    The fit is a bounded linear least-squares problem in the lumped-mass
    dual norm; it returns some multiplier even where none exists exactly.
    """
    options = options or _models.ControlOptions()
    layout = UpperLayout(model)
    derivative = upper_constraint_derivative(model, control, state, multiplier)
    scale = _np.sqrt(delta_dual_weights(model))
    matrix = (_sparse.diags(scale) @ derivative.T).toarray()
    rhs = scale * cost_derivative_vector(model, control, state, spec)

    lower = _np.full(layout.n_pi, -_np.inf)
    lower[model.n_scalar + layout.n_state:] = 0.0
    result = _optimize.lsq_linear(
        matrix, rhs, bounds=(lower, _np.inf), lsq_solver="exact", tol=options.lsq_tol
    )
    _logger.info(
        "Multiplier fit: status %d, residual %.3e", result.status, float(_np.linalg.norm(result.fun))
    )
    pi = _fields.UpperMultiplier.from_flat(
        result.x, model.n_steps, model.n_vector, model.n_scalar
    )
    return MultiplierFit(pi=pi, residual=float(_np.linalg.norm(result.fun)), status=int(result.status))
