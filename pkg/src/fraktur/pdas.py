"""The primal-dual active set forward solver."""
from __future__ import annotations

import dataclasses as _dataclasses
import itertools as _itertools
import logging as _logging

import numpy as _np
import pandas as _pd
import scipy.linalg as _linalg
import scipy.sparse.linalg as _sparse_linalg

import fraktur.energy as _energy
import fraktur.exceptions as _exceptions
import fraktur.fields as _fields
import fraktur.kkt as _kkt
import fraktur.models as _models

_logger = _logging.getLogger(__name__)

_ENERGY_SLACK = 1e-13

ITERATION_COLUMNS = (
    "step",
    "iteration",
    "active",
    "residual",
    "shift",
    "step_length",
    "energy",
)


@_dataclasses.dataclass(eq=False)
class StepResult:
    """The outcome of one time step.

    Attributes:
        u (numpy.ndarray): Displacement at the new time node
        phi (numpy.ndarray): Phase-field at the new time node
        active (numpy.ndarray): Nodes where irreversibility is active
        nu (numpy.ndarray): Nodal step multiplier, -dE/dphi on the active set and zero elsewhere
        energy (float): The step energy reached
        residual (float): The final stationarity residual
        rows (list[dict]): One iteration log row per iterate
    """

    u: _np.ndarray
    phi: _np.ndarray
    active: _np.ndarray
    nu: _np.ndarray
    energy: float
    residual: float
    rows: list

    @property
    def iterations(self) -> int:
        return len(self.rows) - 1


class StepProblem:
    """Minimizes the step energy E_m(u, phi) subject to phi <= phi_prev nodally.

    The bound is handled with the active set
    A = {i : -dE/dphi_i / D_ii + c (phi_i - phi_prev_i) > 0}, where D is the
    lumped mass and c = c_scale g_c / eps. Each iteration fixes phi on A and
    takes a Newton step in the remaining unknowns.
    """

    def __init__(self, model: _energy.PhaseFieldModel, q_m, phi_prev, options: _models.SolverOptions, step: int) -> None:
        self.model = model
        self.q = _np.asarray(q_m, dtype=float)
        self.phi_prev = _np.asarray(phi_prev, dtype=float)
        self.options = options
        self.step = step
        self.n_vector = model.n_vector
        self.lumped = model.disc.lumped_mass
        self.lumped_u = model.disc.lumped_vector_mass
        self.c = options.c_scale * model.params.g_c / model.params.eps

    def split(self, x: _np.ndarray) -> tuple:
        return x[: self.n_vector], x[self.n_vector:]

    def energy(self, x: _np.ndarray) -> float:
        return self.model.node_energy(*self.split(x), self.q)

    def gradient(self, x: _np.ndarray) -> _np.ndarray:
        return _np.concatenate(self.model.node_gradient(*self.split(x), self.q))

    def active_set(self, x: _np.ndarray, gradient: _np.ndarray) -> _np.ndarray:
        _, phi = self.split(x)
        nu = -gradient[self.n_vector:] / self.lumped
        return nu + self.c * (phi - self.phi_prev) > 0.0

    def residual(self, x: _np.ndarray, gradient: _np.ndarray) -> float:
        """Dual norm of the step KKT system written with the min-function."""
        _, phi = self.split(x)
        g_u, g_phi = self.split(gradient)
        rho = _np.minimum(-g_phi, self.c * self.lumped * (self.phi_prev - phi))
        return float(_np.sqrt(_np.sum(g_u**2 / self.lumped_u) + _np.sum(rho**2 / self.lumped)))

    def equality_residual(self, gradient: _np.ndarray, active: _np.ndarray) -> float:
        g_u, g_phi = self.split(gradient)
        free = ~active
        return float(
            _np.sqrt(_np.sum(g_u**2 / self.lumped_u) + _np.sum(g_phi[free] ** 2 / self.lumped[free]))
        )

    def newton_direction(self, x: _np.ndarray, gradient: _np.ndarray, active: _np.ndarray, residual: float) -> tuple:
        """Newton direction with phi pinned to phi_prev on the active set.

        Returns:
            tuple: The direction and the Levenberg shift that was needed

        Raises:
            SolverFailureError: The shifted Hessian stayed indefinite
        """
        _, phi = self.split(x)
        free = _np.concatenate([_np.ones(self.n_vector, dtype=bool), ~active])
        direction = _np.zeros_like(x)
        direction[self.n_vector:][active] = self.phi_prev[active] - phi[active]

        hessian = self.model.node_hessian(*self.split(x)).toarray()
        h_ff = hessian[_np.ix_(free, free)]
        rhs = -gradient[free] - hessian[_np.ix_(free, ~free)] @ direction[~free]

        shift = 0.0
        scale = max(1.0, float(_np.max(_np.abs(_np.diag(h_ff))))) if h_ff.size else 1.0
        for _ in range(self.options.max_shift_doublings + 1):
            try:
                factor = _linalg.cho_factor(h_ff + shift * _np.eye(len(h_ff)))
                break
            except _linalg.LinAlgError:
                shift = self.options.shift * scale if shift == 0.0 else 2.0 * shift
        else:
            raise _exceptions.SolverFailureError(
                "step Hessian stayed indefinite after shifting", residual, self.step
            )
        if shift > 0.0:
            _logger.info("Step %d: Levenberg shift %.3e", self.step, shift)
        direction[free] = _linalg.cho_solve(factor, rhs)
        return direction, shift

    def line_search(self, x: _np.ndarray, direction: _np.ndarray, energy: float, clip: bool, residual: float) -> tuple:
        """Backtracking until the step energy does not increase.

        Raises:
            SolverFailureError: No step length was accepted
        """
        alpha = 1.0
        for _ in range(self.options.max_backtracks + 1):
            trial = x + alpha * direction
            if clip:
                trial[self.n_vector:] = _np.minimum(trial[self.n_vector:], self.phi_prev)
            trial_energy = self.energy(trial)
            if trial_energy <= energy + _ENERGY_SLACK * (1.0 + abs(energy)):
                return trial, trial_energy, alpha
            alpha *= 0.5
        raise _exceptions.SolverFailureError(
            "line search found no energy decrease", residual, self.step
        )

    def solve(self, u_start, phi_start, fixed_active=None) -> StepResult:
        """Runs the active set iteration from (u_start, phi_start).

        Args:
            fixed_active: Keep this active set instead of updating it; the
                bound is then not enforced on the remaining nodes

        Raises:
            SolverFailureError: No convergence within max_iter
        """
        x = _np.concatenate([u_start, phi_start]).astype(float)
        if fixed_active is None:
            x[self.n_vector:] = _np.minimum(x[self.n_vector:], self.phi_prev)
        else:
            fixed_active = _np.asarray(fixed_active, dtype=bool)
            x[self.n_vector:][fixed_active] = self.phi_prev[fixed_active]
        energy = self.energy(x)
        rows = []
        shift, alpha = 0.0, 0.0
        for iteration in range(self.options.max_iter + 1):
            gradient = self.gradient(x)
            if fixed_active is None:
                active = self.active_set(x, gradient)
                residual = self.residual(x, gradient)
            else:
                active = fixed_active
                residual = self.equality_residual(gradient, active)
            rows.append(
                {
                    "step": self.step,
                    "iteration": iteration,
                    "active": int(active.sum()),
                    "residual": residual,
                    "shift": shift,
                    "step_length": alpha,
                    "energy": energy,
                }
            )
            _logger.debug(
                "Step %d iteration %d: active %d, residual %.3e, shift %.1e, step %.3f",
                self.step,
                iteration,
                int(active.sum()),
                residual,
                shift,
                alpha,
            )
            if residual <= self.options.tol:
                return self._result(x, gradient, active, energy, residual, rows)
            if iteration == self.options.max_iter:
                break
            direction, shift = self.newton_direction(x, gradient, active, residual)
            x, energy, alpha = self.line_search(
                x, direction, energy, fixed_active is None, residual
            )
        raise _exceptions.SolverFailureError(
            f"no convergence within {self.options.max_iter} iterations", residual, self.step
        )

    def _result(self, x, gradient, active, energy, residual, rows) -> StepResult:
        u, phi = (part.copy() for part in self.split(x))
        phi[active] = self.phi_prev[active]
        nu = _np.where(active, -gradient[self.n_vector:], 0.0)
        return StepResult(
            u=u,
            phi=phi,
            active=active.copy(),
            nu=nu,
            energy=energy,
            residual=residual,
            rows=rows,
        )


def solve_step_with_active_set(
    model: _energy.PhaseFieldModel,
    u_start,
    phi_prev,
    q_m,
    active,
    options: _models.SolverOptions | None = None,
    step: int = 1,
) -> StepResult:
    """Solves one time step with phi = phi_prev prescribed on ``active`` and no bound elsewhere."""
    options = options or _models.SolverOptions()
    problem = StepProblem(model, q_m, phi_prev, options, step)
    return problem.solve(_np.asarray(u_start, dtype=float), _np.asarray(phi_prev, dtype=float), fixed_active=active)


def step_is_feasible(model: _energy.PhaseFieldModel, result: StepResult, phi_prev, q_m, tol: float) -> bool:
    """Checks primal and dual feasibility of a fixed active set solution."""
    _, g_phi = model.node_gradient(result.u, result.phi, q_m)
    free = ~result.active
    primal = bool(_np.all(result.phi[free] <= _np.asarray(phi_prev)[free] + tol))
    dual = bool(_np.all(-g_phi[result.active] >= -tol))
    return primal and dual


def enumerate_active_sets(
    model: _energy.PhaseFieldModel,
    u_start,
    phi_prev,
    q_m,
    options: _models.SolverOptions | None = None,
    step: int = 1,
    tol: float = 1e-9,
) -> StepResult:
    """Solves one time step by trying every active set.

    Among the KKT points found the one with the lowest step energy is
    returned. The cost is exponential in the number of nodes.

    Raises:
        SolverFailureError: No active set gives a KKT point
    """
    n_scalar = model.n_scalar
    best = None
    for flags in _itertools.product((False, True), repeat=n_scalar):
        active = _np.array(flags, dtype=bool)
        try:
            result = solve_step_with_active_set(model, u_start, phi_prev, q_m, active, options, step)
        except _exceptions.SolverFailureError:
            continue
        if not step_is_feasible(model, result, phi_prev, q_m, tol):
            continue
        if best is None or result.energy < best.energy:
            best = result
    if best is None:
        raise _exceptions.SolverFailureError("no active set yields a KKT point", step=step)
    return best


@_dataclasses.dataclass(eq=False)
class ForwardSolution:
    """The output of the forward solver.

    Attributes:
        state (SpaceTimeState): The displacement and phase-field trajectory
        multiplier (LowerMultiplier): The space-time multiplier
        active_set (ActiveSet): The final active set per step
        control (Control): The control the state belongs to
        phi0 (numpy.ndarray): The initial phase-field
        step_multipliers (numpy.ndarray): Nodal step multipliers, shape (M, n_scalar)
        iterations (pandas.DataFrame): The iteration log
        residual (LowerKKTResidual): The space-time KKT residual of state and multiplier
        certified (bool): The residual is within ``kkt_tol``
    """

    state: _fields.SpaceTimeState
    multiplier: _fields.LowerMultiplier
    active_set: _fields.ActiveSet
    control: _fields.Control
    phi0: _np.ndarray
    step_multipliers: _np.ndarray
    iterations: _pd.DataFrame
    residual: _kkt.LowerKKTResidual
    certified: bool

    def newton_counts(self) -> _np.ndarray:
        counts = self.iterations.groupby("step")["iteration"].max()
        return counts.to_numpy(dtype=int)

    def time_table(self, model: _energy.PhaseFieldModel) -> _pd.DataFrame:
        """One row per time node with the energy split and phase-field bounds."""
        rows = []
        counts = _np.concatenate([[0], self.newton_counts()])
        active = _np.concatenate([[0], self.active_set.counts()])
        for m, t in enumerate(model.grid.times):
            parts = model.energy_parts(self.state.u[m], self.state.phi[m], self.control.q[m])
            rows.append(
                {
                    "step": m,
                    "time": t,
                    "elastic": parts["elastic"],
                    "surface": parts["surface"],
                    "load": parts["load"],
                    "energy": parts["elastic"] + parts["surface"] - parts["load"],
                    "phi_min": float(self.state.phi[m].min()),
                    "phi_max": float(self.state.phi[m].max()),
                    "active": int(active[m]),
                    "newton_iterations": int(counts[m]),
                }
            )
        return _pd.DataFrame(rows)


def initial_displacement(model: _energy.PhaseFieldModel, phi0, q0) -> _np.ndarray:
    """Solves the elasticity system K(phi_0) u = F(q^0) at t = 0."""
    k_uu, _, _ = model.node_hessian_blocks(_np.zeros(model.n_vector), phi0)
    return _sparse_linalg.spsolve(k_uu.tocsc(), model.load(q0))


def recover_lower_multiplier(
    model: _energy.PhaseFieldModel,
    state: _fields.SpaceTimeState,
    control: _fields.Control,
    step_multipliers,
) -> _fields.LowerMultiplier:
    """Assembles the space-time multiplier from the step multipliers.

    l2^m is the lumped-mass representative of the trapezoid-weighted step
    multipliers summed over steps m..M; l1 absorbs the phase-field gradient at
    t = 0.
    """
    lumped = model.disc.lumped_mass
    weights = model.weights
    weighted = weights[1:, None] * _np.asarray(step_multipliers, dtype=float)
    l2 = _np.cumsum(weighted[::-1], axis=0)[::-1] / lumped
    _, grad_phi0 = model.node_gradient(state.u[0], state.phi[0], control.q[0])
    l1 = weights[0] * grad_phi0 / lumped - l2[0]
    return _fields.LowerMultiplier(l1=l1, l2=l2)


def _check_initial_phase_field(model: _energy.PhaseFieldModel, phi0) -> _np.ndarray:
    phi0 = _np.asarray(phi0, dtype=float)
    if phi0.shape != (model.n_scalar,):
        raise _exceptions.InvalidArgumentError(
            f"phi0 has shape {phi0.shape}, expected ({model.n_scalar},)"
        )
    if _np.any(phi0 < 0.0) or _np.any(phi0 > 1.0):
        raise _exceptions.InvalidArgumentError("phi0 must take values in [0, 1]")
    return phi0


def pdas_forward_solve(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    phi0,
    options: _models.SolverOptions | None = None,
    step_solver=None,
) -> ForwardSolution:
    """Solves the crack problem for a given boundary force, one time step after the other.

    Args:
        model (PhaseFieldModel): The discretized model
        control (Control): The boundary force at every time node
        phi0: The nodal initial phase-field, values in [0, 1]
        options (SolverOptions): Solver tolerances, defaults if omitted
        step_solver: Replaces the active set iteration of a step; called as
            ``step_solver(model, u_start, phi_prev, q_m, options, step)``

    Returns:
        ForwardSolution: State, multiplier, active sets and the iteration log

    Raises:
        InvalidArgumentError: Shapes do not match or phi0 leaves [0, 1]
        SolverFailureError: A time step did not converge
    """
    options = options or _models.SolverOptions()
    model.check_control(control)
    phi0 = _check_initial_phase_field(model, phi0)

    state = model.zero_state()
    state.phi[0] = phi0
    state.u[0] = initial_displacement(model, phi0, control.q[0])
    active_set = _fields.ActiveSet.empty(model.n_steps, model.n_scalar)
    step_multipliers = _np.zeros((model.n_steps, model.n_scalar))
    rows = []

    for m in range(1, model.n_times):
        if step_solver is None:
            problem = StepProblem(model, control.q[m], state.phi[m - 1], options, m)
            result = problem.solve(state.u[m - 1], state.phi[m - 1])
        else:
            result = step_solver(model, state.u[m - 1], state.phi[m - 1], control.q[m], options, m)
        state.u[m] = result.u
        state.phi[m] = result.phi
        active_set.flags[m - 1] = result.active
        step_multipliers[m - 1] = result.nu
        rows.extend(result.rows)
        _logger.info(
            "Step %d: %d iterations, %d active nodes, min phi %.6f",
            m,
            result.iterations,
            int(result.active.sum()),
            float(result.phi.min()),
        )

    multiplier = recover_lower_multiplier(model, state, control, step_multipliers)
    residual = _kkt.kkt_residual_lower(model, state, control, multiplier, phi0)
    certified = residual.ok(options.kkt_tol)
    if not certified:
        # every step converged, but the accumulated multiplier misses the space-time system
        _logger.warning(
            "Forward solution is not a KKT point: residual %.3e > kkt_tol %.1e (r_comp_nodal %.3e)",
            residual.max(),
            options.kkt_tol,
            residual.r_comp_nodal,
        )
    return ForwardSolution(
        state=state,
        multiplier=multiplier,
        active_set=active_set,
        control=control,
        phi0=phi0,
        step_multipliers=step_multipliers,
        iterations=_pd.DataFrame(rows, columns=list(ITERATION_COLUMNS)),
        residual=residual,
        certified=certified,
    )
