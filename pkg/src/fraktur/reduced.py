"""The reduced control problem: adjoint gradient and a quasi-Newton solver."""
from __future__ import annotations

import dataclasses as _dataclasses
import logging as _logging

import numpy as _np
import pandas as _pd
import scipy.linalg as _linalg
import scipy.optimize as _optimize

import fraktur.control as _control
import fraktur.energy as _energy
import fraktur.exceptions as _exceptions
import fraktur.fields as _fields
import fraktur.kkt as _kkt
import fraktur.models as _models
import fraktur.pdas as _pdas

_logger = _logging.getLogger(__name__)

# the gradient test ends the iteration, not the relative decrease of J
_FTOL = 1e-15

HISTORY_COLUMNS = ("iter", "J", "grad_norm", "step_length", "complementarity_held")


def _log_degenerate_nodes(solution: _pdas.ForwardSolution, tol: float) -> None:
    decrease = -_np.diff(solution.state.phi, axis=0)
    degenerate = (_np.abs(solution.step_multipliers) < tol) & (_np.abs(decrease) < tol)
    degenerate &= solution.state.phi[1:] < 1.0 - tol
    count = int(degenerate.sum())
    if count:
        _logger.info("%d nodes are not strictly complementary; the gradient is one-sided there", count)


def reduced_gradient(
    model: _energy.PhaseFieldModel,
    solution: _pdas.ForwardSolution,
    spec: _models.ControlProblemSpec,
    tol: float = 1e-12,
) -> _fields.Control:
    """The gradient of q -> J(q, u(q)) with the active sets of ``solution`` frozen.

    Each step is linearized with phi pinned on its active set; the adjoint
    runs backwards and passes sensitivity to the previous phase-field only
    through the active nodes.

    Raises:
        SolverFailureError: An adjoint step system is singular
    """
    control, state = solution.control, solution.state
    phi_d, q_r = _control.targets(model, spec)
    weights = model.weights
    mass, boundary = model.disc.mass, model.disc.boundary_mass
    n_vector = model.n_vector
    load = model.disc.neumann_operator

    gradient = spec.alpha * weights[:, None] * (boundary @ (control.q - q_r).T).T
    carry = _np.zeros(model.n_scalar)
    for m in range(model.n_steps, 0, -1):
        adjoint_load = weights[m] * (mass @ (state.phi[m] - phi_d[m])) + carry
        active = solution.active_set.step(m)
        free = _np.concatenate([_np.ones(n_vector, dtype=bool), ~active])
        hessian = model.node_hessian(state.u[m], state.phi[m]).toarray()
        rhs = _np.zeros(int(free.sum()))
        rhs[n_vector:] = adjoint_load[~active]
        try:
            adjoint = _linalg.solve(hessian[_np.ix_(free, free)], rhs, assume_a="sym")
        except _linalg.LinAlgError as error:
            raise _exceptions.SolverFailureError(
                f"singular adjoint step system ({error})", step=m
            ) from error
        if not _np.all(_np.isfinite(adjoint)):
            raise _exceptions.SolverFailureError("singular adjoint step system", step=m)
        gradient[m] += load.T @ adjoint[:n_vector]
        carry = _np.zeros(model.n_scalar)
        active_rows = n_vector + _np.flatnonzero(active)
        carry[active] = adjoint_load[active] - hessian[_np.ix_(active_rows, free)] @ adjoint
    _log_degenerate_nodes(solution, tol)
    return _fields.Control(q=gradient)


class ReducedCost:
    """q -> (J(q, u(q)), grad) with every forward solve cached.

    Attributes:
        best (tuple): (J, flat control, ForwardSolution) of the lowest cost seen
    """

    def __init__(
        self,
        model: _energy.PhaseFieldModel,
        spec: _models.ControlProblemSpec,
        phi0,
        solver_options: _models.SolverOptions | None = None,
    ) -> None:
        self.model = model
        self.spec = spec
        self.phi0 = _np.asarray(phi0, dtype=float)
        self.solver_options = solver_options or _models.SolverOptions()
        self.shape = (model.n_times, model.n_neumann)
        self.evaluations = 0
        self.best = None
        self._cache = {}

    def evaluate(self, flat) -> tuple:
        flat = _np.asarray(flat, dtype=float)
        key = flat.tobytes()
        if key not in self._cache:
            control = _fields.Control(q=flat.reshape(self.shape))
            solution = _pdas.pdas_forward_solve(
                self.model, control, self.phi0, self.solver_options
            )
            value = _control.cost_J(self.model, control, solution.state, self.spec)
            gradient = reduced_gradient(self.model, solution, self.spec).flat()
            self.evaluations += 1
            self._cache[key] = (value, gradient, solution)
            if self.best is None or value < self.best[0]:
                self.best = (value, flat.copy(), solution)
        return self._cache[key]

    def __call__(self, flat) -> tuple:
        value, gradient, _ = self.evaluate(flat)
        return value, gradient.copy()


@_dataclasses.dataclass(frozen=True, eq=False)
class ControlResult:
    """The outcome of ``solve_control``.

    Attributes:
        control (Control): The final control
        solution (ForwardSolution): The forward solution at the final control
        fit (MultiplierFit): The upper-level multiplier fit
        residual (UpperKKTResidual): The upper-level KKT residual
        history (pandas.DataFrame): One row per accepted iterate
        cost (float): J at the final control
        gradient_norm (float): Largest component of the reduced gradient
        converged (bool): The gradient test was met
        flagged (bool): The line search failed away from a stationary point
        message (str): The optimizer's message
        complementarity_gap (float): Largest nodal |min(l2, -dphi)|
        complementarity_held (bool): Whether the complementarity left out of the upper problem holds
    """

    control: _fields.Control
    solution: _pdas.ForwardSolution
    fit: _control.MultiplierFit
    residual: _control.UpperKKTResidual
    history: _pd.DataFrame
    cost: float
    gradient_norm: float
    converged: bool
    flagged: bool
    message: str
    complementarity_gap: float
    complementarity_held: bool


def solve_control(
    model: _energy.PhaseFieldModel,
    spec: _models.ControlProblemSpec,
    phi0,
    initial: _fields.Control,
    options: _models.ControlOptions | None = None,
    solver_options: _models.SolverOptions | None = None,
) -> ControlResult:
    """Minimizes the reduced tracking cost with L-BFGS-B.

    Args:
        model (PhaseFieldModel): The discretized model
        spec (ControlProblemSpec): Targets and Tikhonov weight
        phi0: The initial phase-field
        initial (Control): The starting control
        options (ControlOptions): Optimizer options
        solver_options (SolverOptions): Forward solver options

    Returns:
        ControlResult: The final iterate or, after a failed line search, the best one

    Raises:
        SolverFailureError: A forward or adjoint solve failed
    """
    options = options or _models.ControlOptions()
    model.check_control(initial)
    reduced = ReducedCost(model, spec, phi0, solver_options)
    rows = []
    previous = [initial.flat()]

    def record(flat) -> None:
        value, gradient, solution = reduced.evaluate(flat)
        gap = _kkt.complementarity_gap(solution.state, solution.multiplier)
        rows.append(
            {
                "iter": len(rows),
                "J": value,
                "grad_norm": float(_np.linalg.norm(gradient)),
                "step_length": float(_np.linalg.norm(flat - previous[0])),
                "complementarity_held": bool(gap <= options.kkt_tol),
            }
        )
        previous[0] = _np.array(flat, dtype=float)
        _logger.info("Control iteration %d: J = %.6e, |grad| = %.3e", rows[-1]["iter"], value, rows[-1]["grad_norm"])

    record(initial.flat())
    result = _optimize.minimize(
        reduced,
        initial.flat(),
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={
            "maxiter": options.max_iter,
            "maxcor": options.history_size,
            "gtol": options.tol,
            "ftol": _FTOL,
        },
    )
    message = str(result.message)
    value, gradient, solution = reduced.evaluate(result.x)
    flat = _np.asarray(result.x, dtype=float)
    gradient_norm = float(_np.max(_np.abs(gradient)))
    converged = gradient_norm <= options.tol
    flagged = (not result.success) and "LNSRCH" in message.upper() and not converged
    if flagged:
        _logger.warning("Line search failed (%s); returning the best iterate", message)
        value, flat, solution = reduced.best
        gradient_norm = float(_np.max(_np.abs(reduced.evaluate(flat)[1])))

    control = _fields.Control(q=flat.reshape(reduced.shape))
    fit = _control.recover_upper_multiplier(
        model, control, solution.state, solution.multiplier, spec, options
    )
    residual = _control.upper_kkt_residual(
        model, control, solution.state, solution.multiplier, fit.pi, spec, solution.phi0
    )
    gap = _kkt.complementarity_gap(solution.state, solution.multiplier)
    return ControlResult(
        control=control,
        solution=solution,
        fit=fit,
        residual=residual,
        history=_pd.DataFrame(rows, columns=list(HISTORY_COLUMNS)),
        cost=float(value),
        gradient_norm=gradient_norm,
        converged=converged,
        flagged=flagged,
        message=message,
        complementarity_gap=gap,
        complementarity_held=bool(gap <= options.kkt_tol),
    )
