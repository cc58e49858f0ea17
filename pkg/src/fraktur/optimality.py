"""Second-order conditions at a forward solution and the failure of sufficiency."""
from __future__ import annotations

import dataclasses as _dataclasses
import logging as _logging

import numpy as _np
import pandas as _pd

import fraktur.constraints as _constraints
import fraktur.energy as _energy
import fraktur.exceptions as _exceptions
import fraktur.fields as _fields
import fraktur.models as _models
import fraktur.pdas as _pdas

_logger = _logging.getLogger(__name__)

_GROWTH_TOL = 1e-12
_SIGNIFICANT_RATE = 1e-6


def lagrangian_hessian_form(
    model: _energy.PhaseFieldModel,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
    phi_dir: _fields.SpaceTimeState,
    psi_dir: _fields.SpaceTimeState,
) -> float:
    """The second derivative of the Lagrangian in the state.

    The constraint map is affine, so this is the Hessian form of the energy
    and the multiplier does not enter.
    """
    model.check_multiplier(multiplier)
    return model.hessian_form(state, phi_dir, psi_dir)


def in_critical_cone(
    model: _energy.PhaseFieldModel,
    direction: _fields.SpaceTimeState,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
    tol: float = 1e-9,
) -> bool:
    """Tests membership in the critical cone at a KKT point.

    The conditions are Phi_phi(0) = 0, -Phi_phi_dot in K2 + span{phi_dot}
    and a vanishing multiplier pairing. The middle condition only restricts
    nodes where phi does not move.
    """
    z1, z2 = _constraints.g_prime(model, direction)
    scale = 1.0 + float(_np.max(_np.abs(direction.phi)))
    if _np.max(_np.abs(z1)) > tol * scale:
        return False
    moving = -_np.diff(state.phi, axis=0) / model.grid.dt
    resting = moving <= tol
    if _np.any(z2[resting] < -tol * scale / model.grid.dt):
        return False
    pairing = _constraints.pair_multiplier(model, multiplier, direction)
    return abs(pairing) <= tol * scale * (1.0 + float(_np.max(_np.abs(multiplier.l2), initial=0.0)))


def sample_critical_cone(
    model: _energy.PhaseFieldModel,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
    count: int,
    seed: int = 0,
    tol: float = 1e-9,
) -> list:
    """Draws random directions from the critical cone.

    Samples cycle through pure displacement, pure phase-field and mixed
    directions. The phase-field part starts at zero and moves with
    -Phi_dot = k + a phi_bar_dot, where k >= 0 lives on nodes with l2 <= tol and a
    is a random real. Draws that fail the membership test are logged and
    replaced.

    Returns:
        list[Direction]: ``count`` directions
    """
    rng = _np.random.default_rng(seed)
    dt = model.grid.dt
    phi_dot = _np.diff(state.phi, axis=0) / dt
    free = multiplier.l2 <= tol
    directions = []
    attempts = 0
    while len(directions) < count:
        attempts += 1
        if attempts > 10 * count + 10:
            _logger.warning(
                "Critical cone sampling stopped after %d draws with %d directions",
                attempts - 1,
                len(directions),
            )
            break
        kind = len(directions) % 3
        direction = model.zero_direction()
        if kind != 1:
            direction.u[:] = rng.standard_normal(direction.u.shape)
        if kind != 0:
            k = rng.random(phi_dot.shape) * free
            a = rng.standard_normal()
            direction.phi[1:] = -dt * _np.cumsum(k + a * phi_dot, axis=0)
        if not in_critical_cone(model, direction, state, multiplier, tol):
            _logger.info("Skipped a critical cone sample that failed the membership test")
            continue
        directions.append(direction)
    return directions


@_dataclasses.dataclass(frozen=True)
class SecondOrderReport(_models._Model):
    """The outcome of the second-order necessary check.

    Attributes:
        n_samples (int): Number of critical directions tested
        min_value (float): Smallest value of the Hessian form
        min_relative (float): Smallest value divided by |Phi|_Y^2
        passed (bool): Whether every value is >= -tol |Phi|_Y^2
    """

    n_samples: int
    min_value: float
    min_relative: float
    passed: bool


def second_order_necessary_check(
    model: _energy.PhaseFieldModel,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
    samples: list,
    tol: float = 1e-8,
) -> SecondOrderReport:
    """Evaluates the Lagrangian Hessian on sampled critical directions."""
    values, relative = [], []
    for direction in samples:
        value = lagrangian_hessian_form(model, state, multiplier, direction, direction)
        norm_sq = model.norm(direction) ** 2
        values.append(value)
        relative.append(value / norm_sq if norm_sq > 0 else 0.0)
    if not values:
        raise _exceptions.InconclusiveError("No critical directions to test")
    min_relative = float(min(relative))
    return SecondOrderReport(
        n_samples=len(values),
        min_value=float(min(values)),
        min_relative=min_relative,
        passed=min_relative >= -tol,
    )


@_dataclasses.dataclass(frozen=True, eq=False)
class FirstOrderCounterexample:
    """A critical direction along which the derivative vanishes.

    Attributes:
        direction (Direction): (0, phi_bar - phi_0)
        derivative (float): f'(u_bar)(Phi)
        pairing (float): l g'(u_bar)(Phi)
        norm (float): |Phi|_Y
        refuted (bool): |f'(Phi)| <= tol while |Phi|_Y > tol
    """

    direction: _fields.Direction
    derivative: float
    pairing: float
    norm: float
    refuted: bool

    def table(self) -> _pd.DataFrame:
        return _pd.DataFrame(
            [{"derivative": self.derivative, "pairing": self.pairing, "norm_y": self.norm, "refuted": self.refuted}]
        )


def crack_growth(solution: _pdas.ForwardSolution) -> float:
    return float(_np.max(_np.abs(solution.state.phi - solution.phi0)))


def suff1_counterexample(
    model: _energy.PhaseFieldModel,
    solution: _pdas.ForwardSolution,
    tol: float = 1e-8,
) -> FirstOrderCounterexample:
    """Builds the direction that defeats first-order sufficiency.

    Raises:
        InapplicableCaseError: The phase-field never left its initial value
    """
    if crack_growth(solution) <= _GROWTH_TOL:
        raise _exceptions.InapplicableCaseError(
            "The phase-field does not change, so there is no crack growth to exploit"
        )
    state = solution.state
    direction = model.zero_direction()
    direction.phi[:] = state.phi - solution.phi0
    if _np.any(direction.phi[0] != 0.0):
        raise _exceptions.InapplicableCaseError("The state violates the initial condition")
    derivative = model.gradient(state, solution.control).dot(direction)
    pairing = _constraints.pair_multiplier(model, solution.multiplier, direction)
    norm = model.norm(direction)
    return FirstOrderCounterexample(
        direction=direction,
        derivative=float(derivative),
        pairing=float(pairing),
        norm=norm,
        refuted=bool(abs(derivative) <= tol and norm > tol),
    )


@_dataclasses.dataclass(frozen=True, eq=False)
class Bump:
    """A nodal bump below -phi_dot on a set of time intervals.

    Attributes:
        intervals (numpy.ndarray): Interval indices m in 1..M, ascending
        node (int): The node carrying the bump
        height (float): The bump height
        psi (numpy.ndarray): The nodal field height * e_node
    """

    intervals: _np.ndarray
    node: int
    height: float
    psi: _np.ndarray


def _longest_sandwich(levels: _np.ndarray, threshold: float) -> tuple:
    """(k, column) with the most levels above ``threshold``, ties going to the tallest k-th level.

    Each column of ``levels`` must be nonincreasing.
    """
    lengths = _np.sum(levels > threshold, axis=0)
    heights = levels[_np.maximum(lengths, 1) - 1, _np.arange(levels.shape[1])]
    column = int(_np.lexsort((heights, lengths))[-1])
    return int(lengths[column]), column


def discrete_bump(model: _energy.PhaseFieldModel, phi_dot) -> Bump:
    """Finds a set of intervals J and a bump 0 <= Psi <= -phi_dot on J x Omega.

    The eta table is invariant under scaling Psi, so J is made as long as
    possible and the height is only required to be significant. J is
    preferably a run of intervals ending at t_M, so that the ramp of a bump
    direction ends with the time horizon; the node with the longest such
    run wins. A run of a single interval is replaced by all intervals where
    some node decreases, if that gives more. Interior nodes come first.

    Raises:
        InapplicableCaseError: -phi_dot vanishes identically
    """
    rates = -_np.asarray(phi_dot, dtype=float)
    if rates.shape != (model.n_steps, model.n_scalar):
        raise _exceptions.InvalidArgumentError(
            f"phi_dot has shape {rates.shape}, expected ({model.n_steps}, {model.n_scalar})"
        )
    top = float(_np.max(rates))
    if top <= _GROWTH_TOL / model.grid.dt:
        raise _exceptions.InapplicableCaseError("-phi_dot vanishes, the crack never grows")
    threshold = max(_GROWTH_TOL / model.grid.dt, _SIGNIFICANT_RATE * top)

    interior = _np.flatnonzero(model.disc.mesh.interior_mask)
    candidates = interior if interior.size and _np.max(rates[:, interior]) > threshold else _np.arange(model.n_scalar)
    block = rates[:, candidates]

    # smallest rate over the last k intervals
    runs = _np.minimum.accumulate(block[::-1], axis=0)
    ordered = -_np.sort(-block, axis=0)
    k, column = _longest_sandwich(runs, threshold)
    scattered, scattered_column = _longest_sandwich(ordered, threshold)
    if k >= 2 or scattered <= k:
        node = int(candidates[column])
        height = float(runs[k - 1, column])
        intervals = _np.arange(model.n_steps - k + 1, model.n_steps + 1)
    else:
        k, node = scattered, int(candidates[scattered_column])
        height = float(ordered[k - 1, scattered_column])
        order = _np.argsort(-rates[:, node], kind="stable")
        intervals = _np.sort(order[:k]) + 1
        _logger.info("No run of decrease reaches t_M; using %d separate intervals at node %d", k, node)
    psi = _np.zeros(model.n_scalar)
    psi[node] = height
    return Bump(intervals=intervals, node=node, height=height, psi=psi)


def bump_direction(model: _energy.PhaseFieldModel, bump: Bump, eta: int) -> _fields.Direction:
    """Phi_phi(t_m) = -f(t_m) Psi with f rising linearly over the last eta intervals of J."""
    chosen = bump.intervals[-eta:]
    counts = _np.array([_np.sum(chosen <= m) for m in range(model.n_times)], dtype=float)
    direction = model.zero_direction()
    direction.phi[:] = -(counts / eta)[:, None] * bump.psi[None, :]
    return direction


@_dataclasses.dataclass(frozen=True, eq=False)
class SecondOrderCounterexample:
    """The family of directions that defeats second-order sufficiency.

    Attributes:
        bump (Bump): The sandwich the family is built on
        table (pandas.DataFrame): One row per eta
        psi_norm_sq (float): |Psi|_{H1}^2
        bound_constant (float): max over eta of L''(Phi, Phi) / |Psi|_{H1}^2
        decreasing (bool): The ratio does not grow as eta shrinks
        halved (bool): The smallest eta has less than half the ratio of the largest
        norm_bracket (bool): eta dt |Phi|^2 / |Psi|^2 lies in [1, 1 + eta dt T] for every eta
        norm_constant (float): c of the least-squares fit |Phi_eta|_Y^2 ~ c / eta
        norm_deviation (float): Largest relative deviation of |Phi_eta|_Y^2 from c / eta
        norm_scaling (bool): ``norm_deviation`` is within the scaling tolerance
    """

    bump: Bump
    table: _pd.DataFrame
    psi_norm_sq: float
    bound_constant: float
    decreasing: bool
    halved: bool
    norm_bracket: bool
    norm_constant: float
    norm_deviation: float
    norm_scaling: bool

    @property
    def passed(self) -> bool:
        return self.decreasing and self.halved and self.norm_bracket and self.norm_scaling


def default_etas(n_intervals: int, max_eta: int | None = None) -> list:
    """Halvings of the longest ramp, which is capped at ``max_eta`` intervals."""
    longest = n_intervals if max_eta is None else max(1, min(n_intervals, max_eta))
    return sorted({max(1, longest // d) for d in (1, 2, 4)}, reverse=True)


def fit_inverse_scaling(etas, values) -> tuple:
    """Least-squares fit of values ~ c / eta in relative terms.

    Minimizing sum (eta v - c)^2 gives c as the mean of eta v.

    Returns:
        tuple: c and the largest |eta v / c - 1|
    """
    scaled = _np.asarray(etas, dtype=float) * _np.asarray(values, dtype=float)
    constant = float(_np.mean(scaled))
    if constant <= 0.0:
        return constant, _np.inf
    return constant, float(_np.max(_np.abs(scaled / constant - 1.0)))


def suff2_counterexample(
    model: _energy.PhaseFieldModel,
    solution: _pdas.ForwardSolution,
    etas=None,
    beta: float = 1e-6,
    rtol: float = 1e-12,
    scaling_tol: float = 0.1,
) -> SecondOrderCounterexample:
    """Tabulates the Rayleigh ratio L''(Phi_eta, Phi_eta) / |Phi_eta|_Y^2 over eta.

    Args:
        etas: Lengths of the ramp in time intervals; by default halvings of
            |J| with ramps no longer than half the horizon
        beta (float): Allowed ratio of the multiplier pairing to |Phi|_Y
        rtol (float): Relative slack of the monotonicity and bracket checks
        scaling_tol (float): Allowed relative deviation of |Phi_eta|_Y^2 from c / eta

    Raises:
        InapplicableCaseError: The crack never grows
        InconclusiveError: Fewer than two usable eta values
    """
    state = solution.state
    phi_dot = _np.diff(state.phi, axis=0) / model.grid.dt
    bump = discrete_bump(model, phi_dot)
    n_j = len(bump.intervals)
    if etas is None:
        etas = default_etas(n_j, max(2, model.n_steps // 2))
    else:
        etas = sorted({int(e) for e in etas if 1 <= int(e) <= n_j}, reverse=True)
    if len(etas) < 2:
        raise _exceptions.InconclusiveError(
            f"Need at least two usable eta values, got {etas} for |J| = {n_j}"
        )

    psi_norm_sq = float(bump.psi @ (model.disc.scalar_h1 @ bump.psi))
    dt, t_final = model.grid.dt, model.grid.t_final
    rows = []
    for eta in etas:
        direction = bump_direction(model, bump, eta)
        norm_sq = model.norm(direction) ** 2
        form = lagrangian_hessian_form(model, state, solution.multiplier, direction, direction)
        pairing = _constraints.pair_multiplier(model, solution.multiplier, direction)
        rate = -_np.diff(direction.phi, axis=0)
        rows.append(
            {
                "eta": eta,
                "eta_time": eta * dt,
                "norm_sq": norm_sq,
                "form_value": form,
                "ratio": form / norm_sq,
                "scaled_norm": eta * dt * norm_sq / psi_norm_sq,
                "pairing": pairing,
                "member": bool(
                    _np.all(direction.phi[0] == 0.0)
                    and _np.all(rate >= 0.0)
                    and abs(pairing) <= beta * _np.sqrt(norm_sq)
                ),
            }
        )
    table = _pd.DataFrame(rows)
    ratios = table["ratio"].to_numpy()
    scale = float(_np.max(_np.abs(ratios)))
    decreasing = bool(_np.all(_np.diff(ratios) <= rtol * scale))
    halved = bool(ratios[-1] < 0.5 * ratios[0])
    scaled = table["scaled_norm"].to_numpy()
    upper = 1.0 + table["eta_time"].to_numpy() * t_final
    norm_bracket = bool(_np.all(scaled >= 1.0 - rtol) and _np.all(scaled <= upper + rtol))
    norm_constant, norm_deviation = fit_inverse_scaling(table["eta"], table["norm_sq"])
    table["fitted_norm_sq"] = norm_constant / table["eta"]
    if norm_deviation > scaling_tol:
        _logger.warning(
            "|Phi_eta|_Y^2 deviates from c / eta by %.1f%% (c = %.4e)", 100.0 * norm_deviation, norm_constant
        )
    return SecondOrderCounterexample(
        bump=bump,
        table=table,
        psi_norm_sq=psi_norm_sq,
        bound_constant=float(table["form_value"].max() / psi_norm_sq),
        decreasing=decreasing,
        halved=halved,
        norm_bracket=norm_bracket,
        norm_constant=norm_constant,
        norm_deviation=norm_deviation,
        norm_scaling=bool(norm_deviation <= scaling_tol),
    )
