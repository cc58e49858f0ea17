"""Finite-difference validation of the derivatives and the norm estimates."""
from __future__ import annotations

import dataclasses as _dataclasses
import logging as _logging

import numpy as _np
import pandas as _pd

import fraktur.control as _control
import fraktur.energy as _energy
import fraktur.fields as _fields
import fraktur.models as _models

_logger = _logging.getLogger(__name__)

DEFAULT_STEPS = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
SWEEP_COLUMNS = ("h", "fd", "exact", "error", "order")

_ROUNDING = 1e3 * _np.finfo(float).eps


def random_state(model: _energy.PhaseFieldModel, rng: _np.random.Generator, scale: float = 0.1) -> _fields.SpaceTimeState:
    """Displacements of size ``scale`` and phase-fields uniform in [0, 1]."""
    return _fields.SpaceTimeState(
        u=scale * rng.standard_normal((model.n_times, model.n_vector)),
        phi=rng.uniform(0.0, 1.0, (model.n_times, model.n_scalar)),
    )


def random_direction(model: _energy.PhaseFieldModel, rng: _np.random.Generator) -> _fields.Direction:
    """A standard normal direction scaled to unit Euclidean length."""
    direction = _fields.Direction(
        u=rng.standard_normal((model.n_times, model.n_vector)),
        phi=rng.standard_normal((model.n_times, model.n_scalar)),
    )
    return direction * (1.0 / _np.linalg.norm(direction.flat()))


def random_control(model: _energy.PhaseFieldModel, rng: _np.random.Generator) -> _fields.Control:
    return _fields.Control(q=rng.standard_normal((model.n_times, model.n_neumann)))


def random_multiplier(model: _energy.PhaseFieldModel, rng: _np.random.Generator) -> _fields.LowerMultiplier:
    return _fields.LowerMultiplier(
        l1=rng.standard_normal(model.n_scalar),
        l2=rng.standard_normal((model.n_steps, model.n_scalar)),
    )


def _with_orders(rows: list) -> _pd.DataFrame:
    table = _pd.DataFrame(rows, columns=list(SWEEP_COLUMNS))
    errors, steps = table["error"].to_numpy(), table["h"].to_numpy()
    orders = [_np.nan]
    for k in range(1, len(table)):
        if errors[k] > 0.0 and errors[k - 1] > 0.0:
            orders.append(_np.log(errors[k - 1] / errors[k]) / _np.log(steps[k - 1] / steps[k]))
        else:
            orders.append(_np.nan)
    table["order"] = orders
    return table


def _sweep(steps, difference, exact: float) -> _pd.DataFrame:
    """Tabulates |fd(h) - exact| and the pairwise observed order.

    ``difference(h)`` returns the quotient and the size of its rounding error.
    Errors below the rounding floor are recorded as zero.
    """
    rows = []
    for h in steps:
        fd, floor = difference(h)
        error = abs(fd - exact)
        rows.append({"h": h, "fd": fd, "exact": exact, "error": error if error > floor else 0.0})
    return _with_orders(rows)


def observed_order(table: _pd.DataFrame) -> float:
    """The smallest pairwise order of a sweep; infinite when every error is below the rounding floor."""
    orders = table["order"].dropna()
    return float(orders.min()) if not orders.empty else float("inf")


def gradient_check(
    model: _energy.PhaseFieldModel,
    state: _fields.SpaceTimeState,
    control: _fields.Control,
    direction: _fields.SpaceTimeState,
    steps=DEFAULT_STEPS,
) -> _pd.DataFrame:
    """Central differences of the energy against f'(u)(direction)."""
    exact = model.gradient(state, control).dot(direction)

    def difference(h: float) -> tuple:
        plus = model.energy(state + direction * h, control)
        minus = model.energy(state - direction * h, control)
        return (plus - minus) / (2.0 * h), _ROUNDING * (abs(plus) + abs(minus)) / (2.0 * h)

    return _sweep(steps, difference, exact)


def hessian_check(
    model: _energy.PhaseFieldModel,
    state: _fields.SpaceTimeState,
    control: _fields.Control,
    first: _fields.SpaceTimeState,
    second: _fields.SpaceTimeState,
    steps=DEFAULT_STEPS,
) -> _pd.DataFrame:
    """The mixed second central difference of the energy against f''(u)(first, second)."""
    exact = model.hessian_form(state, first, second)

    def difference(h: float) -> tuple:
        values = [
            model.energy(state + first * (a * h) + second * (b * h), control)
            for a, b in ((1, 1), (1, -1), (-1, 1), (-1, -1))
        ]
        quotient = (values[0] - values[1] - values[2] + values[3]) / (4.0 * h * h)
        return quotient, _ROUNDING * sum(abs(v) for v in values) / (4.0 * h * h)

    return _sweep(steps, difference, exact)


def a_prime_check(
    model: _energy.PhaseFieldModel,
    control: _fields.Control,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
    d_control: _fields.Control,
    d_state: _fields.SpaceTimeState,
    d_multiplier: _fields.LowerMultiplier,
    steps=DEFAULT_STEPS,
) -> _pd.DataFrame:
    """Central differences of a(q, u, l) against a'(q, u, l)(dq, du, dl).

    The table reports Euclidean norms: ``fd`` of the quotient, ``exact`` of
    the action and ``error`` of their difference.
    """
    exact = _control.a_prime_action(model, control, state, multiplier, d_control, d_state, d_multiplier).flat()

    def evaluate(h: float) -> _np.ndarray:
        return _control.semilinear_a(
            model, control + d_control * h, state + d_state * h, multiplier + d_multiplier * h
        ).flat()

    rows = []
    for h in steps:
        plus, minus = evaluate(h), evaluate(-h)
        quotient = (plus - minus) / (2.0 * h)
        floor = _ROUNDING * (_np.linalg.norm(plus) + _np.linalg.norm(minus)) / (2.0 * h)
        error = float(_np.linalg.norm(quotient - exact))
        rows.append(
            {
                "h": h,
                "fd": float(_np.linalg.norm(quotient)),
                "exact": float(_np.linalg.norm(exact)),
                "error": error if error > floor else 0.0,
            }
        )
    return _with_orders(rows)


@_dataclasses.dataclass(frozen=True)
class CheckReport(_models._Model):
    """The verdict of ``run_checks``.

    Attributes:
        points (int): Number of random points per check
        gradient_order (float): Smallest observed order of the gradient sweeps
        hessian_order (float): Smallest observed order of the Hessian sweeps
        a_prime_order (float): Smallest observed order of the a' sweeps
        l2_bound_holds (bool): max(|grad phi|, |phi|) <= |u|_Y at every sampled state
        max_sup_ratio (float): Largest |phi|_inf / |u|_Y over the sample
        max_product_ratio (float): Largest normalized strain product over the sample
        min_order (float): The required order
    """

    points: int
    gradient_order: float
    hessian_order: float
    a_prime_order: float
    l2_bound_holds: bool
    max_sup_ratio: float
    max_product_ratio: float
    min_order: float

    @property
    def passed(self) -> bool:
        orders = (self.gradient_order, self.hessian_order, self.a_prime_order)
        return self.l2_bound_holds and all(order >= self.min_order for order in orders)


def run_checks(
    model: _energy.PhaseFieldModel,
    points: int = 10,
    seed: int = 0,
    min_order: float = 1.9,
    steps=DEFAULT_STEPS,
) -> tuple:
    """Runs every sweep at ``points`` random points.

    Returns:
        tuple: The ``CheckReport`` and one table with all sweeps, labelled by
        the columns ``check`` and ``point``
    """
    rng = _np.random.default_rng(seed)
    tables, orders = [], {"gradient": [], "hessian": [], "a_prime": []}
    l2_bound, sup_ratios, product_ratios = True, [], []
    for point in range(points):
        state = random_state(model, rng)
        control = random_control(model, rng)
        multiplier = random_multiplier(model, rng)
        first, second = random_direction(model, rng), random_direction(model, rng)
        sweeps = {
            "gradient": gradient_check(model, state, control, first, steps),
            "hessian": hessian_check(model, state, control, first, second, steps),
            "a_prime": a_prime_check(
                model,
                control,
                state,
                multiplier,
                random_control(model, rng),
                first,
                random_multiplier(model, rng),
                steps,
            ),
        }
        for name, table in sweeps.items():
            orders[name].append(observed_order(table))
            tables.append(table.assign(check=name, point=point))

        psi = rng.uniform(-1.0, 1.0, (model.n_times, model.n_scalar))
        ratios = model.norm_estimate_ratios(state, random_state(model, rng), psi)
        l2_bound = l2_bound and ratios["l2_bound_holds"]
        sup_ratios.append(ratios["sup_ratio"])
        product_ratios.append(ratios["product_ratio"])
        _logger.debug("Check point %d: orders %s", point, {k: v[-1] for k, v in orders.items()})

    report = CheckReport(
        points=points,
        gradient_order=float(min(orders["gradient"], default=float("inf"))),
        hessian_order=float(min(orders["hessian"], default=float("inf"))),
        a_prime_order=float(min(orders["a_prime"], default=float("inf"))),
        l2_bound_holds=bool(l2_bound),
        max_sup_ratio=float(max(sup_ratios, default=0.0)),
        max_product_ratio=float(max(product_ratios, default=0.0)),
        min_order=min_order,
    )
    columns = ["check", "point", *SWEEP_COLUMNS]
    table = _pd.concat(tables, ignore_index=True)[columns] if tables else _pd.DataFrame(columns=columns)
    return report, table
