"""A discrete probe of the regularity condition of the upper-level constraints."""
from __future__ import annotations

import dataclasses as _dataclasses
import logging as _logging

import numpy as _np
import scipy.linalg as _linalg

import fraktur.energy as _energy
import fraktur.fields as _fields
import fraktur.models as _models

_logger = _logging.getLogger(__name__)

_ZERO = 1e-14


@_dataclasses.dataclass(frozen=True)
class RegularityReport(_models._Model):
    """Scaled inf-sup values of the bilinear form b((du, dl1), w).

    Attributes:
        north_ok (bool): Both inf-sup values exceed ``tol`` times their largest singular value
        infsup_A (float): Smallest singular value over the (du, dl1) factor
        infsup_B (float): Smallest singular value over the restricted w factor
        infsup_initial (float): The case w_phi(0) != 0, paired with dl1
        infsup_constant (float): The case w_phi(0) = 0 with spatially constant w_phi, paired with du
        infsup_u (float): Smallest singular value over the du columns alone
        elastic_bound (float): min over all m of the smallest eigenvalue of K(phi^m) against the H1 Gram
        sigma_max_A (float): Largest singular value over the (du, dl1) factor
        zero_strain (bool): e(u^m) vanishes for every m >= 1
        zero_phase_field (bool): phi^m vanishes for every m >= 1
        tol (float): The relative tolerance
    """

    north_ok: bool
    infsup_A: float
    infsup_B: float
    infsup_initial: float
    infsup_constant: float
    infsup_u: float
    elastic_bound: float
    sigma_max_A: float
    zero_strain: bool
    zero_phase_field: bool
    tol: float


def _scaled_singular_values(matrix: _np.ndarray, row_gram: _np.ndarray, col_gram: _np.ndarray) -> _np.ndarray:
    """Singular values of L_r^{-1} B L_c^{-T} with G = L L^T."""
    row_factor = _linalg.cholesky(row_gram, lower=True)
    col_factor = _linalg.cholesky(col_gram, lower=True)
    scaled = _linalg.solve_triangular(row_factor, matrix, lower=True)
    scaled = _linalg.solve_triangular(col_factor, scaled.T, lower=True).T
    return _linalg.svdvals(scaled)


def time_gram(model: _energy.PhaseFieldModel) -> _np.ndarray:
    """The time part of the Y_phi Gram matrix: diag(tau) + D^T D / dt for differences D."""
    dt = model.grid.dt
    difference = _np.diff(_np.eye(model.n_times), axis=0)
    return _np.diag(model.weights) + difference.T @ difference / dt


def _passes(values: _np.ndarray, tol: float) -> bool:
    top = float(values.max()) if values.size else 0.0
    return top > 0.0 and float(values.min()) > tol * top


def regularity_probe(
    model: _energy.PhaseFieldModel,
    state: _fields.SpaceTimeState,
    tol: float = 1e-8,
) -> RegularityReport:
    """Evaluates the inf-sup constants behind the regularity condition.

    The form pairs (du^m, dl1) with test functions w = (w_u, w_phi) through
    tau_m K(phi^m) on w_u^m, tau_m times the u-phi Hessian block on w_phi^m
    and -D on w_phi(0). Discrete norms are the tau-weighted H1 norm for
    displacements, the Y_phi norm for w_phi and the dual H1 norm of the
    lumped-mass representative for dl1. The w factor is only probed on pure
    phase-field test functions in the two cases w_phi(0) != 0 and
    w_phi(t) spatially constant with w_phi(0) = 0.
    """
    model.check_state(state)
    nv, ns = model.n_vector, model.n_scalar
    n_node = nv + ns
    n_times = model.n_times
    weights = model.weights
    lumped = model.disc.lumped_mass
    h1_u = model.disc.vector_h1.toarray()
    h1_phi = model.disc.scalar_h1.toarray()
    times = time_gram(model)

    n_rows = n_times * n_node
    n_cols = n_times * nv + ns
    matrix = _np.zeros((n_rows, n_cols))
    row_gram = _np.zeros((n_rows, n_rows))
    col_gram = _np.zeros((n_cols, n_cols))
    couplings = []
    elastic_bound = _np.inf
    for m in range(n_times):
        k_uu, k_up, _ = model.node_hessian_blocks(state.u[m], state.phi[m])
        k_uu, k_up = k_uu.toarray(), k_up.toarray()
        couplings.append(k_up)
        u_rows = slice(m * n_node, m * n_node + nv)
        phi_rows = slice(m * n_node + nv, (m + 1) * n_node)
        cols = slice(m * nv, (m + 1) * nv)
        matrix[u_rows, cols] = weights[m] * k_uu
        matrix[phi_rows, cols] = weights[m] * k_up.T
        row_gram[u_rows, u_rows] = weights[m] * h1_u
        col_gram[cols, cols] = weights[m] * h1_u
        for k in range(n_times):
            other = slice(k * n_node + nv, (k + 1) * n_node)
            row_gram[phi_rows, other] = times[m, k] * h1_phi
        lowest = _linalg.eigh(k_uu, h1_u, eigvals_only=True, subset_by_index=[0, 0])[0]
        elastic_bound = min(elastic_bound, float(lowest))

    l1_cols = slice(n_times * nv, n_cols)
    matrix[nv:n_node, l1_cols] = -_np.diag(lumped)
    dual_gram = lumped[:, None] * _np.linalg.solve(h1_phi, _np.diag(lumped))
    col_gram[l1_cols, l1_cols] = 0.5 * (dual_gram + dual_gram.T)

    values_a = _scaled_singular_values(matrix, row_gram, col_gram)
    u_cols = slice(0, n_times * nv)
    values_u = _scaled_singular_values(matrix[:, u_cols], row_gram, col_gram[u_cols, u_cols])

    values_initial = _scaled_singular_values(
        -_np.diag(lumped), times[0, 0] * h1_phi, col_gram[l1_cols, l1_cols]
    )

    n_steps = model.n_steps
    ones = _np.ones(ns)
    constant_norm = float(ones @ h1_phi @ ones)
    constant_matrix = _np.zeros((n_steps, n_steps * nv))
    for m in range(1, n_times):
        constant_matrix[m - 1, (m - 1) * nv:m * nv] = weights[m] * (couplings[m] @ ones)
    constant_rows = times[1:, 1:] * constant_norm
    constant_cols = _linalg.block_diag(*[weights[m] * h1_u for m in range(1, n_times)])
    values_constant = _scaled_singular_values(constant_matrix, constant_rows, constant_cols)

    strains = [_np.max(_np.abs(model.disc.strains(u))) for u in state.u[1:]]
    zero_strain = bool(max(strains) <= _ZERO)
    zero_phase_field = bool(_np.max(_np.abs(state.phi[1:])) <= _ZERO)

    infsup_initial = float(values_initial.min())
    infsup_constant = float(values_constant.min())
    north_ok = (
        _passes(values_a, tol)
        and _passes(values_initial, tol)
        and _passes(values_constant, tol)
    )
    if zero_strain or zero_phase_field:
        _logger.warning(
            "Degenerate state (zero strain: %s, zero phase-field: %s); the condition fails",
            zero_strain,
            zero_phase_field,
        )
    return RegularityReport(
        north_ok=bool(north_ok),
        infsup_A=float(values_a.min()),
        infsup_B=min(infsup_initial, infsup_constant),
        infsup_initial=infsup_initial,
        infsup_constant=infsup_constant,
        infsup_u=float(values_u.min()),
        elastic_bound=float(elastic_bound),
        sigma_max_A=float(values_a.max()),
        zero_strain=zero_strain,
        zero_phase_field=zero_phase_field,
        tol=tol,
    )
