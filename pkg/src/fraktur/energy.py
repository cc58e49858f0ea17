"""The crack energy, its derivatives and the discrete space-time norms."""
from __future__ import annotations

import functools as _functools

import numpy as _np
import scipy.sparse as _sparse

import fraktur.assembly as _assembly
import fraktur.fields as _fields
import fraktur.models as _models


def degradation(phi_value, params: _models.PhysParams):
    """g(phi) = (1 - kappa) phi^2 + kappa; works on scalars and arrays."""
    return _assembly.degradation_values(phi_value, params)


class PhaseFieldModel:
    """The space-time discretization of the crack energy

    f(u, phi) = int_I 1/2 (g(phi) C e(u), e(u)) + g_c/(2 eps) |1 - phi|^2
                + g_c eps/2 |grad phi|^2 - <q, u>_{Gamma_N} dt

    with the trapezoidal rule in time. Per time node the energy only couples
    u^m and phi^m, so gradients and Hessians are assembled node by node and
    weighted with the trapezoidal weights.

    Attributes:
        disc (Discretization): The spatial discretization
        params (PhysParams): The material parameters
        grid (TimeGrid): The time grid
    """

    def __init__(self, disc: _assembly.Discretization, params: _models.PhysParams, grid: _models.TimeGrid) -> None:
        self.disc = disc
        self.params = params
        self.grid = grid
        self.weights = grid.trapezoid_weights
        self.stress = params.stress_matrix

    @property
    def n_vector(self) -> int:
        return self.disc.n_vector

    @property
    def n_scalar(self) -> int:
        return self.disc.n_scalar

    @property
    def n_neumann(self) -> int:
        return self.disc.n_neumann

    @property
    def n_times(self) -> int:
        return self.grid.n_times

    @property
    def n_steps(self) -> int:
        return self.grid.n_steps

    @_functools.cached_property
    def elastic_elements(self) -> _np.ndarray:
        return _assembly.elastic_element_matrices(self.disc.mesh, self.params)

    # shape checks

    def check_state(self, state: _fields.SpaceTimeState) -> None:
        state.check_shape(self.n_times, self.n_vector, self.n_scalar)

    def check_control(self, control: _fields.Control) -> None:
        control.check_shape(self.n_times, self.n_neumann)

    def check_multiplier(self, multiplier: _fields.LowerMultiplier) -> None:
        multiplier.check_shape(self.n_steps, self.n_scalar)

    def zero_state(self) -> _fields.SpaceTimeState:
        return _fields.SpaceTimeState.zeros(self.n_times, self.n_vector, self.n_scalar)

    def zero_direction(self) -> _fields.Direction:
        return _fields.Direction.zeros(self.n_times, self.n_vector, self.n_scalar)

    def zero_control(self) -> _fields.Control:
        return _fields.Control.zeros(self.n_times, self.n_neumann)

    def load(self, q_m) -> _np.ndarray:
        return self.disc.neumann_operator @ q_m

    # one time node

    def _element_terms(self, u, phi) -> tuple:
        strains = self.disc.strains(u)
        stresses = strains @ self.stress
        density = _np.sum(strains * stresses, axis=1)
        g_int = self.disc.integrate(degradation(self.disc.at_quadrature(phi), self.params))
        return strains, stresses, density, g_int

    def energy_parts(self, u, phi, q_m) -> dict:
        """Elastic, surface and load contributions at one time node."""
        _, _, density, g_int = self._element_terms(u, phi)
        p = self.params
        crack = 1.0 - phi
        surface = 0.5 * p.g_c / p.eps * crack @ (self.disc.mass @ crack)
        surface += 0.5 * p.g_c * p.eps * phi @ (self.disc.stiffness @ phi)
        return {
            "elastic": float(0.5 * g_int @ density),
            "surface": float(surface),
            "load": float(self.load(q_m) @ u),
        }

    def node_energy(self, u, phi, q_m) -> float:
        parts = self.energy_parts(u, phi, q_m)
        return parts["elastic"] + parts["surface"] - parts["load"]

    def node_gradient(self, u, phi, q_m) -> tuple:
        """Coefficient vectors (d/du, d/dphi) of the energy at one time node."""
        p = self.params
        _, stresses, density, g_int = self._element_terms(u, phi)
        forces = _np.einsum("eia,ei->ea", self.disc.strain_matrices, stresses)
        grad_u = self.disc.scatter_vector(g_int[:, None] * forces) - self.load(q_m)
        grad_phi = (1.0 - p.kappa) * self.disc.scatter_scalar(
            density[:, None] * self.disc.weighted_mass_vectors(phi)
        )
        grad_phi += p.g_c / p.eps * (self.disc.mass @ (phi - 1.0))
        grad_phi += p.g_c * p.eps * (self.disc.stiffness @ phi)
        return grad_u, grad_phi

    def node_hessian_blocks(self, u, phi) -> tuple:
        """The blocks (uu, u-phi, phi-phi) of the Hessian at one time node."""
        p = self.params
        _, stresses, density, g_int = self._element_terms(u, phi)
        k_uu = self.disc.assemble_vector(g_int[:, None, None] * self.elastic_elements)
        forces = _np.einsum("eia,ei->ea", self.disc.strain_matrices, stresses)
        coupling = 2.0 * (1.0 - p.kappa) * (
            forces[:, :, None] * self.disc.weighted_mass_vectors(phi)[:, None, :]
        )
        k_up = self.disc.assemble_mixed(coupling)
        k_pp = (1.0 - p.kappa) * self.disc.assemble_scalar(
            density[:, None, None] * self.disc.element_mass
        )
        k_pp = k_pp + p.g_c / p.eps * self.disc.mass + p.g_c * p.eps * self.disc.stiffness
        return k_uu, k_up, k_pp.tocsr()

    def node_hessian(self, u, phi) -> _sparse.csr_matrix:
        k_uu, k_up, k_pp = self.node_hessian_blocks(u, phi)
        return _sparse.bmat([[k_uu, k_up], [k_up.T, k_pp]], format="csr")

    # space-time

    def energy(self, state: _fields.SpaceTimeState, control: _fields.Control) -> float:
        """The trapezoidal space-time crack energy.

        Raises:
            InvalidArgumentError: Shapes do not match the discretization
        """
        self.check_state(state)
        self.check_control(control)
        return float(
            sum(
                w * self.node_energy(state.u[m], state.phi[m], control.q[m])
                for m, w in enumerate(self.weights)
            )
        )

    def gradient(self, state: _fields.SpaceTimeState, control: _fields.Control) -> _fields.Direction:
        """The coefficient vector of f'(u); its action on a direction is ``gradient.dot(direction)``."""
        self.check_state(state)
        self.check_control(control)
        result = self.zero_direction()
        for m, w in enumerate(self.weights):
            grad_u, grad_phi = self.node_gradient(state.u[m], state.phi[m], control.q[m])
            result.u[m] = w * grad_u
            result.phi[m] = w * grad_phi
        return result

    def hessian_apply(self, state: _fields.SpaceTimeState, direction: _fields.SpaceTimeState) -> _fields.Direction:
        """The coefficient vector of f''(u)(direction, .)."""
        self.check_state(state)
        direction.check_shape(self.n_times, self.n_vector, self.n_scalar)
        result = self.zero_direction()
        for m, w in enumerate(self.weights):
            hessian = self.node_hessian(state.u[m], state.phi[m])
            product = hessian @ _np.concatenate([direction.u[m], direction.phi[m]])
            result.u[m] = w * product[: self.n_vector]
            result.phi[m] = w * product[self.n_vector:]
        return result

    def hessian_form(self, state: _fields.SpaceTimeState, phi_dir: _fields.SpaceTimeState, psi_dir: _fields.SpaceTimeState) -> float:
        """The symmetric bilinear form f''(u)(Phi, Psi).

        Evaluated as the mean of both orderings, so swapping the arguments
        returns the identical float.
        """
        forward = psi_dir.dot(self.hessian_apply(state, phi_dir))
        backward = phi_dir.dot(self.hessian_apply(state, psi_dir))
        return 0.5 * (forward + backward)

    def spacetime_norms(self, state: _fields.SpaceTimeState) -> tuple:
        """The norms (|u|_{Y_u}, |phi|_{Y_phi}, |(u, phi)|_Y).

        Y_u sums dt |u^m|_{H1}^2 over m >= 1. The displacement only lives in
        L2(I, H1) and needs no initial value, so u^0, a by-product of the
        solver, must not enter; the right-endpoint rule is the quadrature
        that leaves it out. Y_phi is the trapezoidal L2(I, H1) norm plus the
        H1 norm of the backward difference quotients, since phi(0) is
        prescribed and belongs to the trajectory.
        """
        self.check_state(state)
        dt = self.grid.dt
        h1_u = self.disc.vector_h1
        h1_phi = self.disc.scalar_h1
        norm_u = dt * sum(u @ (h1_u @ u) for u in state.u[1:])
        norm_phi = sum(w * phi @ (h1_phi @ phi) for w, phi in zip(self.weights, state.phi))
        increments = _np.diff(state.phi, axis=0) / dt
        norm_phi += dt * sum(d @ (h1_phi @ d) for d in increments)
        norm_u, norm_phi = _np.sqrt(max(norm_u, 0.0)), _np.sqrt(max(norm_phi, 0.0))
        return float(norm_u), float(norm_phi), float(_np.hypot(norm_u, norm_phi))

    def norm(self, state: _fields.SpaceTimeState) -> float:
        return self.spacetime_norms(state)[2]

    def l2_norms(self, state: _fields.SpaceTimeState) -> tuple:
        """(|grad phi|_{L2(I x Omega)}, |phi|_{L2(I x Omega)}) by the trapezoidal rule."""
        grad = sum(w * phi @ (self.disc.stiffness @ phi) for w, phi in zip(self.weights, state.phi))
        value = sum(w * phi @ (self.disc.mass @ phi) for w, phi in zip(self.weights, state.phi))
        return float(_np.sqrt(max(grad, 0.0))), float(_np.sqrt(max(value, 0.0)))

    def weighted_strain_product(self, psi: _np.ndarray, first: _fields.SpaceTimeState, second: _fields.SpaceTimeState) -> float:
        """int_I (psi C e(u1), e(u2)) for a nodal weight psi per time node."""
        total = 0.0
        for m, w in enumerate(self.weights):
            e1 = self.disc.strains(first.u[m])
            e2 = self.disc.strains(second.u[m])
            psi_int = self.disc.integrate(self.disc.at_quadrature(psi[m]))
            total += w * psi_int @ _np.sum((e1 @ self.stress) * e2, axis=1)
        return float(total)

    def norm_estimate_ratios(self, state: _fields.SpaceTimeState, other: _fields.SpaceTimeState, psi: _np.ndarray) -> dict:
        """Ratios behind the norm estimates with an unspecified constant.

        Returns:
            dict: ``sup_ratio`` = |phi|_inf / |u|_Y, ``product_ratio`` =
            (psi C e(u1), e(u2)) / (|psi|_inf |u1|_Y |u2|_Y), and
            ``l2_bound_holds`` for max(|grad phi|, |phi|) <= |u|_Y
        """
        total = self.norm(state)
        grad_norm, value_norm = self.l2_norms(state)
        product = self.weighted_strain_product(psi, state, other)
        denominator = _np.max(_np.abs(psi)) * total * self.norm(other)
        return {
            "sup_ratio": float(_np.max(_np.abs(state.phi)) / total) if total > 0 else 0.0,
            "product_ratio": float(abs(product) / denominator) if denominator > 0 else 0.0,
            "l2_bound_holds": bool(max(grad_norm, value_norm) <= total * (1.0 + 1e-14)),
        }
