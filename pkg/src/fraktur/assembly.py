"""Assembly of the finite-element forms on P1 triangles."""
from __future__ import annotations

import functools as _functools
import logging as _logging

import numpy as _np
import scipy.sparse as _sparse

import fraktur.exceptions as _exceptions
import fraktur.mesh as _mesh
import fraktur.models as _models
import fraktur.util as _util

_logger = _logging.getLogger(__name__)

_DEFAULT_RULE = _mesh.QuadratureRule.triangle_degree2()


def _assemble_matrix(rows, cols, values, shape) -> _sparse.csr_matrix:
    rows, cols, values = (_np.asarray(a).ravel() for a in (rows, cols, values))
    keep = (rows >= 0) & (cols >= 0)
    return _sparse.coo_matrix(
        (values[keep], (rows[keep], cols[keep])), shape=shape
    ).tocsr()


def _assemble_vector(index, values, size) -> _np.ndarray:
    index, values = _np.asarray(index).ravel(), _np.asarray(values).ravel()
    keep = index >= 0
    return _np.bincount(index[keep], weights=values[keep], minlength=size)


def _scalar_pattern(elements: _np.ndarray) -> tuple:
    rows = _np.repeat(elements[:, :, None], 3, axis=2)
    cols = _np.repeat(elements[:, None, :], 3, axis=1)
    return rows, cols


def _vector_pattern(dofs: _np.ndarray, other: _np.ndarray) -> tuple:
    rows = _np.repeat(dofs[:, :, None], other.shape[1], axis=2)
    cols = _np.repeat(other[:, None, :], dofs.shape[1], axis=1)
    return rows, cols


def at_quadrature(mesh: _mesh.Mesh2D, rule: _mesh.QuadratureRule, nodal) -> _np.ndarray:
    """Values of a P1 field at the quadrature points, shape (n_elements, n_points)."""
    return _np.asarray(nodal, dtype=float)[mesh.elements] @ rule.points.T


def integrate(mesh: _mesh.Mesh2D, rule: _mesh.QuadratureRule, values) -> _np.ndarray:
    """Elementwise integrals of quadrature-point values."""
    return 2.0 * mesh.areas * (_np.asarray(values) @ rule.weights)


def element_mass_matrices(mesh: _mesh.Mesh2D, rule: _mesh.QuadratureRule = _DEFAULT_RULE) -> _np.ndarray:
    reference = rule.points.T @ (rule.weights[:, None] * rule.points)
    return 2.0 * mesh.areas[:, None, None] * reference[None, :, :]


def element_stiffness_matrices(mesh: _mesh.Mesh2D) -> _np.ndarray:
    grads = mesh.gradients
    return mesh.areas[:, None, None] * _np.einsum("eak,ebk->eab", grads, grads)


def strain_matrices(mesh: _mesh.Mesh2D) -> _np.ndarray:
    """Elementwise maps from local displacements to (e_xx, e_yy, 2 e_xy)."""
    grads = mesh.gradients
    b = _np.zeros((mesh.n_elements, 3, 6))
    b[:, 0, 0::2] = grads[:, :, 0]
    b[:, 1, 1::2] = grads[:, :, 1]
    b[:, 2, 0::2] = grads[:, :, 1]
    b[:, 2, 1::2] = grads[:, :, 0]
    return b


def assemble_mass(mesh: _mesh.Mesh2D, dofmap: _mesh.DofMap, rule: _mesh.QuadratureRule = _DEFAULT_RULE) -> _sparse.csr_matrix:
    """Assembles the L2 inner product of scalar P1 fields.

    Returns:
        scipy.sparse.csr_matrix: The symmetric positive-definite mass matrix
    """
    rows, cols = _scalar_pattern(mesh.elements)
    size = (dofmap.n_scalar, dofmap.n_scalar)
    return _assemble_matrix(rows, cols, element_mass_matrices(mesh, rule), size)


def assemble_scalar_stiffness(mesh: _mesh.Mesh2D, dofmap: _mesh.DofMap) -> _sparse.csr_matrix:
    """Assembles the form (grad a, grad b) on scalar P1 fields; its kernel is the constants."""
    rows, cols = _scalar_pattern(mesh.elements)
    size = (dofmap.n_scalar, dofmap.n_scalar)
    return _assemble_matrix(rows, cols, element_stiffness_matrices(mesh), size)


def elastic_element_matrices(mesh: _mesh.Mesh2D, params: _models.PhysParams) -> _np.ndarray:
    b = strain_matrices(mesh)
    return _np.einsum("eia,ij,ejb->eab", b, params.stress_matrix, b)


def assemble_degraded_elastic(
    mesh: _mesh.Mesh2D,
    dofmap: _mesh.DofMap,
    phi,
    params: _models.PhysParams,
    rule: _mesh.QuadratureRule = _DEFAULT_RULE,
) -> _sparse.csr_matrix:
    """Assembles (g(phi) C e(u), e(v)) on the Dirichlet-reduced displacement space.

    The degradation is evaluated at the quadrature points, which integrates
    the quadratic weight exactly since strains are elementwise constant.

    Args:
        phi: Nodal phase-field values
        params (PhysParams): Validated material parameters

    Returns:
        scipy.sparse.csr_matrix: A symmetric matrix of size n_vector
    """
    phi = _np.asarray(phi, dtype=float)
    if phi.shape != (dofmap.n_scalar,):
        raise _exceptions.InvalidArgumentError(
            f"phi has shape {phi.shape}, expected ({dofmap.n_scalar},)"
        )
    weights = integrate(
        mesh, rule, degradation_values(at_quadrature(mesh, rule, phi), params)
    )
    dofs = dofmap.element_vector_dofs(mesh.elements)
    rows, cols = _vector_pattern(dofs, dofs)
    values = weights[:, None, None] * elastic_element_matrices(mesh, params)
    return _assemble_matrix(rows, cols, values, (dofmap.n_vector, dofmap.n_vector))


def degradation_values(phi, params: _models.PhysParams):
    return (1.0 - params.kappa) * phi * phi + params.kappa


def _load_directions(normals: _np.ndarray, direction) -> _np.ndarray:
    if isinstance(direction, str):
        if direction != "normal":
            raise _exceptions.InvalidArgumentError(
                f"Unknown load direction '{direction}'"
            )
        return normals
    vector = _np.asarray(direction, dtype=float)
    if vector.shape != (2,) or not _np.isclose(_np.hypot(*vector), 1.0):
        raise _exceptions.InvalidArgumentError(
            f"Load direction must be a unit vector, got {direction}"
        )
    return _np.tile(vector, (len(normals), 1))


def neumann_index(mesh: _mesh.Mesh2D) -> _np.ndarray:
    """Position of each node among the Neumann nodes, -1 elsewhere."""
    index = -_np.ones(mesh.n_nodes, dtype=int)
    index[mesh.neumann_nodes] = _np.arange(len(mesh.neumann_nodes))
    return index


def _neumann_edges(mesh: _mesh.Mesh2D) -> _np.ndarray:
    edges = mesh.edges_with_tag("neumann")
    if len(edges) == 0:
        raise _exceptions.InvalidMeshError("The Neumann boundary is empty")
    return edges


_EDGE_MASS = _np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


def assemble_boundary_mass(mesh: _mesh.Mesh2D) -> _sparse.csr_matrix:
    """Assembles the L2(Gamma_N) inner product on the Neumann nodes."""
    edges = _neumann_edges(mesh)
    lengths, _ = _mesh.Mesh2D.edge_geometry(mesh.nodes, edges)
    local = neumann_index(mesh)[edges]
    rows = _np.repeat(local[:, :, None], 2, axis=2)
    cols = _np.repeat(local[:, None, :], 2, axis=1)
    values = lengths[:, None, None] * _EDGE_MASS[None]
    size = len(mesh.neumann_nodes)
    return _assemble_matrix(rows, cols, values, (size, size))


def assemble_neumann_operator(mesh: _mesh.Mesh2D, dofmap: _mesh.DofMap, direction=(1.0, 0.0)) -> _sparse.csr_matrix:
    """Assembles the map from nodal boundary forces q to load vectors.

    Row (node a, component c), column Neumann node b holds
    sum over edges of d_c * integral of N_a N_b, with d the load direction.

    Args:
        direction: A constant unit vector or ``"normal"``

    Raises:
        InvalidMeshError: The Neumann boundary is empty
    """
    edges = _neumann_edges(mesh)
    lengths, normals = _mesh.Mesh2D.edge_geometry(mesh.nodes, edges)
    directions = _load_directions(normals, direction)
    local = neumann_index(mesh)[edges]
    edge_mass = lengths[:, None, None] * _EDGE_MASS[None]
    # values[e, a, c, b] = d_c * M_e[a, b]
    values = edge_mass[:, :, None, :] * directions[:, None, :, None]
    rows = _np.repeat(
        dofmap.node_to_vector[edges][:, :, :, None], 2, axis=3
    )
    cols = _np.broadcast_to(local[:, None, None, :], rows.shape)
    size = (dofmap.n_vector, len(mesh.neumann_nodes))
    return _assemble_matrix(rows, cols, values, size)


def assemble_neumann_load(mesh: _mesh.Mesh2D, dofmap: _mesh.DofMap, q, direction=(1.0, 0.0)) -> _np.ndarray:
    """The load vector of the pairing <q, u> on Gamma_N.

    Args:
        q: Nodal force values on the Neumann nodes, in the order of ``mesh.neumann_nodes``
    """
    q = _np.asarray(q, dtype=float)
    if q.shape != (len(mesh.neumann_nodes),):
        raise _exceptions.InvalidArgumentError(
            f"q has shape {q.shape}, expected ({len(mesh.neumann_nodes)},)"
        )
    return assemble_neumann_operator(mesh, dofmap, direction) @ q


def assemble_vector_mass(mesh: _mesh.Mesh2D, dofmap: _mesh.DofMap, rule: _mesh.QuadratureRule = _DEFAULT_RULE) -> _sparse.csr_matrix:
    free = dofmap.free_nodes
    scalar = assemble_mass(mesh, dofmap, rule)[free][:, free]
    return _sparse.kron(scalar, _sparse.identity(2), format="csr")


def assemble_vector_stiffness(mesh: _mesh.Mesh2D, dofmap: _mesh.DofMap) -> _sparse.csr_matrix:
    free = dofmap.free_nodes
    scalar = assemble_scalar_stiffness(mesh, dofmap)[free][:, free]
    return _sparse.kron(scalar, _sparse.identity(2), format="csr")


class Discretization:
    """Everything about the spatial discretization a model needs, assembled once.

    Attributes:
        mesh (Mesh2D): The triangulation
        dofmap (DofMap): The DoF numbering
        rule (QuadratureRule): The element quadrature
        direction: The load direction on the Neumann boundary
    """

    def __init__(self, mesh: _mesh.Mesh2D, direction=(1.0, 0.0), rule: _mesh.QuadratureRule = _DEFAULT_RULE) -> None:
        rule.verify()
        self.mesh = mesh
        self.dofmap = _mesh.DofMap.from_mesh(mesh)
        self.rule = rule
        self.direction = direction
        _logger.debug(
            "Discretization with %d nodes, %d elements, %d displacement DoFs",
            mesh.n_nodes,
            mesh.n_elements,
            self.dofmap.n_vector,
        )

    @property
    def n_scalar(self) -> int:
        return self.dofmap.n_scalar

    @property
    def n_vector(self) -> int:
        return self.dofmap.n_vector

    @property
    def n_neumann(self) -> int:
        return len(self.mesh.neumann_nodes)

    @_functools.cached_property
    def mass(self) -> _sparse.csr_matrix:
        return assemble_mass(self.mesh, self.dofmap, self.rule)

    @_functools.cached_property
    def stiffness(self) -> _sparse.csr_matrix:
        return assemble_scalar_stiffness(self.mesh, self.dofmap)

    @_functools.cached_property
    def lumped_mass(self) -> _np.ndarray:
        return _util.lumped(self.mass)

    @_functools.cached_property
    def scalar_h1(self) -> _sparse.csr_matrix:
        return (self.mass + self.stiffness).tocsr()

    @_functools.cached_property
    def vector_mass(self) -> _sparse.csr_matrix:
        return assemble_vector_mass(self.mesh, self.dofmap, self.rule)

    @_functools.cached_property
    def lumped_vector_mass(self) -> _np.ndarray:
        return _util.lumped(self.vector_mass)

    @_functools.cached_property
    def vector_h1(self) -> _sparse.csr_matrix:
        return (self.vector_mass + assemble_vector_stiffness(self.mesh, self.dofmap)).tocsr()

    @_functools.cached_property
    def boundary_mass(self) -> _sparse.csr_matrix:
        return assemble_boundary_mass(self.mesh)

    @_functools.cached_property
    def lumped_boundary_mass(self) -> _np.ndarray:
        return _util.lumped(self.boundary_mass)

    @_functools.cached_property
    def neumann_operator(self) -> _sparse.csr_matrix:
        return assemble_neumann_operator(self.mesh, self.dofmap, self.direction)

    @_functools.cached_property
    def element_mass(self) -> _np.ndarray:
        return element_mass_matrices(self.mesh, self.rule)

    @_functools.cached_property
    def strain_matrices(self) -> _np.ndarray:
        return strain_matrices(self.mesh)

    @_functools.cached_property
    def element_dofs(self) -> _np.ndarray:
        return self.dofmap.element_vector_dofs(self.mesh.elements)

    def at_quadrature(self, nodal) -> _np.ndarray:
        return at_quadrature(self.mesh, self.rule, nodal)

    def integrate(self, values) -> _np.ndarray:
        return integrate(self.mesh, self.rule, values)

    def strains(self, u) -> _np.ndarray:
        """Elementwise (e_xx, e_yy, 2 e_xy) of a reduced displacement vector."""
        local = self.dofmap.scatter(u).reshape(-1)[
            (2 * self.mesh.elements[:, :, None] + _np.arange(2)).reshape(-1, 6)
        ]
        return _np.einsum("eia,ea->ei", self.strain_matrices, local)

    def weighted_mass_vectors(self, nodal) -> _np.ndarray:
        """Elementwise integrals of a P1 field against each basis function."""
        return _np.einsum(
            "eab,eb->ea", self.element_mass, _np.asarray(nodal, dtype=float)[self.mesh.elements]
        )

    def scatter_scalar(self, values) -> _np.ndarray:
        return _assemble_vector(self.mesh.elements, values, self.n_scalar)

    def scatter_vector(self, values) -> _np.ndarray:
        return _assemble_vector(self.element_dofs, values, self.n_vector)

    def assemble_scalar(self, values) -> _sparse.csr_matrix:
        rows, cols = _scalar_pattern(self.mesh.elements)
        return _assemble_matrix(rows, cols, values, (self.n_scalar, self.n_scalar))

    def assemble_vector(self, values) -> _sparse.csr_matrix:
        rows, cols = _vector_pattern(self.element_dofs, self.element_dofs)
        return _assemble_matrix(rows, cols, values, (self.n_vector, self.n_vector))

    def assemble_mixed(self, values) -> _sparse.csr_matrix:
        """Assembles element blocks coupling displacement rows with scalar columns."""
        rows, cols = _vector_pattern(self.element_dofs, self.mesh.elements)
        return _assemble_matrix(rows, cols, values, (self.n_vector, self.n_scalar))
