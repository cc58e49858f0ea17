"""Contains the mesh, DoF map and quadrature rule of Fraktur."""
from __future__ import annotations

import dataclasses as _dataclasses
import functools as _functools
import math as _math

import numpy as _np

import fraktur.exceptions as _exceptions
import fraktur.literals as _literals
import fraktur.models as _models


@_dataclasses.dataclass(frozen=True, eq=False)
class QuadratureRule:
    """A quadrature rule on the reference triangle (0,0), (1,0), (0,1).

    Attributes:
        points (numpy.ndarray): Barycentric coordinates, shape (n_points, 3)
        weights (numpy.ndarray): Positive weights summing to the reference area 1/2
        degree (int): Polynomial degree integrated exactly
    """

    points: _np.ndarray
    weights: _np.ndarray
    degree: int

    @staticmethod
    def triangle_degree2() -> QuadratureRule:
        """The symmetric three-point rule, exact for quadratics."""
        a, b = 2.0 / 3.0, 1.0 / 6.0
        return QuadratureRule(
            points=_np.array([[a, b, b], [b, a, b], [b, b, a]]),
            weights=_np.full(3, 1.0 / 6.0),
            degree=2,
        )

    def integrate_monomial(self, a: int, b: int) -> float:
        x = self.points[:, 1]
        y = self.points[:, 2]
        return float(_np.sum(self.weights * x**a * y**b))

    @staticmethod
    def exact_monomial(a: int, b: int) -> float:
        return _math.factorial(a) * _math.factorial(b) / _math.factorial(a + b + 2)

    def verify(self, tol: float = 1e-14) -> None:
        """Checks exactness on every monomial up to the declared degree.

        Raises:
            InvalidArgumentError: A monomial is integrated inexactly
        """
        for total in range(self.degree + 1):
            for a in range(total + 1):
                b = total - a
                error = abs(self.integrate_monomial(a, b) - self.exact_monomial(a, b))
                if error > tol:
                    raise _exceptions.InvalidArgumentError(
                        f"Quadrature is not exact for x^{a} y^{b} (error {error:.3e})"
                    )


@_dataclasses.dataclass(frozen=True, eq=False)
class Mesh2D:
    """A triangulation with tagged boundary edges.

    Boundary edges are stored counterclockwise, so the outward normal of an
    edge from p to q is the tangent rotated clockwise.

    Attributes:
        nodes (numpy.ndarray): Node coordinates, shape (n_nodes, 2)
        elements (numpy.ndarray): Node triples, shape (n_elements, 3)
        boundary_edges (numpy.ndarray): Node pairs, shape (n_edges, 2)
        boundary_tags (tuple[str, ...]): One of dirichlet, neumann, free per edge
    """

    nodes: _np.ndarray
    elements: _np.ndarray
    boundary_edges: _np.ndarray
    boundary_tags: tuple

    def __post_init__(self) -> None:
        if len(self.boundary_tags) != len(self.boundary_edges):
            raise _exceptions.InvalidMeshError(
                "Every boundary edge needs exactly one tag"
            )
        for tag in self.boundary_tags:
            if tag not in _literals.BOUNDARY_TAGS:
                raise _exceptions.InvalidMeshError(f"Unknown boundary tag '{tag}'")
        if _np.any(self.areas <= 0.0):
            worst = int(_np.argmin(self.areas))
            raise _exceptions.InvalidMeshError(
                f"Element {worst} has non-positive signed area {self.areas[worst]:.3e}"
            )
        for tag in ("dirichlet", "neumann"):
            if tag not in self.boundary_tags:
                raise _exceptions.InvalidMeshError(
                    f"The {tag} boundary must contain at least one edge"
                )

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @_functools.cached_property
    def areas(self) -> _np.ndarray:
        coords = self.nodes[self.elements]
        d1 = coords[:, 1] - coords[:, 0]
        d2 = coords[:, 2] - coords[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @_functools.cached_property
    def gradients(self) -> _np.ndarray:
        """Gradients of the barycentric basis functions, shape (n_elements, 3, 2)."""
        coords = self.nodes[self.elements]
        x, y = coords[..., 0], coords[..., 1]
        det = (2.0 * self.areas)[:, None]
        gx = _np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        gy = _np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        return _np.stack([gx / det, gy / det], axis=2)

    def edges_with_tag(self, tag: _literals.boundary_tag_literal) -> _np.ndarray:
        mask = _np.array([t == tag for t in self.boundary_tags], dtype=bool)
        return self.boundary_edges[mask]

    def nodes_with_tag(self, tag: _literals.boundary_tag_literal) -> _np.ndarray:
        return _np.unique(self.edges_with_tag(tag))

    @_functools.cached_property
    def dirichlet_mask(self) -> _np.ndarray:
        mask = _np.zeros(self.n_nodes, dtype=bool)
        mask[self.nodes_with_tag("dirichlet")] = True
        return mask

    @_functools.cached_property
    def neumann_nodes(self) -> _np.ndarray:
        return self.nodes_with_tag("neumann")

    @_functools.cached_property
    def boundary_nodes(self) -> _np.ndarray:
        return _np.unique(self.boundary_edges)

    @_functools.cached_property
    def interior_mask(self) -> _np.ndarray:
        mask = _np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return mask

    @staticmethod
    def edge_geometry(nodes: _np.ndarray, edges: _np.ndarray) -> tuple:
        """Lengths and outward unit normals of counterclockwise edges."""
        tangent = nodes[edges[:, 1]] - nodes[edges[:, 0]]
        lengths = _np.hypot(tangent[:, 0], tangent[:, 1])
        unit = tangent / lengths[:, None]
        normals = _np.column_stack([unit[:, 1], -unit[:, 0]])
        return lengths, normals


@_dataclasses.dataclass(frozen=True, eq=False)
class DofMap:
    """Numbering of scalar and displacement DoFs.

    Displacement DoFs on the Dirichlet boundary are eliminated; the remaining
    nodes are numbered in increasing order with components interleaved.

    Attributes:
        n_scalar (int): Number of scalar DoFs (one per node)
        n_vector (int): Number of displacement DoFs, 2 per non-Dirichlet node
        dirichlet_mask (numpy.ndarray): Per-node flag
        free_nodes (numpy.ndarray): Nodes carrying displacement DoFs
        node_to_vector (numpy.ndarray): DoF index per node and component, -1 if eliminated
    """

    n_scalar: int
    n_vector: int
    dirichlet_mask: _np.ndarray
    free_nodes: _np.ndarray
    node_to_vector: _np.ndarray

    @staticmethod
    def from_mesh(mesh: Mesh2D) -> DofMap:
        mask = mesh.dirichlet_mask.copy()
        free = _np.flatnonzero(~mask)
        node_to_vector = -_np.ones((mesh.n_nodes, 2), dtype=int)
        node_to_vector[free] = 2 * _np.arange(len(free))[:, None] + _np.arange(2)
        return DofMap(
            n_scalar=mesh.n_nodes,
            n_vector=2 * len(free),
            dirichlet_mask=mask,
            free_nodes=free,
            node_to_vector=node_to_vector,
        )

    def element_vector_dofs(self, elements: _np.ndarray) -> _np.ndarray:
        """Displacement DoFs of each element ordered (ux0, uy0, ux1, uy1, ux2, uy2)."""
        return self.node_to_vector[elements].reshape(len(elements), 6)

    def scatter(self, u: _np.ndarray) -> _np.ndarray:
        """Nodal displacements of shape (n_nodes, 2), zero on the Dirichlet boundary."""
        nodal = _np.zeros((self.n_scalar, 2))
        nodal[self.free_nodes] = _np.asarray(u, dtype=float).reshape(-1, 2)
        return nodal

    def gather(self, nodal: _np.ndarray) -> _np.ndarray:
        return _np.asarray(nodal, dtype=float)[self.free_nodes].reshape(-1)


def build_unit_square_mesh(n: int, tagging: _models.BoundaryTagging | None = None) -> Mesh2D:
    """Builds the structured triangulation of (0,1)^2.

    Node (i, j) at (i/n, j/n) gets index i + j(n+1); each cell is split along
    its diagonal from the lower left to the upper right corner.

    Args:
        n (int): Subdivisions per side
        tagging (BoundaryTagging): The boundary tagging, left Dirichlet and right Neumann by default

    Returns:
        Mesh2D: 2n^2 triangles on (n+1)^2 nodes

    Raises:
        InvalidArgumentError: n is not a positive integer
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise _exceptions.InvalidArgumentError(f"n must be a positive integer, got {n}")
    n = int(n)
    tagging = tagging or _models.BoundaryTagging()

    coords = _np.linspace(0.0, 1.0, n + 1)
    xx, yy = _np.meshgrid(coords, coords)
    nodes = _np.column_stack([xx.ravel(), yy.ravel()])

    def index(i, j):
        return i + j * (n + 1)

    ii, jj = _np.meshgrid(_np.arange(n), _np.arange(n))
    ii, jj = ii.ravel(), jj.ravel()
    v00, v10 = index(ii, jj), index(ii + 1, jj)
    v01, v11 = index(ii, jj + 1), index(ii + 1, jj + 1)
    lower = _np.column_stack([v00, v10, v11])
    upper = _np.column_stack([v00, v11, v01])
    elements = _np.stack([lower, upper], axis=1).reshape(-1, 3)

    k = _np.arange(n)
    sides = {
        "bottom": _np.column_stack([index(k, 0), index(k + 1, 0)]),
        "right": _np.column_stack([index(n, k), index(n, k + 1)]),
        "top": _np.column_stack([index(n - k, n), index(n - k - 1, n)]),
        "left": _np.column_stack([index(0, n - k), index(0, n - k - 1)]),
    }
    edges = _np.concatenate([sides[side] for side in ("bottom", "right", "top", "left")])
    tags = tuple(
        tagging.tag_of(side)
        for side in ("bottom", "right", "top", "left")
        for _ in range(n)
    )
    return Mesh2D(nodes=nodes, elements=elements, boundary_edges=edges, boundary_tags=tags)
