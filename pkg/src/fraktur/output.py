"""Writers for CSV tables, VTK fields and plain-text mesh dumps."""
from __future__ import annotations

import json as _json
import logging as _logging
import pathlib as _pathlib

import meshio as _meshio
import numpy as _np
import pandas as _pd

import fraktur.fields as _fields
import fraktur.mesh as _mesh
import fraktur.models as _models

_logger = _logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def prepare_directory(path) -> _pathlib.Path:
    directory = _pathlib.Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def write_table(table: _pd.DataFrame, path) -> _pathlib.Path:
    """Writes a table as CSV with a header row and a fixed float format."""
    path = _pathlib.Path(path)
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    _logger.debug("Wrote %d rows to %s", len(table), path)
    return path


def write_json(model: _models._Model, path) -> _pathlib.Path:
    path = _pathlib.Path(path)
    path.write_text(_json.dumps(model._to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_mesh_dump(mesh: _mesh.Mesh2D, directory) -> tuple:
    """Writes ``nodes.txt`` (x y) and ``elements.txt`` (three node indices per line)."""
    directory = prepare_directory(directory)
    nodes, elements = directory / "nodes.txt", directory / "elements.txt"
    _np.savetxt(nodes, mesh.nodes, fmt="%.16e", header="x y")
    _np.savetxt(elements, mesh.elements, fmt="%d", header="n0 n1 n2")
    return nodes, elements


def write_fields_vtk(mesh: _mesh.Mesh2D, path, scalars: dict | None = None, vectors: dict | None = None) -> _pathlib.Path:
    """Writes nodal fields as legacy ASCII VTK.

    Args:
        mesh (Mesh2D): The triangulation
        path: The target file
        scalars (dict): Name to nodal values
        vectors (dict): Name to nodal values of shape (n_nodes, 2)
    """
    path = _pathlib.Path(path)
    points = _np.column_stack([mesh.nodes, _np.zeros(mesh.n_nodes)])
    point_data = {name: _np.asarray(values, dtype=float) for name, values in (scalars or {}).items()}
    for name, values in (vectors or {}).items():
        values = _np.asarray(values, dtype=float)
        point_data[name] = _np.column_stack([values, _np.zeros(len(values))])
    _meshio.write(
        str(path),
        _meshio.Mesh(points=points, cells=[("triangle", mesh.elements)], point_data=point_data),
        file_format="vtk",
        binary=False,
    )
    return path


def write_state_vtk(
    mesh: _mesh.Mesh2D,
    dofmap: _mesh.DofMap,
    state: _fields.SpaceTimeState,
    multiplier: _fields.LowerMultiplier,
    directory,
    prefix: str = "fields",
) -> list:
    """Writes one VTK file per time node with u, phi and the multiplier.

    The multiplier field holds l1 at t = 0 and l2^m afterwards.
    """
    directory = prepare_directory(directory)
    paths = []
    for m in range(state.n_times):
        multiplier_field = multiplier.l1 if m == 0 else multiplier.l2[m - 1]
        paths.append(
            write_fields_vtk(
                mesh,
                directory / f"{prefix}_{m:04d}.vtk",
                scalars={"phi": state.phi[m], "multiplier": multiplier_field},
                vectors={"u": dofmap.scatter(state.u[m])},
            )
        )
    return paths


def write_control_vtk(mesh: _mesh.Mesh2D, control: _fields.Control, directory, prefix: str = "control") -> list:
    """Writes the boundary force per time node as a nodal field, zero away from Gamma_N."""
    directory = prepare_directory(directory)
    paths = []
    for m in range(control.n_times):
        q = _np.zeros(mesh.n_nodes)
        q[mesh.neumann_nodes] = control.q[m]
        paths.append(write_fields_vtk(mesh, directory / f"{prefix}_{m:04d}.vtk", scalars={"q": q}))
    return paths
