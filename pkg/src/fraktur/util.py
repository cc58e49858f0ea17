"""Utility functions for Fraktur."""
import typing as _typing

import numpy as _np

import fraktur.exceptions as _exceptions


def to_jsonable(value) -> _typing.Any:
    """Converts numpy values and models to plain JSON types, dropping None entries of mappings."""
    if isinstance(value, dict):
        return {key: to_jsonable(item) for key, item in value.items() if item is not None}
    if isinstance(value, _np.ndarray):
        return value.tolist()
    if isinstance(value, _np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if hasattr(value, "_to_json"):
        return value._to_json()
    return value


def trapezoid_weights(n_steps: int, dt: float) -> _np.ndarray:
    weights = _np.full(n_steps + 1, dt)
    weights[0] = weights[-1] = 0.5 * dt
    return weights


def lumped(matrix) -> _np.ndarray:
    """Row sums of a sparse matrix as a flat array."""
    return _np.asarray(matrix.sum(axis=1)).ravel()


def as_time_field(values, n_times: int, size: int, name: str) -> _np.ndarray:
    """Broadcast a spatial field or a trajectory to shape (n_times, size).

    Args:
        values: A scalar, a field of length ``size`` or an array of shape
            ``(n_times, size)``
        n_times (int): Number of time nodes
        size (int): Number of spatial DoFs
        name (str): Used in the error message

    Raises:
        InvalidArgumentError: The shape fits neither form
    """
    array = _np.asarray(values, dtype=float)
    if array.ndim == 0:
        return _np.full((n_times, size), float(array))
    if array.shape == (size,):
        return _np.tile(array, (n_times, 1))
    if array.shape == (n_times, size):
        return array.copy()
    raise _exceptions.InvalidArgumentError(
        f"{name} has shape {array.shape}, expected ({size},) or ({n_times}, {size})"
    )


def weighted_norm(vector, inverse_weights) -> float:
    vector = _np.asarray(vector, dtype=float)
    return float(_np.sqrt(_np.sum(vector * vector * inverse_weights)))


def positive_part_max(values) -> float:
    values = _np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(max(0.0, values.max()))


def negative_part_max(values) -> float:
    values = _np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(max(0.0, -values.min()))


def format_value(value) -> str:
    if isinstance(value, (bool, _np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, _np.floating)):
        return f"{float(value):.6e}"
    return str(value)


def result_line(**kwargs) -> str:
    return "RESULT " + " ".join(
        f"{key}={format_value(value)}" for key, value in kwargs.items()
    )
