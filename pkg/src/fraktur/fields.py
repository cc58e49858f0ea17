"""Containers for discrete space-time fields, controls and multipliers."""
from __future__ import annotations

import dataclasses as _dataclasses

import numpy as _np

import fraktur.exceptions as _exceptions


def _as_array(values, ndim: int, name: str) -> _np.ndarray:
    array = _np.array(values, dtype=float)
    if array.ndim != ndim:
        raise _exceptions.InvalidArgumentError(
            f"{name} must have {ndim} dimensions, got shape {array.shape}"
        )
    if not _np.all(_np.isfinite(array)):
        raise _exceptions.InvalidArgumentError(f"{name} has non-finite entries")
    return array


def _expect_shape(array: _np.ndarray, shape: tuple, name: str) -> None:
    if array.shape != shape:
        raise _exceptions.InvalidArgumentError(
            f"{name} has shape {array.shape}, expected {shape}"
        )


@_dataclasses.dataclass(eq=False)
class SpaceTimeState:
    """Displacement and phase-field at every time node.

    Attributes:
        u (numpy.ndarray): Reduced displacement DoFs, shape (M+1, n_vector)
        phi (numpy.ndarray): Nodal phase-field, shape (M+1, n_scalar)
    """

    u: _np.ndarray
    phi: _np.ndarray

    def __post_init__(self) -> None:
        self.u = _as_array(self.u, 2, "u")
        self.phi = _as_array(self.phi, 2, "phi")
        if self.u.shape[0] != self.phi.shape[0]:
            raise _exceptions.InvalidArgumentError(
                f"u has {self.u.shape[0]} time nodes but phi has {self.phi.shape[0]}"
            )

    @classmethod
    def zeros(cls, n_times: int, n_vector: int, n_scalar: int):
        return cls(u=_np.zeros((n_times, n_vector)), phi=_np.zeros((n_times, n_scalar)))

    @property
    def n_times(self) -> int:
        return self.u.shape[0]

    def check_shape(self, n_times: int, n_vector: int, n_scalar: int) -> None:
        _expect_shape(self.u, (n_times, n_vector), "u")
        _expect_shape(self.phi, (n_times, n_scalar), "phi")

    def copy(self):
        return type(self)(u=self.u.copy(), phi=self.phi.copy())

    def dot(self, other: SpaceTimeState) -> float:
        """The Euclidean pairing of coefficient arrays."""
        return float(_np.sum(self.u * other.u) + _np.sum(self.phi * other.phi))

    def flat(self) -> _np.ndarray:
        return _np.concatenate([self.u, self.phi], axis=1).ravel()

    @classmethod
    def from_flat(cls, vector, n_times: int, n_vector: int, n_scalar: int):
        blocks = _np.asarray(vector, dtype=float).reshape(n_times, n_vector + n_scalar)
        return cls(u=blocks[:, :n_vector], phi=blocks[:, n_vector:])

    def __add__(self, other):
        return type(self)(u=self.u + other.u, phi=self.phi + other.phi)

    def __sub__(self, other):
        return type(self)(u=self.u - other.u, phi=self.phi - other.phi)

    def __mul__(self, factor: float):
        return type(self)(u=factor * self.u, phi=factor * self.phi)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


class Direction(SpaceTimeState):
    """A direction in the state space, or the coefficient vector of a functional on it."""

    @staticmethod
    def of(state: SpaceTimeState) -> Direction:
        return Direction(u=state.u, phi=state.phi)


@_dataclasses.dataclass(eq=False)
class Control:
    """The boundary force on the Neumann nodes at every time node.

    Attributes:
        q (numpy.ndarray): Shape (M+1, n_neumann)
    """

    q: _np.ndarray

    def __post_init__(self) -> None:
        self.q = _as_array(self.q, 2, "q")

    @classmethod
    def zeros(cls, n_times: int, n_neumann: int) -> Control:
        return cls(q=_np.zeros((n_times, n_neumann)))

    @property
    def n_times(self) -> int:
        return self.q.shape[0]

    def check_shape(self, n_times: int, n_neumann: int) -> None:
        _expect_shape(self.q, (n_times, n_neumann), "q")

    def copy(self) -> Control:
        return Control(q=self.q.copy())

    def flat(self) -> _np.ndarray:
        return self.q.ravel().copy()

    def __add__(self, other: Control) -> Control:
        return Control(q=self.q + other.q)

    def __sub__(self, other: Control) -> Control:
        return Control(q=self.q - other.q)

    def __mul__(self, factor: float) -> Control:
        return Control(q=factor * self.q)

    __rmul__ = __mul__


@_dataclasses.dataclass(eq=False)
class LowerMultiplier:
    """The multiplier of the initial condition and of irreversibility.

    Both parts are nodal Riesz representatives with respect to the lumped
    mass, so that <l, v> = l^T D v.

    Attributes:
        l1 (numpy.ndarray): Shape (n_scalar,)
        l2 (numpy.ndarray): One field per time interval, shape (M, n_scalar)
    """

    l1: _np.ndarray
    l2: _np.ndarray

    def __post_init__(self) -> None:
        self.l1 = _as_array(self.l1, 1, "l1")
        self.l2 = _as_array(self.l2, 2, "l2")

    @classmethod
    def zeros(cls, n_steps: int, n_scalar: int) -> LowerMultiplier:
        return cls(l1=_np.zeros(n_scalar), l2=_np.zeros((n_steps, n_scalar)))

    def check_shape(self, n_steps: int, n_scalar: int) -> None:
        _expect_shape(self.l1, (n_scalar,), "l1")
        _expect_shape(self.l2, (n_steps, n_scalar), "l2")

    def copy(self) -> LowerMultiplier:
        return LowerMultiplier(l1=self.l1.copy(), l2=self.l2.copy())

    def flat(self) -> _np.ndarray:
        return _np.concatenate([self.l1, self.l2.ravel()])

    @classmethod
    def from_flat(cls, vector, n_steps: int, n_scalar: int) -> LowerMultiplier:
        vector = _np.asarray(vector, dtype=float)
        return cls(l1=vector[:n_scalar], l2=vector[n_scalar:].reshape(n_steps, n_scalar))

    def __add__(self, other: LowerMultiplier) -> LowerMultiplier:
        return LowerMultiplier(l1=self.l1 + other.l1, l2=self.l2 + other.l2)

    def __sub__(self, other: LowerMultiplier) -> LowerMultiplier:
        return LowerMultiplier(l1=self.l1 - other.l1, l2=self.l2 - other.l2)

    def __mul__(self, factor: float) -> LowerMultiplier:
        return LowerMultiplier(l1=factor * self.l1, l2=factor * self.l2)

    __rmul__ = __mul__


@_dataclasses.dataclass(eq=False)
class ActiveSet:
    """Active irreversibility constraints per time interval and node.

    Attributes:
        flags (numpy.ndarray): Boolean array of shape (M, n_scalar); row m-1 belongs to step m
    """

    flags: _np.ndarray

    def __post_init__(self) -> None:
        self.flags = _np.asarray(self.flags, dtype=bool)

    @classmethod
    def empty(cls, n_steps: int, n_scalar: int) -> ActiveSet:
        return cls(flags=_np.zeros((n_steps, n_scalar), dtype=bool))

    def step(self, m: int) -> _np.ndarray:
        return self.flags[m - 1]

    def counts(self) -> _np.ndarray:
        return self.flags.sum(axis=1)

    def is_empty(self) -> bool:
        return not bool(self.flags.any())


@_dataclasses.dataclass(eq=False)
class UpperMultiplier:
    """The multiplier of the upper-level constraints.

    Attributes:
        pi1 (numpy.ndarray): Nodal, pairs with phi(0) - phi_0 through the lumped mass
        pi2 (Direction): An element of the state space, pairs with a directly
        pi3 (numpy.ndarray): Per interval, pairs with -phi_dot
        pi4 (numpy.ndarray): Per interval, pairs with l2
    """

    pi1: _np.ndarray
    pi2: Direction
    pi3: _np.ndarray
    pi4: _np.ndarray

    def __post_init__(self) -> None:
        self.pi1 = _as_array(self.pi1, 1, "pi1")
        self.pi3 = _as_array(self.pi3, 2, "pi3")
        self.pi4 = _as_array(self.pi4, 2, "pi4")

    @classmethod
    def zeros(cls, n_steps: int, n_vector: int, n_scalar: int) -> UpperMultiplier:
        return cls(
            pi1=_np.zeros(n_scalar),
            pi2=Direction.zeros(n_steps + 1, n_vector, n_scalar),
            pi3=_np.zeros((n_steps, n_scalar)),
            pi4=_np.zeros((n_steps, n_scalar)),
        )

    def flat(self) -> _np.ndarray:
        return _np.concatenate(
            [self.pi1, self.pi2.flat(), self.pi3.ravel(), self.pi4.ravel()]
        )

    @classmethod
    def from_flat(cls, vector, n_steps: int, n_vector: int, n_scalar: int) -> UpperMultiplier:
        vector = _np.asarray(vector, dtype=float)
        n_state = (n_steps + 1) * (n_vector + n_scalar)
        n_interval = n_steps * n_scalar
        pieces = _np.split(
            vector, _np.cumsum([n_scalar, n_state, n_interval])
        )
        return cls(
            pi1=pieces[0],
            pi2=Direction.from_flat(pieces[1], n_steps + 1, n_vector, n_scalar),
            pi3=pieces[2].reshape(n_steps, n_scalar),
            pi4=pieces[3].reshape(n_steps, n_scalar),
        )

    def norm(self) -> float:
        return float(_np.linalg.norm(self.flat()))
