"""Contains the parameter and option models used in Fraktur."""
from __future__ import annotations

import dataclasses as _dataclasses
import math as _math

import numpy as _np

import fraktur.exceptions as _exceptions
import fraktur.literals as _literals
import fraktur.util as _util


class _Model:
    def _to_json(self) -> dict:
        return _util.to_jsonable(dict(self.__dict__))


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise _exceptions.InvalidParametersError(message)


@_dataclasses.dataclass(frozen=True)
class PhysParams(_Model):
    """The material and regularization constants of the crack energy.

    Attributes:
        eps (float): The phase-field regularization length, > 0
        kappa (float): The bulk regularization, in (0, 1)
        mu (float): The shear modulus, > 0
        lmbda (float): The first Lamé parameter, > -2/3 mu
        g_c (float): The critical energy release rate, > 0
    """

    eps: float = 0.1
    kappa: float = 1e-2
    mu: float = 1.0
    lmbda: float = 1.0
    g_c: float = 1.0

    def __post_init__(self) -> None:
        for name in ("eps", "kappa", "mu", "lmbda", "g_c"):
            _require(
                _math.isfinite(getattr(self, name)), f"{name} must be finite"
            )
        _require(self.eps > 0, f"eps must be positive, got {self.eps}")
        _require(0 < self.kappa < 1, f"kappa must lie in (0, 1), got {self.kappa}")
        _require(self.mu > 0, f"mu must be positive, got {self.mu}")
        _require(
            self.lmbda > -2.0 * self.mu / 3.0,
            f"lambda must exceed -2/3 mu = {-2.0 * self.mu / 3.0}, got {self.lmbda}",
        )
        _require(self.g_c > 0, f"g_c must be positive, got {self.g_c}")

    @property
    def stress_matrix(self) -> _np.ndarray:
        """The Voigt matrix of C e = 2 mu e + lambda tr(e) I with engineering shear."""
        mu, lmbda = self.mu, self.lmbda
        return _np.array(
            [
                [2.0 * mu + lmbda, lmbda, 0.0],
                [lmbda, 2.0 * mu + lmbda, 0.0],
                [0.0, 0.0, mu],
            ]
        )

    @staticmethod
    def _from_json(json: dict) -> PhysParams:
        return PhysParams(
            eps=float(json.get("eps", 0.1)),
            kappa=float(json.get("kappa", 1e-2)),
            mu=float(json.get("mu", 1.0)),
            lmbda=float(json.get("lambda", 1.0)),
            g_c=float(json.get("g_c", 1.0)),
        )


@_dataclasses.dataclass(frozen=True)
class TimeGrid(_Model):
    """A uniform grid 0 = t_0 < ... < t_M = T.

    Attributes:
        t_final (float): The final time T
        n_steps (int): The number of intervals M
    """

    t_final: float = 1.0
    n_steps: int = 10

    def __post_init__(self) -> None:
        if not (_math.isfinite(self.t_final) and self.t_final > 0):
            raise _exceptions.InvalidArgumentError(
                f"t_final must be positive, got {self.t_final}"
            )
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise _exceptions.InvalidArgumentError(
                f"n_steps must be a positive integer, got {self.n_steps}"
            )

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps

    @property
    def n_times(self) -> int:
        return self.n_steps + 1

    @property
    def times(self) -> _np.ndarray:
        return _np.arange(self.n_steps + 1) * self.dt

    @property
    def trapezoid_weights(self) -> _np.ndarray:
        return _util.trapezoid_weights(self.n_steps, self.dt)

    @staticmethod
    def _from_json(json: dict) -> TimeGrid:
        return TimeGrid(
            t_final=float(json.get("t_final", 1.0)),
            n_steps=int(json.get("n_steps", 10)),
        )


@_dataclasses.dataclass(frozen=True)
class BoundaryTagging(_Model):
    """Which part of the boundary each side of the unit square belongs to."""

    left: _literals.boundary_tag_literal = "dirichlet"
    right: _literals.boundary_tag_literal = "neumann"
    bottom: _literals.boundary_tag_literal = "free"
    top: _literals.boundary_tag_literal = "free"

    def __post_init__(self) -> None:
        for side in _literals.SIDES:
            tag = getattr(self, side)
            if tag not in _literals.BOUNDARY_TAGS:
                raise _exceptions.InvalidMeshError(
                    f"Unknown boundary tag '{tag}' on side '{side}'"
                )

    def tag_of(self, side: _literals.side_literal) -> str:
        return getattr(self, side)

    @staticmethod
    def _from_json(json: dict) -> BoundaryTagging:
        return BoundaryTagging(
            **{side: json[side] for side in _literals.SIDES if side in json}
        )


@_dataclasses.dataclass(frozen=True)
class SolverOptions(_Model):
    """Options of the primal-dual active set forward solver.

    Attributes:
        c_scale (float): Active set parameter c in units of g_c / eps
        max_iter (int): Maximum number of PDAS iterations per time step
        tol (float): Stationarity tolerance of a time step
        shift (float): Initial Levenberg shift relative to the largest diagonal entry
        max_shift_doublings (int): How often the shift may be doubled
        max_backtracks (int): Maximum number of step halvings
        kkt_tol (float): Tolerance of the final space-time KKT certificate
    """

    c_scale: float = 1e2
    max_iter: int = 60
    tol: float = 1e-10
    shift: float = 1e-10
    max_shift_doublings: int = 80
    max_backtracks: int = 50
    kkt_tol: float = 1e-8

    def __post_init__(self) -> None:
        _require(self.c_scale > 0, "c_scale must be positive")
        _require(self.max_iter >= 1, "max_iter must be at least 1")
        _require(self.tol > 0, "tol must be positive")
        _require(self.shift > 0, "shift must be positive")
        _require(self.kkt_tol > 0, "kkt_tol must be positive")

    @staticmethod
    def _from_json(json: dict) -> SolverOptions:
        defaults = SolverOptions()
        return SolverOptions(
            c_scale=float(json.get("c_scale", defaults.c_scale)),
            max_iter=int(json.get("max_iter", defaults.max_iter)),
            tol=float(json.get("tol", defaults.tol)),
            shift=float(json.get("shift", defaults.shift)),
            max_shift_doublings=int(
                json.get("max_shift_doublings", defaults.max_shift_doublings)
            ),
            max_backtracks=int(json.get("max_backtracks", defaults.max_backtracks)),
            kkt_tol=float(json.get("kkt_tol", defaults.kkt_tol)),
        )


@_dataclasses.dataclass(frozen=True)
class ControlOptions(_Model):
    """Options of the reduced-space control solver.

    Attributes:
        max_iter (int): Maximum number of quasi-Newton iterations
        tol (float): Tolerance on the reduced gradient norm
        history_size (int): Number of stored correction pairs
        lsq_tol (float): Tolerance of the multiplier least-squares fit
        kkt_tol (float): Tolerance used for feasibility blocks and complementarity
    """

    max_iter: int = 200
    tol: float = 1e-9
    history_size: int = 20
    lsq_tol: float = 1e-12
    kkt_tol: float = 1e-6

    def __post_init__(self) -> None:
        _require(self.max_iter >= 1, "max_iter must be at least 1")
        _require(self.tol > 0, "tol must be positive")
        _require(self.history_size >= 1, "history_size must be at least 1")

    @staticmethod
    def _from_json(json: dict) -> ControlOptions:
        defaults = ControlOptions()
        return ControlOptions(
            max_iter=int(json.get("max_iter", defaults.max_iter)),
            tol=float(json.get("tol", defaults.tol)),
            history_size=int(json.get("history_size", defaults.history_size)),
            lsq_tol=float(json.get("lsq_tol", defaults.lsq_tol)),
            kkt_tol=float(json.get("kkt_tol", defaults.kkt_tol)),
        )


@_dataclasses.dataclass(frozen=True, eq=False)
class ControlProblemSpec(_Model):
    """The data of the tracking-type cost.

    Attributes:
        alpha (float): The Tikhonov weight, > 0
        phi_d (numpy.ndarray): The desired phase-field, one nodal field or one per time node
        q_r (numpy.ndarray): The nominal control on the Neumann nodes, one field or one per time node
    """

    alpha: float
    phi_d: _np.ndarray
    q_r: _np.ndarray

    def __post_init__(self) -> None:
        _require(
            _math.isfinite(self.alpha) and self.alpha > 0,
            f"alpha must be positive, got {self.alpha}",
        )
        object.__setattr__(self, "phi_d", _np.asarray(self.phi_d, dtype=float))
        object.__setattr__(self, "q_r", _np.asarray(self.q_r, dtype=float))
        _require(bool(_np.all(_np.isfinite(self.phi_d))), "phi_d must be finite")
        _require(bool(_np.all(_np.isfinite(self.q_r))), "q_r must be finite")
