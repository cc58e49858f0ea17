"""Scenario configuration: TOML files mapped onto models."""
from __future__ import annotations

import dataclasses as _dataclasses
import importlib.resources as _resources
import logging as _logging
import math as _math
import pathlib as _pathlib
import tomllib as _tomllib

import numpy as _np

import fraktur.assembly as _assembly
import fraktur.energy as _energy
import fraktur.exceptions as _exceptions
import fraktur.fields as _fields
import fraktur.literals as _literals
import fraktur.mesh as _mesh
import fraktur.models as _models

_logger = _logging.getLogger(__name__)

SECTIONS = {
    "scenario": ("name",),
    "mesh": ("n",),
    "time": ("t_final", "n_steps"),
    "material": ("eps", "kappa", "mu", "lambda", "g_c"),
    "boundary": ("left", "right", "bottom", "top", "direction"),
    "initial": ("kind", "value", "band_value", "band_center", "band_width"),
    "load": ("schedule", "amplitude"),
    "solver": ("c_scale", "max_iter", "tol", "shift", "max_shift_doublings", "max_backtracks", "kkt_tol"),
    "control": (
        "alpha",
        "target",
        "target_amplitude",
        "nominal_amplitude",
        "initial_amplitude",
        "max_iter",
        "tol",
        "history_size",
        "lsq_tol",
        "kkt_tol",
    ),
    "checks": ("points", "samples", "etas", "min_order", "probe_tol"),
    "output": ("dir",),
    "run": ("seed",),
}


def _check_finite(section: str, **values) -> None:
    for key, value in values.items():
        if not _math.isfinite(value):
            raise _exceptions.ConfigError(f"{section}.{key}", f"must be finite, got {value}")


@_dataclasses.dataclass(frozen=True)
class InitialCondition(_models._Model):
    """The initial phase-field: a constant, optionally with a horizontal band of another value.

    Attributes:
        kind (str): ``constant`` or ``band``
        value (float): The value away from the band
        band_value (float): The value on the band
        band_center (float): Height of the band
        band_width (float): Nodes with |y - band_center| <= band_width / 2 belong to the band
    """

    kind: _literals.initial_kind_literal = "constant"
    value: float = 1.0
    band_value: float = 0.05
    band_center: float = 0.5
    band_width: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _literals.INITIAL_KINDS:
            raise _exceptions.ConfigError("initial.kind", f"unknown kind '{self.kind}'")
        _check_finite("initial", value=self.value, band_value=self.band_value, band_center=self.band_center)
        for key in ("value", "band_value"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise _exceptions.ConfigError(f"initial.{key}", "must lie in [0, 1]")
        if self.band_width < 0:
            raise _exceptions.ConfigError("initial.band_width", "must be nonnegative")

    def phase_field(self, mesh: _mesh.Mesh2D) -> _np.ndarray:
        phi0 = _np.full(mesh.n_nodes, self.value)
        match self.kind:
            case "band":
                band = _np.abs(mesh.nodes[:, 1] - self.band_center) <= 0.5 * self.band_width + 1e-12
                phi0[band] = self.band_value
        return phi0

    @staticmethod
    def _from_json(json: dict) -> InitialCondition:
        defaults = InitialCondition()
        return InitialCondition(
            kind=str(json.get("kind", defaults.kind)),
            value=float(json.get("value", defaults.value)),
            band_value=float(json.get("band_value", defaults.band_value)),
            band_center=float(json.get("band_center", defaults.band_center)),
            band_width=float(json.get("band_width", defaults.band_width)),
        )


@_dataclasses.dataclass(frozen=True)
class LoadSchedule(_models._Model):
    """A spatially uniform force on the Neumann nodes.

    Attributes:
        schedule (str): ``zero``, ``constant`` (q = amplitude) or ``ramp`` (q = amplitude t / T)
        amplitude (float): The force amplitude
    """

    schedule: _literals.load_schedule_literal = "ramp"
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.schedule not in _literals.LOAD_SCHEDULES:
            raise _exceptions.ConfigError("load.schedule", f"unknown schedule '{self.schedule}'")
        _check_finite("load", amplitude=self.amplitude)

    def with_amplitude(self, amplitude: float) -> LoadSchedule:
        return LoadSchedule(schedule=self.schedule, amplitude=amplitude)

    def control(self, model: _energy.PhaseFieldModel) -> _fields.Control:
        match self.schedule:
            case "zero":
                profile = _np.zeros(model.n_times)
            case "constant":
                profile = _np.full(model.n_times, self.amplitude)
            case _:
                profile = self.amplitude * model.grid.times / model.grid.t_final
        return _fields.Control(q=_np.outer(profile, _np.ones(model.n_neumann)))

    @staticmethod
    def _from_json(json: dict) -> LoadSchedule:
        defaults = LoadSchedule()
        return LoadSchedule(
            schedule=str(json.get("schedule", defaults.schedule)),
            amplitude=float(json.get("amplitude", defaults.amplitude)),
        )


@_dataclasses.dataclass(frozen=True)
class ControlSettings(_models._Model):
    """The tracking problem of a scenario.

    The target is the phase-field of the forward solution for the load
    schedule at ``target_amplitude``, either as a trajectory or only its final
    value. Nominal and initial controls use the same schedule.

    Attributes:
        alpha (float): The Tikhonov weight
        target (str): ``trajectory`` or ``final``
        target_amplitude (float): Amplitude of the control generating the target
        nominal_amplitude (float): Amplitude of q_r
        initial_amplitude (float): Amplitude of the starting control
        options (ControlOptions): Optimizer options
    """

    alpha: float = 1e-4
    target: _literals.target_kind_literal = "trajectory"
    target_amplitude: float = 1.0
    nominal_amplitude: float = 1.0
    initial_amplitude: float = 0.7
    options: _models.ControlOptions = _dataclasses.field(default_factory=_models.ControlOptions)

    def __post_init__(self) -> None:
        if self.target not in _literals.TARGET_KINDS:
            raise _exceptions.ConfigError("control.target", f"unknown target '{self.target}'")
        _check_finite(
            "control",
            alpha=self.alpha,
            target_amplitude=self.target_amplitude,
            nominal_amplitude=self.nominal_amplitude,
            initial_amplitude=self.initial_amplitude,
        )
        if self.alpha <= 0:
            raise _exceptions.ConfigError("control.alpha", "must be positive")

    @staticmethod
    def _from_json(json: dict) -> ControlSettings:
        defaults = ControlSettings()
        return ControlSettings(
            alpha=float(json.get("alpha", defaults.alpha)),
            target=str(json.get("target", defaults.target)),
            target_amplitude=float(json.get("target_amplitude", defaults.target_amplitude)),
            nominal_amplitude=float(json.get("nominal_amplitude", defaults.nominal_amplitude)),
            initial_amplitude=float(json.get("initial_amplitude", defaults.initial_amplitude)),
            options=_models.ControlOptions._from_json(json),
        )


@_dataclasses.dataclass(frozen=True)
class CheckSettings(_models._Model):
    """Sizes and tolerances of the verification runs.

    Attributes:
        points (int): Random points per derivative check
        samples (int): Critical-cone samples of the second-order check
        etas (list[int] | None): Ramp lengths of the second-order table, automatic if omitted
        min_order (float): Required observed order of the derivative checks
        probe_tol (float): Relative singular value tolerance of the regularity probe
    """

    points: int = 10
    samples: int = 100
    etas: tuple | None = None
    min_order: float = 1.9
    probe_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.points < 1:
            raise _exceptions.ConfigError("checks.points", "must be at least 1")
        if self.samples < 1:
            raise _exceptions.ConfigError("checks.samples", "must be at least 1")
        if self.etas is not None and any(eta < 1 for eta in self.etas):
            raise _exceptions.ConfigError("checks.etas", "must be positive integers")

    @staticmethod
    def _from_json(json: dict) -> CheckSettings:
        defaults = CheckSettings()
        etas = json.get("etas")
        return CheckSettings(
            points=int(json.get("points", defaults.points)),
            samples=int(json.get("samples", defaults.samples)),
            etas=None if etas is None else tuple(int(eta) for eta in etas),
            min_order=float(json.get("min_order", defaults.min_order)),
            probe_tol=float(json.get("probe_tol", defaults.probe_tol)),
        )


def _direction_from_json(value):
    if isinstance(value, str):
        if value != "normal":
            raise _exceptions.ConfigError("boundary.direction", f"expected 'normal' or [dx, dy], got '{value}'")
        return value
    if not isinstance(value, list) or len(value) != 2:
        raise _exceptions.ConfigError("boundary.direction", f"expected 'normal' or [dx, dy], got {value}")
    vector = (float(value[0]), float(value[1]))
    if not _np.isclose(_np.hypot(*vector), 1.0):
        raise _exceptions.ConfigError("boundary.direction", f"must be a unit vector, got {value}")
    return vector


@_dataclasses.dataclass(frozen=True)
class ScenarioConfig(_models._Model):
    """A complete scenario.

    Attributes:
        name (str): The scenario name
        n (int): Subdivisions per side of the unit square
        grid (TimeGrid): The time grid
        params (PhysParams): The material parameters
        tagging (BoundaryTagging): The boundary tagging
        direction: The load direction, a unit vector or ``"normal"``
        initial (InitialCondition): The initial phase-field
        load (LoadSchedule): The boundary force of forward runs
        solver (SolverOptions): Forward solver options
        control (ControlSettings): The tracking problem
        checks (CheckSettings): Verification settings
        output_dir (str): Where artifacts go
        seed (int): Seed of every random draw
    """

    name: str = "pull"
    n: int = 8
    grid: _models.TimeGrid = _dataclasses.field(default_factory=_models.TimeGrid)
    params: _models.PhysParams = _dataclasses.field(default_factory=_models.PhysParams)
    tagging: _models.BoundaryTagging = _dataclasses.field(default_factory=_models.BoundaryTagging)
    direction: tuple | str = (1.0, 0.0)
    initial: InitialCondition = _dataclasses.field(default_factory=InitialCondition)
    load: LoadSchedule = _dataclasses.field(default_factory=LoadSchedule)
    solver: _models.SolverOptions = _dataclasses.field(default_factory=_models.SolverOptions)
    control: ControlSettings = _dataclasses.field(default_factory=ControlSettings)
    checks: CheckSettings = _dataclasses.field(default_factory=CheckSettings)
    output_dir: str = "out"
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or self.n < 1:
            raise _exceptions.ConfigError("mesh.n", f"must be a positive integer, got {self.n}")
        if self.seed < 0:
            raise _exceptions.ConfigError("run.seed", "must be nonnegative")

    def replace(self, **changes) -> ScenarioConfig:
        return _dataclasses.replace(self, **changes)

    def build_model(self) -> _energy.PhaseFieldModel:
        """Meshes the unit square and assembles the model."""
        mesh = _mesh.build_unit_square_mesh(self.n, self.tagging)
        disc = _assembly.Discretization(mesh, direction=self.direction)
        return _energy.PhaseFieldModel(disc, self.params, self.grid)

    def phi0(self, model: _energy.PhaseFieldModel) -> _np.ndarray:
        return self.initial.phase_field(model.disc.mesh)

    @staticmethod
    def _from_json(json: dict) -> ScenarioConfig:
        for section, content in json.items():
            if section not in SECTIONS:
                raise _exceptions.ConfigError(section, "unknown section")
            if not isinstance(content, dict):
                raise _exceptions.ConfigError(section, "expected a [section] table")
            for key in content:
                if key not in SECTIONS[section]:
                    raise _exceptions.ConfigError(f"{section}.{key}", "unknown key")
        boundary = dict(json.get("boundary", {}))
        direction = _direction_from_json(boundary.pop("direction", [1.0, 0.0]))
        return ScenarioConfig(
            name=str(json.get("scenario", {}).get("name", "custom")),
            n=int(json.get("mesh", {}).get("n", 8)),
            grid=_models.TimeGrid._from_json(json.get("time", {})),
            params=_models.PhysParams._from_json(json.get("material", {})),
            tagging=_models.BoundaryTagging._from_json(boundary),
            direction=direction,
            initial=InitialCondition._from_json(json.get("initial", {})),
            load=LoadSchedule._from_json(json.get("load", {})),
            solver=_models.SolverOptions._from_json(json.get("solver", {})),
            control=ControlSettings._from_json(json.get("control", {})),
            checks=CheckSettings._from_json(json.get("checks", {})),
            output_dir=str(json.get("output", {}).get("dir", "out")),
            seed=int(json.get("run", {}).get("seed", 0)),
        )


def shipped_scenarios() -> list:
    """Names of the scenarios that come with the package."""
    folder = _resources.files("fraktur") / "scenarios"
    return sorted(item.name.removesuffix(".toml") for item in folder.iterdir() if item.name.endswith(".toml"))


def _read_text(source: str) -> tuple:
    path = _pathlib.Path(source)
    if path.is_file():
        return path.read_text(encoding="utf-8"), str(path)
    if source in shipped_scenarios():
        resource = _resources.files("fraktur") / "scenarios" / f"{source}.toml"
        return resource.read_text(encoding="utf-8"), f"<shipped scenario {source}>"
    raise _exceptions.ConfigError(source, "no such file or shipped scenario")


def parse_config(text: str, origin: str = "<string>") -> ScenarioConfig:
    """Parses TOML text into a ``ScenarioConfig``.

    Raises:
        ConfigError: The text is not TOML or a value is missing, unknown or out of range
    """
    try:
        json = _tomllib.loads(text)
    except _tomllib.TOMLDecodeError as error:
        raise _exceptions.ConfigError(origin, str(error)) from error
    try:
        return ScenarioConfig._from_json(json)
    except _exceptions.ConfigError:
        raise
    except (TypeError, ValueError) as error:
        raise _exceptions.ConfigError(origin, f"bad value ({error})") from error
    except (
        _exceptions.InvalidParametersError,
        _exceptions.InvalidArgumentError,
        _exceptions.InvalidMeshError,
    ) as error:
        raise _exceptions.ConfigError(origin, str(error)) from error


def load_config(source: str) -> ScenarioConfig:
    """Loads a configuration from a path or the name of a shipped scenario."""
    text, origin = _read_text(source)
    config = parse_config(text, origin)
    _logger.info("Loaded scenario '%s' from %s", config.name, origin)
    return config


def control_problem(config: ScenarioConfig, model: _energy.PhaseFieldModel, phi0, solve) -> tuple:
    """Builds the tracking problem of a scenario.

    Args:
        config (ScenarioConfig): The scenario
        model (PhaseFieldModel): The model of the scenario
        phi0: The initial phase-field
        solve: The forward solver, called as ``solve(model, control, phi0, options)``

    Returns:
        tuple: (ControlProblemSpec, initial Control, generating Control q_dagger)
    """
    settings = config.control
    q_dagger = config.load.with_amplitude(settings.target_amplitude).control(model)
    target = solve(model, q_dagger, phi0, config.solver).state.phi
    phi_d = target if settings.target == "trajectory" else target[-1]
    q_r = config.load.with_amplitude(settings.nominal_amplitude).control(model).q
    spec = _models.ControlProblemSpec(alpha=settings.alpha, phi_d=phi_d, q_r=q_r)
    initial = config.load.with_amplitude(settings.initial_amplitude).control(model)
    return spec, initial, q_dagger
