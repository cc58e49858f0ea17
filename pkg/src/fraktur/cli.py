"""The ``fraktur`` command line."""
from __future__ import annotations

import argparse as _argparse
import dataclasses as _dataclasses
import logging as _logging
import pathlib as _pathlib
import sys as _sys

import numpy as _np
import pandas as _pd

import fraktur.checks as _checks
import fraktur.config as _config
import fraktur.exceptions as _exceptions
import fraktur.optimality as _optimality
import fraktur.output as _output
import fraktur.pdas as _pdas
import fraktur.reduced as _reduced
import fraktur.regularity as _regularity
import fraktur.util as _util

_logger = _logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INAPPLICABLE = 3
EXIT_SOLVER = 4
EXIT_VERDICT = 5


@_dataclasses.dataclass
class Outcome:
    """What a subcommand reports: its exit status and the fields of the RESULT line."""

    status: int
    result: dict


def _verdict(passed: bool) -> int:
    return EXIT_OK if passed else EXIT_VERDICT


def _forward(config: _config.ScenarioConfig, model):
    control = config.load.control(model)
    return _pdas.pdas_forward_solve(model, control, config.phi0(model), config.solver)


def cmd_forward(config: _config.ScenarioConfig, model, out: _pathlib.Path) -> Outcome:
    solution = _forward(config, model)
    residual = solution.residual
    table = solution.time_table(model)
    _output.write_table(table, out / "forward.csv")
    _output.write_table(solution.iterations, out / "iterations.csv")
    _output.write_table(_pd.DataFrame([residual._to_json()]), out / "residual.csv")
    _output.write_state_vtk(model.disc.mesh, model.disc.dofmap, solution.state, solution.multiplier, out)

    for key, value in residual._to_json().items():
        print(f"{key:>14} {value:.3e}")
    passed = solution.certified
    return Outcome(
        _verdict(passed),
        {
            "residual": residual.max(),
            "r_comp_nodal": residual.r_comp_nodal,
            "phi_min": float(solution.state.phi[-1].min()),
            "newton": int(solution.newton_counts().sum()),
            "passed": passed,
        },
    )


def cmd_check(config: _config.ScenarioConfig, model, out: _pathlib.Path) -> Outcome:
    report, table = _checks.run_checks(
        model, points=config.checks.points, seed=config.seed, min_order=config.checks.min_order
    )
    _output.write_table(table, out / "checks.csv")
    _output.write_json(report, out / "checks.json")
    print(f"gradient order {report.gradient_order:.3f}")
    print(f"hessian order  {report.hessian_order:.3f}")
    print(f"a' order       {report.a_prime_order:.3f}")
    print(f"L2 bound holds {report.l2_bound_holds}")
    return Outcome(
        _verdict(report.passed),
        {
            "gradient_order": report.gradient_order,
            "hessian_order": report.hessian_order,
            "a_prime_order": report.a_prime_order,
            "l2_bound": report.l2_bound_holds,
            "passed": report.passed,
        },
    )


def cmd_counterexamples(config: _config.ScenarioConfig, model, out: _pathlib.Path) -> Outcome:
    solution = _forward(config, model)
    first = _optimality.suff1_counterexample(model, solution)
    second = _optimality.suff2_counterexample(model, solution, etas=config.checks.etas)
    samples = _optimality.sample_critical_cone(
        model, solution.state, solution.multiplier, config.checks.samples, seed=config.seed
    )
    necessary = _optimality.second_order_necessary_check(model, solution.state, solution.multiplier, samples)

    _output.write_table(first.table(), out / "suff1.csv")
    _output.write_table(second.table, out / "suff2.csv")
    _output.write_table(_pd.DataFrame([necessary._to_json()]), out / "second_order.csv")
    print(second.table.to_string(index=False))

    passed = first.refuted and second.passed and solution.certified
    ratios = second.table["ratio"]
    return Outcome(
        _verdict(passed),
        {
            "derivative": first.derivative,
            "norm_y": first.norm,
            "intervals": len(second.bump.intervals),
            "ratio_max_eta": float(ratios.iloc[0]),
            "ratio_min_eta": float(ratios.iloc[-1]),
            "decreasing": second.decreasing,
            "norm_constant": second.norm_constant,
            "norm_deviation": second.norm_deviation,
            "necessary_min": necessary.min_relative,
            "certified": solution.certified,
            "passed": passed,
        },
    )


def _recovery_error(model, control, reference) -> float:
    difference = control.q - reference.q
    boundary = model.disc.boundary_mass

    def norm_sq(q) -> float:
        return float(sum(w * row @ (boundary @ row) for w, row in zip(model.weights, q)))

    scale = norm_sq(reference.q)
    error = _np.sqrt(norm_sq(difference))
    return float(error / _np.sqrt(scale)) if scale > 0 else float(error)


def cmd_control(config: _config.ScenarioConfig, model, out: _pathlib.Path) -> Outcome:
    phi0 = config.phi0(model)
    spec, initial, q_dagger = _config.control_problem(config, model, phi0, _pdas.pdas_forward_solve)
    result = _reduced.solve_control(
        model, spec, phi0, initial, config.control.options, config.solver
    )
    _output.write_table(result.history, out / "history.csv")
    _output.write_table(_pd.DataFrame([result.residual._to_json()]), out / "upper_residual.csv")
    _output.write_control_vtk(model.disc.mesh, result.control, out)
    _output.write_state_vtk(
        model.disc.mesh, model.disc.dofmap, result.solution.state, result.solution.multiplier, out
    )
    recovery = _recovery_error(model, result.control, q_dagger)
    print(f"J = {result.cost:.6e}, |grad| = {result.gradient_norm:.3e}, recovery error = {recovery:.3e}")
    print(f"complementarity {'held' if result.complementarity_held else 'violated'}")

    if result.flagged:
        status = EXIT_SOLVER
    else:
        feasible = result.residual.feasibility() <= config.control.options.kkt_tol
        status = _verdict(feasible and result.complementarity_held)
    return Outcome(
        status,
        {
            "J": result.cost,
            "grad_norm": result.gradient_norm,
            "recovery_error": recovery,
            "r_stat": result.residual.r_stat,
            "complementarity_held": result.complementarity_held,
            "converged": result.converged,
            "flagged": result.flagged,
        },
    )


def cmd_probe(config: _config.ScenarioConfig, model, out: _pathlib.Path) -> Outcome:
    solution = _forward(config, model)
    report = _regularity.regularity_probe(model, solution.state, tol=config.checks.probe_tol)
    lines = [f"{key} = {_util.format_value(value)}" for key, value in report._to_json().items()]
    (out / "probe.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return Outcome(
        _verdict(report.north_ok and solution.certified),
        {
            "north_ok": report.north_ok,
            "infsup_A": report.infsup_A,
            "infsup_B": report.infsup_B,
            "zero_strain": report.zero_strain,
            "certified": solution.certified,
        },
    )


COMMANDS = {
    "forward": cmd_forward,
    "check": cmd_check,
    "counterexamples": cmd_counterexamples,
    "control": cmd_control,
    "probe": cmd_probe,
}


def build_parser() -> _argparse.ArgumentParser:
    parser = _argparse.ArgumentParser(
        prog="fraktur", description="Space-time phase-field fracture with crack irreversibility."
    )
    parser.add_argument("command", choices=tuple(COMMANDS))
    parser.add_argument("--config", required=True, help="A TOML file or a shipped scenario name")
    parser.add_argument("--out", help="Output directory, overrides [output] dir")
    parser.add_argument("--seed", type=int, help="Seed of all random draws, overrides [run] seed")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="Logging threshold on stderr",
    )
    return parser


def run(args: _argparse.Namespace) -> Outcome:
    """Loads the configuration and runs one subcommand, mapping errors onto exit codes."""
    try:
        config = _config.load_config(args.config)
        if args.seed is not None:
            config = config.replace(seed=args.seed)
        model = config.build_model()
    except _exceptions.ConfigError as error:
        print(f"configuration error: {error}", file=_sys.stderr)
        return Outcome(EXIT_CONFIG, {"status": "config_error", "field": str(error.field).replace(" ", "_")})
    except (
        _exceptions.InvalidMeshError,
        _exceptions.InvalidParametersError,
        _exceptions.InvalidArgumentError,
    ) as error:
        print(f"configuration error: {error}", file=_sys.stderr)
        return Outcome(EXIT_CONFIG, {"status": "config_error"})

    out = _output.prepare_directory(args.out or _pathlib.Path(config.output_dir) / config.name / args.command)
    _output.write_json(config, out / "config.json")
    _output.write_mesh_dump(model.disc.mesh, out)
    try:
        return COMMANDS[args.command](config, model, out)
    except _exceptions.InapplicableCaseError as error:
        print(f"not applicable: {error}", file=_sys.stderr)
        return Outcome(EXIT_INAPPLICABLE, {"status": "inapplicable"})
    except _exceptions.InconclusiveError as error:
        print(f"inconclusive: {error}", file=_sys.stderr)
        return Outcome(EXIT_VERDICT, {"status": "inconclusive"})
    except _exceptions.SolverFailureError as error:
        print(f"solver failure: {error}", file=_sys.stderr)
        return Outcome(EXIT_SOLVER, {"status": "solver_failure", "step": error.step})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _logging.basicConfig(
        level=getattr(_logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
        stream=_sys.stderr,
    )
    outcome = run(args)
    result = {"command": args.command, "exit": outcome.status}
    result.update(outcome.result)
    print(_util.result_line(**result))
    return outcome.status
