"""Tests for the ``fraktur`` command line."""
import re
from importlib import resources

import pandas as pd
import pytest

from fraktur import cli

TINY = """
[scenario]
name = "tiny"

[mesh]
n = 2

[time]
n_steps = 3

[load]
schedule = "{schedule}"
amplitude = 1.0

[checks]
points = 2
samples = 6
"""


@pytest.fixture
def scenario(tmp_path):
    def write(schedule="ramp"):
        path = tmp_path / f"{schedule}.toml"
        path.write_text(TINY.format(schedule=schedule), encoding="utf-8")
        return str(path)

    return write


def _run(capsys, *argv):
    status = cli.main(list(argv))
    lines = capsys.readouterr().out.strip().splitlines()
    return status, lines


def _fields(line):
    assert line.startswith("RESULT ")
    return dict(item.split("=", 1) for item in line.split()[1:])


class TestCommands:
    def test_forward(self, scenario, tmp_path, capsys):
        out = tmp_path / "forward"
        status, lines = _run(capsys, "forward", "--config", scenario(), "--out", str(out))
        assert status == cli.EXIT_OK
        result = _fields(lines[-1])
        assert result["command"] == "forward"
        assert result["exit"] == "0"
        assert result["passed"] == "true"
        table = pd.read_csv(out / "forward.csv")
        assert len(table) == 4
        assert (table["phi_min"].diff().dropna() <= 1e-12).all()
        for name in ("iterations.csv", "residual.csv", "config.json", "nodes.txt", "elements.txt", "fields_0003.vtk"):
            assert (out / name).is_file()

    def test_check(self, scenario, tmp_path, capsys):
        out = tmp_path / "check"
        status, lines = _run(capsys, "check", "--config", scenario(), "--out", str(out), "--seed", "4")
        assert status == cli.EXIT_OK
        assert float(_fields(lines[-1])["gradient_order"]) >= 1.9
        assert set(pd.read_csv(out / "checks.csv")["check"]) == {"gradient", "hessian", "a_prime"}

    def test_check_is_deterministic(self, scenario, tmp_path, capsys):
        path = scenario()
        _run(capsys, "check", "--config", path, "--out", str(tmp_path / "a"))
        _run(capsys, "check", "--config", path, "--out", str(tmp_path / "b"))
        first = (tmp_path / "a" / "checks.csv").read_bytes()
        assert first == (tmp_path / "b" / "checks.csv").read_bytes()

    def test_probe(self, scenario, tmp_path, capsys):
        out = tmp_path / "probe"
        status, lines = _run(capsys, "probe", "--config", scenario(), "--out", str(out))
        assert status == cli.EXIT_OK
        assert _fields(lines[-1])["north_ok"] == "true"
        assert "north_ok = true" in (out / "probe.txt").read_text(encoding="utf-8")

    def test_unloaded_probe_fails_verdict(self, scenario, tmp_path, capsys):
        status, lines = _run(capsys, "probe", "--config", scenario("zero"), "--out", str(tmp_path / "probe"))
        assert status == cli.EXIT_VERDICT
        assert _fields(lines[-1])["zero_strain"] == "true"

    def test_unloaded_counterexamples_are_inapplicable(self, scenario, tmp_path, capsys):
        status, lines = _run(
            capsys, "counterexamples", "--config", scenario("zero"), "--out", str(tmp_path / "ce")
        )
        assert status == cli.EXIT_INAPPLICABLE
        assert _fields(lines[-1])["status"] == "inapplicable"


SHRINK = {r"^n = \d+$": "n = 4", r"^n_steps = \d+$": "n_steps = 6", r"^samples = \d+$": "samples = 12"}


@pytest.fixture
def shipped(tmp_path):
    def write(name):
        text = (resources.files("fraktur") / "scenarios" / f"{name}.toml").read_text(encoding="utf-8")
        for pattern, replacement in SHRINK.items():
            text = re.sub(pattern, replacement, text, flags=re.MULTILINE)
        path = tmp_path / f"{name}.toml"
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


class TestShippedScenarios:
    @pytest.mark.parametrize("name", ["zero-force", "pull", "precracked"])
    def test_forward_is_certified(self, shipped, tmp_path, capsys, name):
        status, lines = _run(capsys, "forward", "--config", shipped(name), "--out", str(tmp_path / "out"))
        result = _fields(lines[-1])
        assert status == cli.EXIT_OK
        assert result["passed"] == "true"
        assert float(result["residual"]) <= 1e-8
        assert float(result["r_comp_nodal"]) <= 1e-10

    @pytest.mark.parametrize("name", ["pull", "precracked"])
    def test_counterexamples_on_crack_growth(self, shipped, tmp_path, capsys, name):
        out = tmp_path / "out"
        status, lines = _run(capsys, "counterexamples", "--config", shipped(name), "--out", str(out))
        result = _fields(lines[-1])
        assert status == cli.EXIT_OK
        assert abs(float(result["derivative"])) <= 1e-8
        assert float(result["norm_y"]) >= 1e-3
        assert int(result["intervals"]) >= 2
        assert float(result["ratio_min_eta"]) <= 0.5 * float(result["ratio_max_eta"])
        assert float(result["norm_deviation"]) <= 0.1
        assert float(result["necessary_min"]) >= -1e-8
        assert result["certified"] == "true"
        table = pd.read_csv(out / "suff2.csv")
        assert len(table) >= 2
        assert table["member"].all()

    def test_counterexamples_without_growth(self, shipped, tmp_path, capsys):
        status, lines = _run(capsys, "counterexamples", "--config", shipped("zero-force"), "--out", str(tmp_path / "out"))
        assert status == cli.EXIT_INAPPLICABLE
        assert _fields(lines[-1])["status"] == "inapplicable"

    @pytest.mark.parametrize("name", ["pull", "precracked"])
    def test_probe_on_loaded_scenarios(self, shipped, tmp_path, capsys, name):
        status, lines = _run(capsys, "probe", "--config", shipped(name), "--out", str(tmp_path / "out"))
        result = _fields(lines[-1])
        assert status == cli.EXIT_OK
        assert result["north_ok"] == "true"
        assert result["zero_strain"] == "false"

    def test_probe_without_load(self, shipped, tmp_path, capsys):
        status, lines = _run(capsys, "probe", "--config", shipped("zero-force"), "--out", str(tmp_path / "out"))
        result = _fields(lines[-1])
        assert status == cli.EXIT_VERDICT
        assert result["north_ok"] == "false"
        assert result["zero_strain"] == "true"


class TestFailures:
    def test_malformed_config(self, tmp_path, capsys):
        path = tmp_path / "broken.toml"
        path.write_text("[mesh\n", encoding="utf-8")
        status, lines = _run(capsys, "forward", "--config", str(path), "--out", str(tmp_path / "x"))
        assert status == cli.EXIT_CONFIG
        assert _fields(lines[-1])["status"] == "config_error"
        assert not (tmp_path / "x").exists()

    def test_unknown_key(self, tmp_path, capsys):
        path = tmp_path / "extra.toml"
        path.write_text("[mesh]\nsize = 2\n", encoding="utf-8")
        status, lines = _run(capsys, "forward", "--config", str(path))
        assert status == cli.EXIT_CONFIG
        assert _fields(lines[-1])["field"] == "mesh.size"

    def test_solver_failure(self, tmp_path, capsys):
        path = tmp_path / "stiff.toml"
        path.write_text(TINY.format(schedule="ramp") + "\n[solver]\nmax_iter = 1\ntol = 1e-14\n", encoding="utf-8")
        status, lines = _run(capsys, "forward", "--config", str(path), "--out", str(tmp_path / "x"))
        assert status == cli.EXIT_SOLVER
        assert _fields(lines[-1])["step"] == "1"

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            cli.main(["fly", "--config", "pull"])

    def test_single_eta_is_inconclusive(self, tmp_path, capsys):
        path = tmp_path / "one-eta.toml"
        path.write_text(TINY.format(schedule="ramp") + "etas = [1]\n", encoding="utf-8")
        status, lines = _run(capsys, "counterexamples", "--config", str(path), "--out", str(tmp_path / "x"))
        assert status == cli.EXIT_VERDICT
        assert _fields(lines[-1])["status"] == "inconclusive"
