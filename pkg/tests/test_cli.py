"""Command line surface, outputs and exit codes."""
import os
import simplejson as json
import pandas as pd
import pytest
from pumpwood_biharmonic.cli import main
from pumpwood_biharmonic.commands import LabCommand
from pumpwood_biharmonic.config import RunConfig
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicConvergenceException)


def _read(path):
    with open(path, "r", encoding="utf-8") as file:
        return json.load(file)


def test_low_dimension_exit_code(tmp_path, capsys):
    out = str(tmp_path / "out")
    assert main(["constants", "--dim", "4", "--out", out]) == 2
    record = json.loads(capsys.readouterr().out)
    assert record["type"] == "PumpwoodBiharmonicPreconditionException"
    assert "N >= 5 required" in record["message"]
    assert _read(os.path.join(out, "error.json")) == record


def test_usage_errors(tmp_path):
    assert main(["integrate"]) == 2
    assert main(["scaling", "--nodes", "ten"]) == 2
    assert main([
        "scaling", "--eps-count", "0", "--out", str(tmp_path)]) == 2


def test_single_eps_expansion_rejected(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["verify-expansion", "--eps", "0.1", "--out", out]) == 2
    record = json.loads(capsys.readouterr().out)
    assert record["payload"]["eps"] == [0.1]


def test_constants_output(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["constants", "--dim", "5", "--out", out]) == 0
    document = _read(os.path.join(out, "constants.json"))
    assert document["sigma"] == 0.75
    assert document["H00"] == pytest.approx(1.2, abs=1e-10)
    assert document["bN"] == pytest.approx(6.0 * 3.141592653589793 ** 2)
    assert document["kN_flux_relative_error"] < 1e-2
    assert document["config"]["dim"] == 5
    assert document["d_star"] > 0.0
    assert set(document["self_convergence"]) == {"aN", "cN", "kN"}
    assert json.loads(capsys.readouterr().out) == document


def test_constants_deterministic(tmp_path):
    out = str(tmp_path)
    path = os.path.join(out, "constants.json")
    assert main(["constants", "--dim", "6", "--out", out]) == 0
    with open(path, "rb") as file:
        first = file.read()
    assert main(["constants", "--dim", "6", "--out", out]) == 0
    with open(path, "rb") as file:
        assert file.read() == first


def test_identities_output(tmp_path):
    out = str(tmp_path)
    assert main([
        "identities", "--dim", "5", "--out", out, "--threads", "2"]) == 0
    document = _read(os.path.join(out, "identities.json"))
    assert len(document["cases"]) == 4
    assert document["passed"]
    for case in document["cases"]:
        assert case["hole_term_relative_error"] < 1e-3


@pytest.mark.slow
def test_psi_output(tmp_path):
    out = str(tmp_path)
    assert main(["psi", "--dim", "6", "--out", out]) == 0
    document = _read(os.path.join(out, "psi.json"))
    assert document["critical_point"]["saddle"]
    assert document["derivative_sign_changes"] == 1
    assert document["critical_point"]["gradient_residual"] <= 1e-12
    sweep = document["energy_check_by_eps"]
    assert [c["eps"] for c in sweep] == [1e-2, 1e-3, 1e-4]
    assert all("deviation" in c for c in sweep)
    assert document["energy_check_numeric"]["projection"] == "numeric"


def test_command_error_record(tmp_path, capsys):
    class FailingCommand(LabCommand):
        name = "failing"

        def execute(self) -> int:
            raise PumpwoodBiharmonicConvergenceException(
                message="Newton stopped at {residual}",
                payload={"residual": 1.0})

    config = RunConfig.load(overrides={"output_dir": str(tmp_path)})
    assert FailingCommand(config).run() == 1
    record = _read(os.path.join(str(tmp_path), "error.json"))
    assert record["type"] == "PumpwoodBiharmonicConvergenceException"
    assert record["payload"] == {"residual": 1.0}
    assert json.loads(capsys.readouterr().out) == record


@pytest.mark.slow
def test_scaling_study_dimension_five(tmp_path):
    out = str(tmp_path)
    assert main(["scaling", "--dim", "5", "--out", out]) == 0
    table = pd.read_csv(os.path.join(out, "scaling.csv"))
    assert list(table.columns) == [
        "eps", "mu", "d_eps", "newton_iters", "residual", "energy"]
    assert len(table) == 16
    assert (table["mu"].diff().dropna() < 0.0).all()
    summary = _read(os.path.join(out, "scaling_summary.json"))
    assert summary["sigma"] == 0.75
    assert summary["failure_index"] is None
    assert summary["passed"]
    assert summary["eps_smallest"] == pytest.approx(0.2 * 0.7 ** 15)
    assert summary["d_star_passed"]
    assert summary["d_star_relative_error"] <= 0.25


@pytest.mark.slow
def test_scaling_outputs_deterministic(tmp_path):
    out = str(tmp_path)
    argv = ["scaling", "--dim", "5", "--eps-count", "3", "--out", out]
    contents = []
    for _ in range(2):
        main(argv)
        files = {}
        for name in ("scaling.csv", "scaling_summary.json"):
            with open(os.path.join(out, name), "rb") as file:
                files[name] = file.read()
        contents.append(files)
    assert contents[0] == contents[1]


@pytest.mark.slow
def test_verify_expansion_report(tmp_path):
    out = str(tmp_path)
    assert main(["verify-expansion", "--dim", "5", "--out", out]) == 0
    document = _read(os.path.join(out, "verify_expansion.json"))
    assert document["region"] == "core"
    assert len(document["cases"]) == 3
    verdicts = document["verdicts"]
    assert verdicts["bounded"]
    assert verdicts["sup_ratio_R_slope"] >= -0.1
    assert verdicts["sup_ratio_dR_slope"] >= -0.1
    assert verdicts["E_starstar_preasymptotic"]
    assert verdicts["E_starstar_slope"] < verdicts["kappa"]


@pytest.mark.slow
def test_verify_expansion_explicit_eps(tmp_path):
    out = str(tmp_path)
    code = main([
        "verify-expansion", "--dim", "5", "--eps", "0.1", "0.0316", "0.01",
        "--out", out, "--threads", "3"])
    assert code == 0
    document = _read(os.path.join(out, "verify_expansion.json"))
    assert [c["eps"] for c in document["cases"]] == [0.1, 0.0316, 0.01]
    assert all(c["region"] == "core" for c in document["cases"])
