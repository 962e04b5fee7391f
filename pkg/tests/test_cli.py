import json

import pytest

from main import EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION, build_parser, join_negative_values, main
from src.pipeline import CSV_HEADER, reports_from_json


def test_negative_values_are_joined():
    argv = ["shift", "--domain", "-1,1", "--h", "0.1", "--R-grid", "-2", "--m", "0"]
    assert join_negative_values(argv) == ["shift", "--domain=-1,1", "--h", "0.1", "--R-grid=-2", "--m", "0"]
    args = build_parser().parse_args(join_negative_values(["sweep", "--domain", "-1.5,2", "--h-grid", "0.2,0.1,2"]))
    assert args.domain == "-1.5,2"
    assert args.h_grid == "0.2,0.1,2"


def test_validate_passes(capsys):
    code = main(["validate", "--potential", "x^2+x^4", "--domain", "-1,1"])
    assert code == EXIT_OK
    assert "✅" in capsys.readouterr().out


def test_validate_fails_with_exit_code_two(capsys):
    code = main(["validate", "--potential", "(x-0.1)^2", "--domain", "-1,1"])
    assert code == EXIT_VALIDATION
    captured = capsys.readouterr()
    assert "假设" in captured.out
    assert "❌" in captured.err


def test_shift_writes_outputs(tmp_path, capsys):
    json_path = tmp_path / "report.json"
    csv_path = tmp_path / "report.csv"
    code = main(["shift", "--potential", "harmonic", "--domain", "-1,1", "--m", "0", "--h", "0.1",
                 "--json", str(json_path), "--csv", str(csv_path)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "ratio" in out
    reports = reports_from_json(json_path.read_text(encoding='utf-8'))
    assert len(reports) == 1
    assert reports[0].ok
    assert json.loads(json_path.read_text(encoding='utf-8'))["command"] == "shift"
    with open(csv_path, encoding='utf-8', newline='') as f:
        assert f.readline() == ",".join(CSV_HEADER) + "\r\n"


def test_box_selects_radial_problem(capsys):
    code = main(["validate", "--potential", "x^2+x^4", "--box", "1.0"])
    assert code == EXIT_OK
    assert "区间：(0, 1.0)" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["shift", "--potential", "harmonic", "--domain", "-1,1", "--h", "0.1"],
    ["shift", "--potential", "harmonic", "--domain", "1,2", "--m", "0", "--h", "0.1"],
    ["shift", "--potential", "x^2 +", "--domain", "-1,1", "--m", "0", "--h", "0.1"],
    ["shift", "--potential", "harmonic", "--domain", "-1,1", "--box", "1", "--m", "0", "--h", "0.1"],
    ["hydrogen", "--n", "1", "--ell", "1", "--Z", "1", "--h", "1", "--R-grid", "5,6"],
    ["sweep", "--potential", "harmonic", "--domain", "-1,1", "--m", "0"],
    ["frobnicate"],
    ["shift", "--m", "zero"],
])
def test_invalid_arguments_exit_with_two(argv, capsys):
    assert main(argv) == EXIT_VALIDATION


def test_solver_failure_exits_with_three(tmp_path, capsys):
    config = tmp_path / "solver.yaml"
    config.write_text("solver:\n  max_iterations: 1\n", encoding='utf-8')
    code = main(["shift", "--config", str(config), "--potential", "quartic(1)", "--domain", "-1,1",
                 "--m", "0", "--h", "0.1"])
    assert code == EXIT_SOLVER
    assert "❌" in capsys.readouterr().err


def test_sweep_with_every_row_failing_exits_with_three(tmp_path, capsys):
    config = tmp_path / "solver.yaml"
    config.write_text("solver:\n  max_iterations: 1\n", encoding='utf-8')
    code = main(["sweep", "--config", str(config), "--potential", "quartic(1)", "--domain", "-1,1",
                 "--m", "0", "--h-grid", "0.2,0.1,2"])
    assert code == EXIT_SOLVER
    assert "failed" in capsys.readouterr().err


def test_flags_override_config_file(tmp_path, capsys):
    config = tmp_path / "experiment.yaml"
    config.write_text("potential:\n  spec: \"(x-0.1)^2\"\ndomain:\n  interval: \"-1,1\"\n", encoding='utf-8')
    assert main(["validate", "--config", str(config)]) == EXIT_VALIDATION
    assert main(["validate", "--config", str(config), "--potential", "cosh"]) == EXIT_OK


def test_oracle_command(capsys):
    code = main(["oracle", "--potential", "quartic(1)", "--domain", "-1,1", "--h", "0.1", "--count", "2"])
    assert code == EXIT_OK
    assert "relative_difference" in capsys.readouterr().out


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK


def test_potential_expr_alias(capsys):
    assert main(["validate", "--potential-expr", "cosh(x)-1", "--domain", "-1,1"]) == EXIT_OK


def test_parse_error_shows_caret(capsys):
    code = main(["validate", "--potential", "x^2 + * x", "--domain", "-1,1"])
    assert code == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "x^2 + * x\n      ^" in err


def test_sweep_command(tmp_path, capsys):
    json_path = tmp_path / "sweep.json"
    code = main(["sweep", "--potential", "harmonic", "--domain", "-1,1", "--m", "0",
                 "--h-grid", "0.2,0.1,2", "--json", str(json_path)])
    assert code == EXIT_OK
    document = json.loads(json_path.read_text(encoding='utf-8'))
    assert document["command"] == "sweep"
    assert [r["h"] for r in document["reports"]] == pytest.approx([0.2, 0.1])
    assert document["summary"]["failed_rows"] == 0
    assert document["summary"]["unresolved_rows"] == 0
    assert document["summary"]["empirical_order"] is not None


def test_hydrogen_command(tmp_path, capsys):
    csv_path = tmp_path / "hydrogen.csv"
    code = main(["hydrogen", "--n", "1", "--ell", "0", "--Z", "2", "--h", "1", "--R-grid", "6,8",
                 "--csv", str(csv_path)])
    assert code == EXIT_OK
    with open(csv_path, encoding='utf-8', newline='') as f:
        rows = f.read().split("\r\n")
    assert rows[0] == ",".join(CSV_HEADER)
    assert all(row.endswith(",ok") for row in rows[1:3])


def test_numeric_failure_exits_with_solver_code(monkeypatch, capsys):
    from src import spectra

    def broken(*args, **kwargs):
        raise ZeroDivisionError("float division by zero")

    monkeypatch.setattr(spectra, "confined_eigenvalue", broken)
    code = main(["shift", "--potential", "harmonic", "--domain", "-1,1", "--m", "0", "--h", "0.1"])
    assert code == EXIT_SOLVER
    assert "ZeroDivisionError" in capsys.readouterr().err


def test_unresolved_hydrogen_rows_are_reported(tmp_path, capsys):
    json_path = tmp_path / "hydrogen.json"
    code = main(["hydrogen", "--n", "1", "--ell", "0", "--Z", "2", "--h", "1", "--R-grid", "8,40",
                 "--json", str(json_path)])
    assert code == EXIT_OK
    document = json.loads(json_path.read_text(encoding='utf-8'))
    assert [r["status"] for r in document["reports"]] == ["ok", "unresolved"]
    assert document["summary"]["unresolved_rows"] == 1
    assert document["summary"]["failed_rows"] == 0
    assert "unresolved" in capsys.readouterr().err
