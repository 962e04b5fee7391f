import json
import math

import numpy as np
import pytest

from src import __version__, spectra
from src.asymptotics import ShiftPrediction
from src.exceptions import ConvergenceError, NumericalFailure, ValidationError
from src.pipeline import (
    CSV_HEADER,
    STATUS_OK,
    STATUS_UNRESOLVED,
    ShiftPipeline,
    ShiftReport,
    SolverSettings,
    compare_shift,
    empirical_order,
    geometric_grid,
    reports_from_json,
    reports_to_csv,
    reports_to_json,
    shift_status,
)
from src.potentials import ConfinementDomain, expression_potential
from src.shooting import FROZEN, ModeSpec


@pytest.fixture
def pipeline():
    return ShiftPipeline(show_progress=False)


def _report(h=0.1, **kwargs):
    return ShiftReport("harmonic", "line", (-1.0, 1.0), 0, None, h, **kwargs)


def test_run_case_harmonic(pipeline, harmonic, unit_interval):
    report = pipeline.run_case(harmonic, unit_interval, ModeSpec(0, 0.1))
    assert report.ok
    assert report.lambda0 == pytest.approx(0.1)
    assert report.lambda_confined > report.lambda0
    assert report.numeric_shift == pytest.approx(report.lambda_confined - report.lambda0)
    assert 0.5 < report.ratio < 1.5
    assert report.domain == (-1.0, 1.0)
    assert report.iterations >= 1


def test_run_case_with_oracle(pipeline, harmonic, unit_interval):
    report = pipeline.run_case(harmonic, unit_interval, ModeSpec(1, 0.1), oracle=True)
    assert report.oracle_value == pytest.approx(report.lambda_confined, rel=1e-7)


def test_run_case_rejects_invalid_potential(pipeline, unit_interval):
    with pytest.raises(ValidationError, match="假设"):
        pipeline.run_case(expression_potential("(x-0.1)^2"), unit_interval, ModeSpec(0, 0.1))


def test_sweep_keeps_order_and_records_failures(pipeline, harmonic, unit_interval, monkeypatch):
    def fake_run_case(p, domain, mode, oracle=False, grid_n=2000):
        if mode.h == 0.1:
            raise ConvergenceError("不收敛", 50)
        return _report(mode.h, ratio=1.0 + mode.h)

    monkeypatch.setattr(pipeline, "run_case", fake_run_case)
    grid = [0.2, 0.1, 0.05]
    for jobs in (1, 2):
        reports = pipeline.run_sweep(harmonic, unit_interval, ModeSpec(0, 0.2), grid, jobs=jobs)
        assert [r.h for r in reports] == grid
        assert [r.ok for r in reports] == [True, False, True]
        assert reports[1].status.startswith("failed: ")
        assert "不收敛" in reports[1].status
        assert reports[1].ratio is None


def test_sweep_argument_checks(pipeline, harmonic, unit_interval):
    with pytest.raises(ValidationError):
        pipeline.run_sweep(harmonic, unit_interval, ModeSpec(0, 0.1), [])
    with pytest.raises(ValidationError):
        pipeline.run_sweep(harmonic, unit_interval, ModeSpec(0, 0.1), [0.1], jobs=0)


def test_hydrogen_series(pipeline):
    reports = pipeline.run_hydrogen(1, 0, 2.0, 1.0, [6.0, 8.0])
    assert [r.domain[1] for r in reports] == [6.0, 8.0]
    assert all(r.ok for r in reports)
    assert reports[0].potential == "hydrogen(n=1, ell=0, Z=2.0)"
    assert reports[1].numeric_shift < reports[0].numeric_shift
    assert abs(reports[1].ratio - 1.0) < abs(reports[0].ratio - 1.0)


def test_hydrogen_unknown_route(pipeline):
    from src.spectra import HydrogenSpec

    with pytest.raises(ValidationError):
        pipeline.run_hydrogen_point(HydrogenSpec(1, 0, 2.0, 1.0, 6.0), route="spherical")


def test_oracle_table(pipeline, quartic, unit_interval):
    rows = pipeline.oracle_table(quartic, unit_interval, ModeSpec(0, 0.1), count=2)
    assert [row["m"] for row in rows] == [0, 1]
    assert all(row["relative_difference"] < 1e-7 for row in rows)


def test_compare_shift_in_log_space():
    prediction = ShiftPrediction(0.0, -800.0, 800.0, 0.5)
    comparison = compare_shift(math.exp(-5.0), prediction)
    assert comparison["predicted_shift"] == 0.0
    assert comparison["ratio"] is None
    prediction = ShiftPrediction(math.exp(-5.0), -5.0 - math.log(2.0), 5.0, 0.5)
    assert compare_shift(math.exp(-5.0), prediction)["ratio"] == pytest.approx(2.0)


def test_non_positive_numeric_shift_is_logged(caplog):
    prediction = ShiftPrediction(1e-10, math.log(1e-10), 23.0, 0.5)
    with caplog.at_level("WARNING"):
        comparison = compare_shift(-1e-14, prediction)
    assert comparison["ratio"] is None
    assert comparison["log_numeric"] is None
    assert "不为正" in caplog.text


def test_empirical_order():
    hs = [0.2, 0.1, 0.05, 0.025]
    assert empirical_order(hs, [1.0 + 0.5 * h * h for h in hs]) == pytest.approx(2.0, rel=1e-9)
    assert empirical_order(hs, [None, None, 1.1, None]) is None


def test_geometric_grid():
    assert geometric_grid(0.2, 0.05, 3) == pytest.approx([0.2, 0.1, 0.05])
    assert geometric_grid(0.3, 0.1, 1) == [0.3]
    with pytest.raises(ValidationError):
        geometric_grid(0.0, 0.1, 3)


def test_csv_header_and_rows():
    text = reports_to_csv([_report(lambda0=0.1, status="failed: 不收敛, 重试")])
    lines = text.split("\r\n")
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[0] == "h,lambda0,lambda_confined,numeric_shift,predicted_shift,ratio,log_numeric,log_predicted,status"
    assert lines[1] == '0.1,0.1,,,,,,,"failed: 不收敛, 重试"'
    assert text.endswith("\r\n")


def test_json_round_trip():
    reports = [
        _report(lambda0=0.1, lambda_confined=0.10001, numeric_shift=1e-5, log_numeric=math.log(1e-5),
                predicted_shift=1.1e-5, log_predicted=math.log(1.1e-5), ratio=1 / 1.1, iterations=4, steps=900),
        ShiftReport("x^2 + x^4", "radial", (0.0, 1.0), 1, 0.5, 0.05, status="failed: 盒子扩张"),
    ]
    text = reports_to_json(reports, "sweep", {"empirical_order": 1.02})
    document = json.loads(text)
    assert document["version"] == __version__
    assert document["command"] == "sweep"
    assert document["summary"] == {"empirical_order": 1.02}
    assert document["reports"][0]["domain"] == [-1.0, 1.0]
    assert reports_from_json(text) == reports
    assert reports[0].status == STATUS_OK


def test_json_rejects_unknown_fields():
    data = _report().to_dict()
    data["colour"] = "blue"
    with pytest.raises(ValidationError):
        ShiftReport.from_dict(data)
    with pytest.raises(ValidationError):
        reports_from_json('{"version": "1.0.0"}')


def test_solver_settings_from_config():
    settings = SolverSettings.from_config({"newton": FROZEN, "integrate_tol": None, "max_iterations": 7})
    assert settings.newton == FROZEN
    assert settings.max_iterations == 7
    assert settings.integrate_tol == SolverSettings().integrate_tol
    assert SolverSettings.from_config(None) == SolverSettings()


def test_domain_endpoints_are_reported(pipeline, harmonic):
    domain = ConfinementDomain.interval(-1.0, 1.2)
    report = pipeline.run_case(harmonic, domain, ModeSpec(0, 0.1))
    assert report.domain == (-1.0, 1.2)


def test_shift_status_flags_noise_level_shifts(caplog):
    assert shift_status(1e-9, 0.1, 0.1) == STATUS_OK
    with caplog.at_level("WARNING"):
        assert shift_status(5e-14, 0.1, 0.1) == STATUS_UNRESOLVED
        assert shift_status(-1e-15, -1.0, 1.0) == STATUS_UNRESOLVED
    assert "unresolved" in caplog.text
    assert shift_status(5e-14, 0.1, 0.1, resolution=1e-14) == STATUS_OK


def test_hydrogen_beyond_resolution_is_unresolved(pipeline):
    reports = pipeline.run_hydrogen(1, 0, 2.0, 1.0, [14.0, 30.0])
    assert [r.status for r in reports] == [STATUS_OK, STATUS_UNRESOLVED]
    assert not reports[1].ok
    assert not reports[1].failed


def test_numeric_failures_become_solver_errors(pipeline, harmonic, unit_interval, monkeypatch):
    def broken(*args, **kwargs):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setattr(spectra, "confined_eigenvalue", broken)
    with pytest.raises(NumericalFailure, match="LinAlgError"):
        pipeline.run_case(harmonic, unit_interval, ModeSpec(0, 0.1))
    reports = pipeline.run_sweep(harmonic, unit_interval, ModeSpec(0, 0.1), [0.1, 0.05])
    assert all(r.failed for r in reports)
    assert "LinAlgError" in reports[0].status
