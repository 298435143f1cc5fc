import json
import logging
import pathlib

import pytest

from rp2_widths._main import EXIT_CHECK_FAILED, EXIT_PASS, EXIT_USAGE, rp2_widths


def _run(args: list[str], logger: logging.Logger) -> int:
    return rp2_widths(args=args, logger=logger)


def test_widths(capsys: pytest.CaptureFixture, logger: logging.Logger) -> None:
    assert _run(["widths", "--p-max", "14"], logger) == EXIT_PASS
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "pass"
    assert report["config"]["p_max"] == 14
    rows = report["result"]["rows"]
    assert [row["f"] for row in rows] == [1] * 5 + [2] * 9
    assert report["result"]["jumps"] == [6]


def test_argument_errors(logger: logging.Logger) -> None:
    with pytest.raises(SystemExit) as error:
        _run(["widths", "--p-max", "0"], logger)
    assert error.value.code == EXIT_USAGE
    with pytest.raises(SystemExit):
        _run(["basis"], logger)


def test_no_command(capsys: pytest.CaptureFixture, logger: logging.Logger) -> None:
    assert _run([], logger) == EXIT_USAGE
    assert capsys.readouterr().out.startswith("usage:")


def test_count_r(capsys: pytest.CaptureFixture, logger: logging.Logger) -> None:
    assert _run(["count-r", "--d-max", "50"], logger) == EXIT_PASS
    rows = json.loads(capsys.readouterr().out)["result"]["rows"]
    assert len(rows) == 51
    assert rows[-1]["formula"] == 51 * 105
    assert all(row["match"] for row in rows)


def test_spectrum(capsys: pytest.CaptureFixture, logger: logging.Logger) -> None:
    assert _run(["spectrum", "--d", "1"], logger) == EXIT_PASS
    result = json.loads(capsys.readouterr().out)["result"]
    assert result["increasing"]
    assert len(result["rows"]) == 14
    assert all(row["within"] for row in result["rows"])
    assert len(result["entries"]) == 14
    assert all(entry["parity"] == 0 for entry in result["entries"])


def test_basis_csv(capsys: pytest.CaptureFixture, logger: logging.Logger) -> None:
    assert _run(["basis", "--d", "1", "--format", "csv"], logger) == EXIT_PASS
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "slot,label,x,y,z"
    assert lines[1] == "1,1,0,0,0"
    assert len(lines) == 7


def test_calibrate_to_file(tmp_path: pathlib.Path, logger: logging.Logger) -> None:
    out = tmp_path / "calibration.json"
    assert _run(["calibrate", "--mu", "0.01", "--out", str(out)], logger) == EXIT_PASS
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["status"] == "pass"
    assert report["result"]["residual"] <= 1e-10
    assert report["config"]["out"] == str(out)


def test_calibrate_rejects_large_mu(logger: logging.Logger) -> None:
    assert _run(["calibrate", "--mu", "0.5"], logger) == EXIT_USAGE


def test_crofton_dump_samples(
    tmp_path: pathlib.Path,
    capsys: pytest.CaptureFixture,
    logger: logging.Logger,
) -> None:
    samples = tmp_path / "samples.csv"
    args = ["crofton", "--n-samples", "500", "--dump-samples", str(samples)]
    assert _run(args, logger) == EXIT_PASS
    result = json.loads(capsys.readouterr().out)["result"]
    assert result["agrees"]
    assert result["rp2"]["length_estimate"] == pytest.approx(3.141592653589793)
    lines = samples.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "index,xi_x,xi_y,xi_z,count,redraws"
    assert len(lines) == 501


def test_trace_pencil(capsys: pytest.CaptureFixture, logger: logging.Logger) -> None:
    args = ["trace", "--probe", "pencil", "--resolution", "5"]
    assert _run(args, logger) == EXIT_PASS
    result = json.loads(capsys.readouterr().out)["result"]
    assert result["rp2_mass"] == pytest.approx(
        result["expected_sphere"] / 2.0, rel=1e-3
    )
    assert len(result["curve"]["components"]) == 2


def test_polynomial_probe_needs_matching_coefficients(logger: logging.Logger) -> None:
    args = ["trace", "--probe", "polynomial", "--d", "1", "--coeffs", "1,0,-2"]
    assert _run(args, logger) == EXIT_USAGE


def test_sweep_scan(capsys: pytest.CaptureFixture, logger: logging.Logger) -> None:
    args = ["sweep-scan", "--d", "1", "--n-params", "3", "--n-samples", "200"]
    assert _run(args, logger) == EXIT_PASS
    result = json.loads(capsys.readouterr().out)["result"]
    assert result["max_mass"] <= result["bound"] + result["slack"]


def test_bezout_audit_dump(tmp_path: pathlib.Path, logger: logging.Logger) -> None:
    samples = tmp_path / "audit" / "samples.csv"
    args = [
        "bezout-audit",
        "--d",
        "1",
        "--n-polys",
        "2",
        "--n-circles",
        "50",
        "--dump-samples",
        str(samples),
    ]
    assert _run(args, logger) == EXIT_PASS
    lines = samples.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("poly_index,index,")
    assert len(lines) == 101


@pytest.mark.parametrize("axis", ["2", "3"])
def test_axial_geodesic(
    capsys: pytest.CaptureFixture,
    logger: logging.Logger,
    axis: str,
) -> None:
    assert _run(["geodesic", "--mu", "0.01", "--axis", axis], logger) == EXIT_PASS
    result = json.loads(capsys.readouterr().out)["result"]
    assert result["run"]["closed"]
    assert result["arc_error"] <= 1e-6


def test_generic_geodesic(
    capsys: pytest.CaptureFixture,
    logger: logging.Logger,
) -> None:
    args = ["geodesic", "--mu", "0.01", "--axis", "0", "--max-arc", "5"]
    assert _run(args, logger) == EXIT_PASS
    result = json.loads(capsys.readouterr().out)["result"]
    assert result["expected_arc"] is None
    assert result["run"]["final"]["arc_length"] == pytest.approx(5.0)


def test_replay(tmp_path: pathlib.Path, logger: logging.Logger) -> None:
    out = tmp_path / "report.json"
    args = ["crofton", "--probe", "random", "--d", "2", "--n-samples", "300"]
    assert _run([*args, "--seed", "7", "--out", str(out)], logger) == EXIT_PASS
    assert _run(["replay", str(out)], logger) == EXIT_PASS
    # a report that no longer matches its own config
    report = json.loads(out.read_text(encoding="utf-8"))
    report["result"]["sphere"]["mean_count"] += 1.0
    out.write_text(json.dumps(report), encoding="utf-8")
    assert _run(["replay", str(out)], logger) == EXIT_CHECK_FAILED


def test_replay_missing_report(tmp_path: pathlib.Path, logger: logging.Logger) -> None:
    assert _run(["replay", str(tmp_path / "missing.json")], logger) == EXIT_USAGE


def test_invalid_config_file(tmp_path: pathlib.Path, logger: logging.Logger) -> None:
    path = tmp_path / "config.toml"
    path.write_text("[crofton]\nunknown = 1\n", encoding="utf-8")
    args = ["--config", str(path), "widths", "--p-max", "3"]
    assert _run(args, logger) == EXIT_USAGE


def test_config_file(
    tmp_path: pathlib.Path,
    capsys: pytest.CaptureFixture,
    logger: logging.Logger,
) -> None:
    path = tmp_path / "config.toml"
    path.write_text('[crofton]\nsampling = "fibonacci"\n', encoding="utf-8")
    args = ["--config", str(path), "crofton", "--n-samples", "100"]
    assert _run(args, logger) == EXIT_PASS
    report = json.loads(capsys.readouterr().out)
    assert report["settings"]["crofton"]["sampling"] == "fibonacci"
