import json

import numpy as np
import pytest

from surfride import __version__, reference_config_document
from surfride.cli import main
from surfride.core import horner


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "ship.json"
    path.write_text(json.dumps(reference_config_document()))
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out) if out else None, err


def test_threshold_quadratic(capsys, cfg_path):
    code, doc, _ = run_json(capsys, "threshold", "-c", cfg_path)
    assert code == 0
    assert doc["metadata"]["version"] == __version__
    assert len(doc["metadata"]["config_sha256"]) == 64
    assert doc["payload"]["method"] == "closed-form"
    assert doc["payload"]["n_cr"] > 0
    assert "validity" in doc["payload"] and "uniqueness" in doc["payload"]


def test_threshold_cubic_uses_bisection(capsys, cfg_path):
    code, doc, _ = run_json(
        capsys, "threshold", "-c", cfg_path, "--set", "propeller.kt_coefficients=[0.32,-0.24,-0.1,-0.01]"
    )
    assert code == 0 and doc["payload"]["method"] == "bisection"


def test_steepness_015_validity_flags(capsys, cfg_path):
    code, doc, _ = run_json(capsys, "threshold", "-c", cfg_path, "--set", "wave.height=5.175", "--mu", "1")
    val = doc["payload"]["validity"]
    assert val["steepness"] == pytest.approx(0.15)
    assert val["steepness_u_positive"] is False
    assert val["steepness_mean_speed"] is True


def test_report_is_reproducible(capsys, cfg_path):
    _, a, _ = run(capsys, "threshold", "-c", cfg_path)
    _, b, _ = run(capsys, "threshold", "-c", cfg_path)
    assert a == b


def test_rtcond_failure_exits_3(capsys, cfg_path):
    code, doc, _ = run_json(capsys, "threshold", "-c", cfg_path, "--set", "resistance.coefficients=[0,-5000,-800]")
    assert code == 3
    assert doc["payload"]["n_cr"] is None and doc["payload"]["rtcond_satisfied"] is False


def test_validation_error_exits_2(capsys, cfg_path):
    code, out, err = run(capsys, "threshold", "-c", cfg_path, "--set", "ship.mass=-3")
    assert code == 2 and "ship" in err and out == ""


def test_missing_resistance_fails_before_oracle(capsys, tmp_path):
    doc = reference_config_document()
    del doc["resistance"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out, err = run(capsys, "oracle", "-c", path)
    assert code == 2 and "resistance" in err


def parse_table(text):
    lines = text.splitlines()
    meta = json.loads(lines[0][2:])
    cols = lines[1][2:].split("\t")
    rows = [dict(zip(cols, line.split("\t"))) for line in lines[2:]]
    return meta, rows


def test_sweep_n_crosses_zero_once(capsys, cfg_path):
    code, out, _ = run(capsys, "sweep", "-c", cfg_path, "--parameter", "n", "--start", 0, "--stop", 10, "--count", 41)
    assert code == 0
    meta, rows = parse_table(out)
    assert meta["parameter"] == "n"
    res = np.array([float(r["residual"]) for r in rows])
    assert np.count_nonzero(np.diff(np.sign(res)) != 0) == 1
    assert [int(r["index"]) for r in rows] == list(range(41))


def test_sweep_steepness_flag_flips(capsys, cfg_path):
    code, out, _ = run(
        capsys, "sweep", "-c", cfg_path, "--mu", "1", "--parameter", "steepness",
        "--start", 0.07, "--stop", 0.1, "--count", 7, "--jobs", 2,
    )
    _, rows = parse_table(out)
    flags = [(float(r["value"]), r["steepness_u_positive"]) for r in rows]
    for value, flag in flags:
        assert flag == ("1" if value < 1 / 11.42 else "0")
    assert {"1", "0"} == {f for _, f in flags}
    assert all(r["status"] == "ok" for r in rows)


def test_sweep_records_failures(capsys, cfg_path):
    code, out, _ = run(
        capsys, "sweep", "-c", cfg_path, "--set", "resistance.coefficients=[0,-5000,-800]",
        "--parameter", "steepness", "--start", 0.02, "--stop", 0.03, "--count", 2,
    )
    _, rows = parse_table(out)
    assert code == 0 and [r["status"] for r in rows] == ["no-threshold"] * 2


def test_sweep_empty_range(capsys, cfg_path):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "-c", str(cfg_path), "--parameter", "n", "--start", "1", "--stop", "1", "--count", "3"])
    assert exc.value.code == 2


def test_fit_kt(capsys, tmp_path):
    J = np.linspace(0, 1.1, 12)
    path = tmp_path / "kt.txt"
    np.savetxt(path, np.c_[J, horner((0.32, -0.24, -0.10), J)], header="J KT")
    code, doc, _ = run_json(capsys, "fit", path, "--kind", "kt", "--degree", 2)
    assert code == 0
    assert doc["payload"]["coefficients"][2] < 0
    assert doc["payload"]["sign_check"]["kappa_2_negative"]


def test_fit_kt_bad_sign_is_error(capsys, tmp_path):
    J = np.linspace(0, 1.1, 12)
    path = tmp_path / "kt.txt"
    np.savetxt(path, np.c_[J, horner((-0.02, 0.1, -0.10), J)])
    code, out, err = run(capsys, "fit", path, "--kind", "kt")
    assert code == 2 and "J = 0" in err


def test_fit_resistance_exact(capsys, tmp_path):
    u = np.linspace(1, 10, 25)
    coeffs = (0.0, 500.0, 800.0, 0.0, 0.0, 2.5)
    path = tmp_path / "r.txt"
    np.savetxt(path, np.c_[u, horner(coeffs, u)])
    code, doc, _ = run_json(capsys, "fit", path, "--kind", "resistance")
    assert np.allclose(doc["payload"]["coefficients"], coeffs, atol=1e-6)


def test_validate_and_env_search(capsys, cfg_path, monkeypatch, tmp_path):
    monkeypatch.setenv("SURFRIDE_CONFIG_PATH", str(cfg_path.parent))
    monkeypatch.chdir(tmp_path.parent)
    code, doc, _ = run_json(capsys, "validate", "-c", cfg_path.name)
    assert code == 0 and doc["payload"]["valid"]


def test_fk_force_requires_hull(capsys, cfg_path):
    code, _, err = run(capsys, "fk-force", "-c", cfg_path)
    assert code == 2 and "hull" in err


def test_fk_force(capsys, tmp_path):
    doc = reference_config_document()
    doc["hull"] = {"stations": [[-20, 0, 2], [0, 15, 2.5], [20, 0, 2]],
                   "block_coefficient": 0.6, "midship_coefficient": 0.9}
    doc["wave"]["force_amplitude"] = "compute"
    doc["wave"]["mu"] = "sgisc"
    path = tmp_path / "hull.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run_json(capsys, "fk-force", "-c", path)
    assert code == 0
    assert out["payload"]["force"] > 0 and out["payload"]["mu"] == pytest.approx(0.706)


def test_oracle_command(capsys, cfg_path, tmp_path):
    traj = tmp_path / "traj.txt"
    code, doc, _ = run_json(
        capsys, "oracle", "-c", cfg_path, "--set", "oracle.positions=4", "--set", "oracle.speeds=3",
        "--set", "oracle.tolerance=0.01", "--trajectory", traj,
    )
    assert code == 0
    p = doc["payload"]
    assert p["relative_difference"] < 0.05
    assert p["oracle"]["grid_size"] == 12
    assert np.loadtxt(traj).shape[1] == 4


def test_oracle_failure_exits_4(capsys, cfg_path):
    code, doc, _ = run_json(capsys, "oracle", "-c", cfg_path, "--set", "oracle.horizon=1.0",
                            "--set", "oracle.positions=4", "--set", "oracle.speeds=3")
    assert code == 4 and "error" in doc["payload"]["oracle"]
