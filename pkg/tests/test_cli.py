import json

import numpy as np
import pytest

from soboheat import cli


def run(argv):
    return cli.main(argv)


def test_radius_euclidean_all_ones(tmp_path):
    code = run(["radius", "--model", "euclidean", "--grid", "6x6",
                "--margin", "2.1", "--out", str(tmp_path)])
    assert code == 0
    rows = (tmp_path / "radius.csv").read_text().splitlines()
    assert rows[0].startswith("x1,x2,")
    for row in rows[1:]:
        r_eps = float(row.split(",")[3])
        assert abs(r_eps - 1.0) <= 1e-3
    summary = json.loads((tmp_path / "radius_summary.json").read_text())
    assert summary["uniform_lower_bound"] == pytest.approx(1.0, abs=1e-3)
    assert summary["schema_version"] == 1


def test_radius_unknown_model(tmp_path, capsys):
    code = run(["radius", "--model", "moebius", "--out", str(tmp_path)])
    assert code == 2
    assert "moebius" in capsys.readouterr().err


def test_exponents_spot_values(tmp_path, capsys):
    code = run(["exponents", "--m", "2", "--n", "4", "--r", "4", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "beta=3" in out and "gamma=12" in out and "delta=10" in out
    payload = json.loads((tmp_path / "exponents.json").read_text())
    assert payload["beta"] == "3"
    assert payload["k_star"] == 1


def test_exponents_functions_variant(tmp_path):
    code = run(["exponents", "--m", "2", "--n", "4", "--r", "4",
                "--variant", "functions", "--out", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "exponents.json").read_text())
    assert payload["variant"] == "functions"
    assert payload["gamma"] == "11"


def test_exponents_rejects_r_below_two(tmp_path):
    assert run(["exponents", "--m", "2", "--n", "4", "--r", "1",
                "--out", str(tmp_path)]) == 2


def test_cover_writes_certificates(tmp_path):
    code = run(["cover", "--model", "euclidean", "--k", "0", "--grid", "4x4",
                "--box", "4.3:5.7,4.3:5.7", "--cover-box", "4.5:5.5,4.5:5.5",
                "--out", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "covering.json").read_text())
    assert payload["coverage_fraction"] == 1.0
    assert payload["core_disjointness"]["violations"] == 0
    assert payload["dilated_overlap"]["holds"]
    assert payload["overlap"] <= payload["T_bound"]


def test_solve_zero_forcing_all_zero(tmp_path):
    code = run(["solve", "--model", "euclidean", "--box", "4:6,4:6",
                "--grid", "17x17", "--forcing", "zero", "--T", "0.2",
                "--alpha", "0.1", "--dt", "0.05", "--out", str(tmp_path)])
    assert code == 0
    rows = (tmp_path / "solve_timeseries.csv").read_text().splitlines()[1:]
    assert all(float(r.split(",")[1]) == 0.0 for r in rows)
    rep = json.loads((tmp_path / "solve_report.jsonl").read_text().splitlines()[0])
    assert rep["kind"] == "contraction" and rep["holds"]


def test_solve_eigen_forcing_closed_form(tmp_path):
    import math

    code = run(["solve", "--model", "flat-torus", "--L", str(2 * math.pi),
                "--forcing", "eigen", "--grid", "32x32", "--T", "0.5",
                "--alpha", "0", "--dt", "0.005", "--out", str(tmp_path)])
    assert code == 0
    rows = (tmp_path / "solve_timeseries.csv").read_text().splitlines()[1:]
    t_last, u_last, _ = (float(v) for v in rows[-1].split(","))
    # closed form: u(t) = (1 - e^{-2t})/2 sin x1 sin x2
    amp = (1 - math.exp(-2 * t_last)) / 2
    exact = amp * math.pi  # ||sin sin||_L2 = pi on the 2pi-torus
    assert u_last == pytest.approx(exact, rel=2e-2)


def test_solve_bad_dt(tmp_path):
    assert run(["solve", "--model", "euclidean", "--box", "4:6,4:6",
                "--dt", "0", "--out", str(tmp_path)]) == 2


def test_solve_estimates_reports(tmp_path):
    code = run(["solve", "--model", "euclidean", "--box", "4:6,4:6",
                "--grid", "17x17", "--T", "0.2", "--alpha", "0.1", "--dt", "0.02",
                "--estimates", "--out", str(tmp_path)])
    assert code == 0
    kinds = [json.loads(line)["kind"]
             for line in (tmp_path / "solve_report.jsonl").read_text().splitlines()]
    assert kinds == ["contraction", "local-estimate", "global-estimate"]


def test_verify_unknown_suite(tmp_path, capsys):
    assert run(["verify", "nosuchsuite", "--out", str(tmp_path)]) == 2
    assert "nosuchsuite" in capsys.readouterr().err


def test_verify_exponents_suite(tmp_path, capsys):
    code = run(["verify", "exponents", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "[PASS] criterion  1" in out and "[PASS] criterion  2" in out
    lines = (tmp_path / "verify_exponents.jsonl").read_text().splitlines()
    assert len(lines) == 2
    assert all(json.loads(line)["passed"] for line in lines)


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "euclidean", "grid": "4x4", "margin": 2.1}))
    out = tmp_path / "out"
    code = run(["radius", "--config", str(cfg), "--grid", "5x5", "--out", str(out)])
    assert code == 0
    rows = (out / "radius.csv").read_text().splitlines()
    assert len(rows) == 1 + 25  # flag overrides the config's 4x4


def test_config_parse_error(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert run(["radius", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "line" in err
