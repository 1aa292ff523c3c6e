import json
import math
import subprocess
import sys

import pytest

from isorev.cli import main

BORELL = '{"h": {"kind": "hyperbolic"}, "f": {"kind": "exp_power", "params": {"a": 1.0, "p": 2.0}}}'
EUCLID = '{"h": {"kind": "euclidean"}, "f": {"kind": "constant"}}'
GAUSS = '{"h": {"kind": "euclidean"}, "f": {"kind": "exp_power", "params": {"a": 1.0, "p": 2.0}}}'
GAUSS_G1 = ('{"h": {"kind": "euclidean"}, "f": {"kind": "exp_power", '
            '"params": {"a": 1.0, "p": 2.0}}, "g": {"kind": "constant"}}')
LINEAR = ('{"h": {"kind": "euclidean"}, "f": {"kind": "series", "params": {"terms": ['
          '{"coeff": 1.0, "base": {"kind": "power", "exponent": 0.0}}, '
          '{"coeff": 1.0, "base": {"kind": "power", "exponent": 1.0}}]}}}')
SLOW_G = ('{"h": {"kind": "euclidean"}, "f": {"kind": "series", "params": {"terms": ['
          '{"coeff": 1.0, "base": {"kind": "power", "exponent": 0.0}}, '
          '{"coeff": 0.01, "base": {"kind": "power", "exponent": 1.0}}]}}}')


def test_thresholds_borell(tmp_path, capsys):
    code = main(["thresholds", "--surface", BORELL, "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "V0_ball_area = 31.098" in out
    assert (tmp_path / "thresholds.json").exists()
    assert (tmp_path / "thresholds.png").exists()
    rec = json.loads((tmp_path / "thresholds.json").read_text())
    assert set(rec) == {"r0", "M", "r_star", "V0", "V0_ball_area", "minimizer_r"}
    assert rec["r0"] == pytest.approx(math.asinh(1.0 / math.sqrt(2.0)), abs=1e-9)


def test_thresholds_flat_plane_exits_2(tmp_path, capsys):
    code = main(["thresholds", "--surface", EUCLID, "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert "no log-convexity onset" in err


def test_thresholds_json_roundtrip_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["thresholds", "--surface", GAUSS, "--out", str(out1), "--no-figures"])
    main(["thresholds", "--surface", GAUSS, "--out", str(out2), "--no-figures"])
    text1 = (out1 / "thresholds.json").read_text()
    assert text1 == (out2 / "thresholds.json").read_text()
    rec = json.loads(text1)
    for key, value in rec.items():
        assert float(f"{value:.17g}") == value, key


def test_shoot_outputs_are_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        main(["shoot", "--surface", BORELL, "--r-start", "2", "--kappa", "5.5",
              "--out", str(out)])
    for name in ("trajectory.csv", "shot.json", "trajectory.png"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_shoot_writes_trajectory(tmp_path, capsys):
    code = main(["shoot", "--surface", EUCLID, "--r-start", "1", "--kappa", "1",
                 "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "theta = 3.1415926" in out
    lines = (tmp_path / "trajectory.csv").read_text().strip().split("\n")
    assert lines[0] == "t,r,theta,alpha,P_w,A_w"
    summary = json.loads((tmp_path / "shot.json").read_text())
    assert summary["termination"] == "axis-crossing"
    assert abs(summary["closure_defect"]) < 1e-12
    assert (tmp_path / "trajectory.png").exists()


def test_shoot_alpha_prime0_form(tmp_path):
    # alpha'(0) = 0 reproduces the circle on the Borell surface
    code = main(["shoot", "--surface", BORELL, "--r-start", "2",
                 "--alpha-prime0", "0", "--out", str(tmp_path), "--no-figures"])
    assert code == 0
    summary = json.loads((tmp_path / "shot.json").read_text())
    assert abs(summary["closure_defect"]) <= 1e-10
    kappa = 2.0 * 2.0 + 1.0 / math.tanh(2.0)
    assert summary["kappa_f"] == pytest.approx(kappa, rel=1e-12)


def test_shoot_csv_alpha_monotone_while_outside_onset(tmp_path):
    r0 = math.asinh(1.0 / math.sqrt(2.0))
    code = main(["shoot", "--surface", BORELL, "--r-start", "3",
                 "--alpha-prime0", "0.5", "--out", str(tmp_path), "--no-figures"])
    assert code == 0
    rows = [line.split(",") for line in
            (tmp_path / "trajectory.csv").read_text().strip().split("\n")[1:]]
    alphas = [float(r[3]) for r in rows if float(r[1]) >= r0]
    assert len(alphas) > 10
    assert all(b >= a for a, b in zip(alphas, alphas[1:]))


def test_shoot_requires_exactly_one_curvature_flag(tmp_path):
    with pytest.raises(SystemExit):
        main(["shoot", "--surface", EUCLID, "--r-start", "1",
              "--kappa", "1", "--alpha-prime0", "0", "--out", str(tmp_path)])
    with pytest.raises(SystemExit):
        main(["shoot", "--surface", EUCLID, "--r-start", "1", "--out", str(tmp_path)])


def test_close_euclidean(tmp_path, capsys):
    code = main(["close", "--surface", EUCLID, "--volume", repr(math.pi),
                 "--out", str(tmp_path), "--scan-count", "1", "--scan-start", "1.2"])
    out = capsys.readouterr().out
    assert code == 0
    assert "winner: centered circle" in out
    assert "P = 6.28318530717" in out
    cands = json.loads((tmp_path / "candidates.json").read_text())
    assert isinstance(cands, list) and cands
    assert set(cands[0]) == {"kappa_f", "r_start", "r_end", "encloses_origin",
                             "P", "V", "is_circle"}
    assert (tmp_path / "candidates.png").exists()


def test_close_hyperbolic_volume(tmp_path, capsys):
    v = 2.0 * math.pi * (math.cosh(1.0) - 1.0)
    code = main(["close", "--surface",
                 '{"h": {"kind": "hyperbolic"}, "f": {"kind": "constant"}}',
                 "--volume", repr(v), "--out", str(tmp_path),
                 "--scan-count", "1", "--scan-start", "1.3", "--no-figures"])
    out = capsys.readouterr().out
    assert code == 0
    best_p = 2.0 * math.pi * math.sinh(1.0)
    assert f"P = {best_p:.8f}"[:14] in out


def test_close_volume_out_of_range_exits_2(tmp_path, capsys):
    code = main(["close", "--surface", BORELL, "--volume", "1e300",
                 "--out", str(tmp_path), "--no-figures"])
    err = capsys.readouterr().err
    assert code == 2
    assert "no candidate matches the volume" in err


def test_audit_exit_codes(tmp_path, capsys):
    assert main(["audit", "--surface", GAUSS, "--out", str(tmp_path),
                 "--no-figures"]) == 0
    assert main(["audit", "--surface", GAUSS_G1, "--out", str(tmp_path),
                 "--no-figures"]) == 3
    assert main(["audit", "--surface", SLOW_G, "--out", str(tmp_path),
                 "--no-figures"]) == 4
    assert main(["audit", "--surface", LINEAR, "--out", str(tmp_path),
                 "--no-figures"]) == 0
    capsys.readouterr()
    report = json.loads((tmp_path / "audit.json").read_text())
    assert set(report) == {"existence", "boundedness"}
    assert {h["name"] for h in report["existence"]["hypotheses"]} == {
        "h nondecreasing", "g diverges", "f <= c g"}


def test_audit_dimension_override(tmp_path, capsys):
    code = main(["audit", "--surface", GAUSS, "--n", "3", "--out", str(tmp_path),
                 "--no-figures"])
    assert code == 0
    report = json.loads((tmp_path / "audit.json").read_text())
    names = [h["name"] for h in report["boundedness"]["hypotheses"]]
    assert any("3/2" in n for n in names)


def test_circle_subcommand(capsys):
    code = main(["circle", "--surface", BORELL, "--radius", "2"])
    out = capsys.readouterr().out
    assert code == 0
    kappa = 4.0 + 1.0 / math.tanh(2.0)
    P = 2.0 * math.pi * math.exp(4.0) * math.sinh(2.0)
    assert f"kappa_f = {kappa:.10f}"[:20] in out
    assert f"P = {P:.6f}"[:10] in out
    assert "V = " in out


def test_invalid_surface_exits_1(tmp_path, capsys):
    assert main(["thresholds", "--surface", '{"h": {"kind": "nope"}, "f": {"kind": "constant"}}',
                 "--out", str(tmp_path)]) == 1
    assert main(["thresholds", "--surface", "/does/not/exist.json",
                 "--out", str(tmp_path)]) == 1
    assert main(["audit", "--surface",
                 '{"h": {"kind": "euclidean"}, "f": {"kind": "constant"}, "zzz": 1}',
                 "--out", str(tmp_path)]) == 1
    capsys.readouterr()


def test_surface_spec_from_file(tmp_path, capsys):
    spec = tmp_path / "surface.json"
    spec.write_text(BORELL)
    code = main(["circle", "--surface", str(spec), "--radius", "1"])
    assert code == 0
    capsys.readouterr()


def test_tolerance_flags_must_be_positive(tmp_path):
    with pytest.raises(SystemExit):
        main(["shoot", "--surface", EUCLID, "--r-start", "1", "--kappa", "1",
              "--rtol", "-1e-10", "--out", str(tmp_path)])


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "isorev", "circle", "--surface", EUCLID,
         "--radius", "1.5"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "kappa_f = 0.66666666666666" in proc.stdout
