import csv
import math
import os
import subprocess
import sys

import pytest

from stadium_spectrum.cli import main


def run_cli(*args):
    return main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_check_holds_on_std(tmp_path, capsys):
    out = tmp_path / "check"
    assert run_cli("check", "--table", "std-stadium:R=1,L=2", "--output", out) == 0
    rows = read_csv(out / "check.csv")
    assert all("[" in h for h in rows[0])
    summary = (out / "summary.txt").read_text()
    assert "status: ok" in summary


def test_orbit_and_map(tmp_path):
    out = tmp_path / "orbit"
    assert run_cli("orbit", "--table", "weak-stadium", "--codes", "12;2 12", "--output", out) == 0
    rows = read_csv(out / "orbit_lengths.csv")
    assert len(rows) == 3
    out = tmp_path / "map"
    assert run_cli("map", "--table", "std-stadium", "--r", 0.3, "--phi", 0.2, "--steps", 5, "--output", out) == 0
    assert len(read_csv(out / "trajectory.csv")) == 7


def test_invariants_report(tmp_path):
    out = tmp_path / "inv"
    assert run_cli("invariants", "--table", "weak-stadium", "--q", "3,7,11,15,19,23", "--output", out) == 0
    names = sorted(os.listdir(out))
    assert "spectral_rows.csv" in names and "spectral_report.csv" in names
    report = {r[0]: float(r[1]) for r in read_csv(out / "spectral_report.csv")[1:]}
    lam = (3.76 + math.sqrt(3.76**2 - 4)) / 2
    assert report["lambda_analytic"] == pytest.approx(lam, rel=1e-9)
    assert report["lambda_measured"] == pytest.approx(lam, rel=2e-2)
    assert report["tau_star"] == pytest.approx(2.2, rel=1e-12)


def test_malformed_arcs_write_nothing(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(
        'experiment = "orbit"\n'
        f'output = "{(tmp_path / "never").as_posix()}"\n'
        "[table]\n"
        'name = "arcs"\n'
        "arc1 = { center = [0.0, 0.0], radius = 1.0 }\n"
        "arc2 = { center = [2.0, 0.0], radius = 1.0, start = -1.5, end = 1.5 }\n"
    )
    assert run_cli("orbit", "--config", cfg) == 1
    assert not (tmp_path / "never").exists()


def test_unknown_keys_rejected(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('experiment = "check"\ncolour = "red"\n[table]\nname = "weak-stadium"\n')
    assert run_cli("check", "--config", cfg, "--output", tmp_path / "o") == 1
    cfg.write_text('experiment = "check"\n[table]\nname = "weak-stadium"\n[params]\nresolution = 3\n')
    assert run_cli("check", "--config", cfg, "--output", tmp_path / "o") == 1
    assert run_cli("check", "--table", "weak-stadium:R=3", "--output", tmp_path / "o") == 1
    assert run_cli("check", "--table", "hexagon", "--output", tmp_path / "o") == 1
    assert not (tmp_path / "o").exists()


def test_usage_errors_are_validation(tmp_path):
    with pytest.raises(SystemExit) as info:
        run_cli("check", "--table", "std-stadium:R", "--output", tmp_path / "o")
    assert info.value.code == 1


@pytest.mark.parametrize("key,value", [("tie_tol", "1e-15"), ("fd_step", "1e-10"), ("fd_step", '"small"')])
def test_tolerance_floors(tmp_path, key, value):
    cfg = tmp_path / "tol.toml"
    cfg.write_text(f'experiment = "check"\n[table]\nname = "weak-stadium"\n[tolerances]\n{key} = {value}\n')
    assert run_cli("check", "--config", cfg, "--output", tmp_path / "o") == 1


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('experiment = "spectrum"\n[table]\nname = "weak-stadium"\n[params]\nq = [3, 5]\n')
    out = tmp_path / "o"
    assert run_cli("spectrum", "--config", cfg, "--table", "std-stadium", "--q", "3,5,7", "--output", out) == 0
    rows = read_csv(out / "spectrum.csv")
    assert len(rows) == 3
    assert "weak-stadium" in (out / "summary.txt").read_text()


def test_fit_failure_is_partial(tmp_path):
    out = tmp_path / "o"
    code = run_cli("invariants", "--table", "std-stadium", "--q", "3,5", "--output", out)
    assert code == 3
    assert "status: partial" in (out / "summary.txt").read_text()


def test_deform_from_config(tmp_path):
    cfg = tmp_path / "d.toml"
    cfg.write_text(
        'experiment = "deform"\n'
        "[table]\n"
        'name = "std-stadium"\nR = 1.0\nL = 0.5\n'
        "[params]\n"
        'codes = ["12", "2 12"]\n'
        'arc1 = { kind = "bump", center = 1.8207963267948966, width = 1.2 }\n'
    )
    out = tmp_path / "o"
    assert run_cli("deform", "--config", cfg, "--output", out) == 0
    rows = read_csv(out / "deform.csv")
    assert rows[0] == ["code [word]", "lhs [length]", "rhs [length]", "rel_err [1]"]
    assert all(float(r[3]) < 1e-6 for r in rows[1:])


def test_unfold_and_cancel_headers(tmp_path):
    out = tmp_path / "u"
    assert run_cli("unfold", "--table", "std-stadium", "--n_min", 20, "--n_max", 60, "--output", out) == 0
    for name in ("unfold.csv", "unfold_fits.csv"):
        assert all("[" in h for h in read_csv(out / name)[0])
    cfg = tmp_path / "c.toml"
    cfg.write_text(
        'experiment = "cancel"\n[table]\nname = "std-stadium"\nR = 1.0\nL = 0.5\n[params]\nells = [1, 2, 3]\n'
        'arc1 = { kind = "bump", center = 1.5707963267948966, width = 1.2, power = 4 }\n'
    )
    out = tmp_path / "c"
    assert run_cli("cancel", "--config", cfg, "--output", out) == 0
    assert all("[" in h for h in read_csv(out / "cancel.csv")[0])


def test_outputs_are_deterministic(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert run_cli("orbit", "--table", "squash-curvatures", "--codes", "12;2 12;2(12)^2", "--seed", 7, "--output", d) == 0
    for name in sorted(os.listdir(dirs[0])):
        a, b = (d / name for d in dirs)
        assert a.read_bytes() == b.read_bytes()
        assert b"\r\n" not in a.read_bytes()


def test_console_script_runs(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "stadium_spectrum.cli", "check", "--table", "weak-stadium", "--output", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
