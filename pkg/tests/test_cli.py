import csv
from fractions import Fraction
from pathlib import Path

import pytest

from heavyset.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(cmd, cfg, out, *extra):
    return main([cmd, "--config", cfg, "--out", str(out), *extra])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


HALF = """group = torus
dim = 1
set = intervals [[0, "1/2"]]
alpha = sqrt2-1
"""


def test_cf_golden(tmp_path):
    assert run("cf", str(CONFIGS / "cf_golden.cfg"), tmp_path) == 0
    cf = rows(tmp_path / "cf.csv")
    assert [int(r["term"]) for r in cf] == [0] + [1] * 11
    fib = [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144]
    assert [int(r["q"]) for r in cf] == fib
    below = rows(tmp_path / "below.csv")
    assert all(Fraction(r["bound"]) > float(r["gap_float"]) >= 0 for r in below)


def test_missing_gamma_is_config_error(tmp_path):
    assert run("cf", write(tmp_path, "cf_terms = 5\n"), tmp_path) == 2


def test_unknown_key_is_config_error(tmp_path):
    assert run("heavy-scan", write(tmp_path, HALF + "colour = red\n"), tmp_path) == 2


def test_missing_file_is_config_error(tmp_path):
    assert run("cf", str(tmp_path / "nope.cfg"), tmp_path) == 2


def test_coarse_grid_is_config_error(tmp_path):
    cfg = write(tmp_path, HALF + "horizons = [10000]\nresolution = 20\n")
    assert run("bound-check", cfg, tmp_path) == 2


def test_resource_cap(tmp_path):
    cfg = write(tmp_path, HALF + "resolution = 100000\ngrid_cap = 1000\n")
    assert run("heavy-scan", cfg, tmp_path) == 3


def test_corrupted_below_pairs_fail_verify(tmp_path, capsys):
    text = """group = torus
dim = 1
set = intervals [[0, "(sqrt5-1)/2"]]
alpha = 1/1024
below = explicit
below_pairs = [[1, 2], [2, 3]]
resolution = 1000
seed = 1
loeve_n = [8]
loeve_samples = 20
ortho_pairs = 0
transfer_samples = 10
nesting_resolution = 100
nesting_horizon = 20
discreteness_min = 100
"""
    assert run("verify", write(tmp_path, text), tmp_path) == 1
    assert "2/3 lies above gamma" in capsys.readouterr().err


def test_heavy_scan_fractions(tmp_path):
    assert run("heavy-scan", str(CONFIGS / "half_scan.cfg"), tmp_path) == 0
    r = rows(tmp_path / "heavy_scan.csv")
    fr = [Fraction(x["fraction_exact"]) for x in r]
    assert fr == sorted(fr, reverse=True) and fr[-1] > 0
    assert all(x["nested"] == "True" for x in r)
    assert all(float(x["fraction_float"]) == float(Fraction(x["fraction_exact"])) for x in r)
    trace = rows(tmp_path / "trace_explicit.csv")
    assert trace[0]["S_exact"] == "1/2"


def test_full_measure_short_circuits(tmp_path):
    cfg = write(tmp_path, HALF.replace('"1/2"', "1") + "horizons = [10, 100]\n")
    assert run("heavy-scan", cfg, tmp_path) == 0
    r = rows(tmp_path / "heavy_scan.csv")
    assert all(x["heavy"] == "0" for x in r)


def test_seeded_runs_are_byte_identical(tmp_path):
    text = HALF + """horizons = [16, 100]
resolution = 2000
seed = 4
loeve_n = [16]
loeve_samples = 100
ortho_pairs = 3
ortho_samples = 500
transfer_samples = 50
nesting_resolution = 500
nesting_horizon = 50
discreteness_min = 1000
"""
    cfg = write(tmp_path, text)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("verify", cfg, a) == 0
    assert run("verify", cfg, b) == 0
    assert (a / "verify.csv").read_bytes() == (b / "verify.csv").read_bytes()
    c = tmp_path / "c"
    run("verify", cfg, c, "--seed", "5")
    assert (a / "verify.csv").read_bytes() != (c / "verify.csv").read_bytes()


def test_sampling_without_seed_is_config_error(tmp_path):
    text = HALF.replace("alpha = sqrt2-1\n", "alpha_samples = 2\n") + "horizons = [10]\n"
    assert run("heavy-scan", write(tmp_path, text), tmp_path) == 2


def test_bound_check_rational_branch(tmp_path):
    cfg = write(tmp_path, HALF + "horizons = [100, 1000]\nresolution = 20000\n")
    assert run("bound-check", cfg, tmp_path) == 0
    b = rows(tmp_path / "bound.csv")
    assert b[0]["passed"] == "True"
    assert "branch: rational" in (tmp_path / "report.txt").read_text()


def test_regularity(tmp_path):
    assert run("regularity", str(CONFIGS / "padic_regularity.cfg"), tmp_path) == 0
    r = rows(tmp_path / "regularity.csv")
    assert len(r) == 10 and all(x["ok"] == "True" for x in r)
    assert all(x["ratio_exact"] == "1" for x in r)


def test_console_script_help(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "heavy-scan" in capsys.readouterr().out
