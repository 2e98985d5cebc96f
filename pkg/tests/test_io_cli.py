import json
import os

import numpy as np
import pytest

from swlab.lattice import TorusLattice, BundleSpec
from swlab.equations import Configuration
from swlab.io import (save_fields, load_fields, write_csv_log, read_csv_log,
                      write_json_report, FieldIOError, CSV_COLUMNS)
from swlab.cli import parse_run_config, ConfigError, main


def _sample_config(conformal=False):
    rng = np.random.default_rng(42)
    prof = np.exp(0.1 * rng.standard_normal((6, 8))) if conformal else None
    lat = TorusLattice(6, 8, 1.3, 0.7, conformal=prof)
    q = Configuration(lat, BundleSpec(2), n=2,
                      weights=np.array([1.0, 3.0]), epsilon=0.4, tau=0.9)
    q.a.ax = rng.standard_normal((6, 8))
    q.a.ay = rng.standard_normal((6, 8))
    q.u = rng.standard_normal(q.u.shape) + 1j * rng.standard_normal(q.u.shape)
    q.phi = rng.standard_normal((6, 8)) + 1j * rng.standard_normal((6, 8))
    return q


def _assert_same_fields(q2, q):
    assert (q2.lattice.Nx, q2.lattice.Ny) == (q.lattice.Nx, q.lattice.Ny)
    assert q2.lattice.Lx == q.lattice.Lx and q2.lattice.Ly == q.lattice.Ly
    assert q2.bundle.degree == q.bundle.degree
    assert q2.n == q.n
    assert q2.epsilon == q.epsilon and q2.tau == q.tau
    assert np.array_equal(q2.a.ax, q.a.ax)
    assert np.array_equal(q2.a.ay, q.a.ay)
    assert np.array_equal(q2.u, q.u)
    assert np.array_equal(q2.phi, q.phi)
    assert np.array_equal(q2.lattice.h, q.lattice.h)


def test_binary_roundtrip_bit_exact(tmp_path):
    for conformal in (False, True):
        q = _sample_config(conformal)
        path = tmp_path / f"fields{int(conformal)}.swv"
        save_fields(path, q)
        _assert_same_fields(load_fields(path), q)
        # re-saving the loaded configuration reproduces the bytes
        path2 = tmp_path / "fields2.swv"
        save_fields(path2, load_fields(path))
        assert path.read_bytes() == path2.read_bytes()


def test_json_roundtrip(tmp_path):
    q = _sample_config()
    path = tmp_path / "fields.json"
    save_fields(path, q)
    _assert_same_fields(load_fields(path), q)
    doc = json.loads(path.read_text())
    assert doc["magic"] == "SWVF" and doc["version"] == 1


def test_load_fields_error_paths(tmp_path):
    with pytest.raises(FieldIOError):
        load_fields(tmp_path / "missing.swv")
    bad = tmp_path / "bad.swv"
    bad.write_bytes(b"NOPE" + b"\0" * 100)
    with pytest.raises(FieldIOError):
        load_fields(bad)
    short = tmp_path / "short.swv"
    q = _sample_config()
    save_fields(short, q)
    short.write_bytes(short.read_bytes()[:-16])
    with pytest.raises(FieldIOError):
        load_fields(short)
    badjson = tmp_path / "bad.json"
    badjson.write_text("{not json")
    with pytest.raises(FieldIOError):
        load_fields(badjson)
    incomplete = tmp_path / "incomplete.json"
    incomplete.write_text('{"Nx": 4}')
    with pytest.raises(FieldIOError):
        load_fields(incomplete)


def test_csv_log_roundtrip(tmp_path):
    rows = [(1, 0.5, 0.1, 0.2, 0.3, 1e-12, 10.0),
            (2, 0.25, 0.05, 0.1, 0.15, 1e-12, 20.5)]
    path = tmp_path / "log.csv"
    write_csv_log(path, rows)
    back = read_csv_log(path)
    assert back == rows
    # column header is the stable documented one
    header = path.read_text().splitlines()[0]
    assert tuple(header.split(",")) == CSV_COLUMNS
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("a,b\n1,2\n")
    with pytest.raises(FieldIOError):
        read_csv_log(wrong)


def test_write_json_report_numpy_values(tmp_path):
    path = tmp_path / "report.json"
    write_json_report(path, {"a": np.int64(3), "b": np.float64(0.5),
                             "c": np.arange(3), "d": 1 + 2j})
    doc = json.loads(path.read_text())
    assert doc == {"a": 3, "b": 0.5, "c": [0, 1, 2], "d": [1.0, 2.0]}


# ---------------------------------------------------------------------------
# run configuration parsing


def _write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_run_config_defaults_and_overrides(tmp_path):
    cfg = parse_run_config(_write_cfg(tmp_path, """
# comment
nx = 8
ny = 8
degree = 1
tau_area = 12.0
lam0 = 0.001
coarse_start = false
"""))
    assert cfg["nx"] == 8 and cfg["degree"] == 1
    assert abs(cfg["tau"] - 12.0) <= 1e-12      # unit torus by default
    assert cfg["lam0"] == 1e-3
    assert cfg["coarse_start"] is False
    assert cfg["method"] == "gauss-newton" and cfg["gauge_fix"] == "coulomb"


def test_parse_run_config_errors(tmp_path):
    cases = [
        "nx 8",                                   # not key=value
        "bogus_key = 1",                          # unknown key
        "nx = 8\nnx = 9",                         # duplicate
        "nx = eight",                             # bad int
        "tau = 1.0\ntau_area = 2.0",              # both tau forms
        "epsilon = 1.5",                          # out of range
        "method = bogus",
        "gauge_fix = landau",
        "tol = 0",
        "lam0 = -1",
        "n = 2\nweights = 1.0",                   # wrong weights length
        "ansatz = bogus",
        "conformal = wavy",
        "coarse_start = maybe",
        "nx = 10\nny = 10\ncoarse_start = true",  # too small for coarsening
        "nx = 17\nny = 16\ncoarse_start = true",  # odd nx
        "coarse_start = true\ninitial_fields = f.swv",
    ]
    for i, text in enumerate(cases):
        with pytest.raises(ConfigError):
            parse_run_config(_write_cfg(tmp_path, text, f"bad{i}.cfg"))
    with pytest.raises(ConfigError):
        parse_run_config(str(tmp_path / "does_not_exist.cfg"))


# ---------------------------------------------------------------------------
# CLI entry point


def test_cli_solve_roundtrip(tmp_path):
    prefix = tmp_path / "out" / "run"
    os.makedirs(tmp_path / "out")
    cfg = _write_cfg(tmp_path, f"""
nx = 8
ny = 8
degree = 0
tau = 0.5
tol = 1e-8
max_iter = 40
verify_solution = false
out_prefix = {prefix}
""")
    assert main(["solve", "--config", cfg]) == 0
    report = json.loads((tmp_path / "out" / "run_report.json").read_text())
    assert report["converged"] is True
    assert report["vortex_count"] == 0
    q = load_fields(tmp_path / "out" / "run_final.swv")
    assert q.bundle.degree == 0
    assert read_csv_log(tmp_path / "out" / "run_log.csv") is not None


def test_cli_solve_with_plots(tmp_path):
    prefix = tmp_path / "run"
    cfg = _write_cfg(tmp_path, f"""
nx = 16
ny = 16
degree = 1
tau = 0.0
tol = 1e-6
max_iter = 100
lam0 = 0.001
verify_solution = false
out_prefix = {prefix}
""")
    assert main(["solve", "--config", cfg, "--plots"]) == 0
    assert (tmp_path / "run_residuals.png").exists()
    assert (tmp_path / "run_field.png").exists()


def test_cli_exit_codes(tmp_path):
    # config error -> 2
    bad = _write_cfg(tmp_path, "method = bogus\n")
    assert main(["solve", "--config", bad]) == 2
    # missing output directory -> 4
    cfg = _write_cfg(tmp_path, f"""
nx = 8
ny = 8
out_prefix = {tmp_path}/no_such_dir/run
""", "io.cfg")
    assert main(["solve", "--config", cfg]) == 4
    # unreachable tolerance on a hard vortex problem -> 3
    cfg = _write_cfg(tmp_path, f"""
nx = 8
ny = 8
degree = 1
tau_area = 14.0
tol = 0.05
max_iter = 30
lam0 = 0.001
verify_solution = false
out_prefix = {tmp_path}/div
""", "div.cfg")
    assert main(["solve", "--config", cfg]) == 3


def test_cli_verify_and_index(tmp_path, capsys):
    out = tmp_path / "verify.json"
    assert main(["verify", "--suite", "algebra", "--seed", "1",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["pass"] is True and len(doc["checks"]) > 0

    assert main(["index", "--op", "dbar", "--degree", "1",
                 "--size", "12x12"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["index"] == 1 and doc["matches_expected"] is True


def test_cli_export(tmp_path, capsys):
    q = _sample_config()
    src = tmp_path / "fields.swv"
    save_fields(src, q)
    assert main(["export", "--in", str(src), "--format", "json"]) == 0
    capsys.readouterr()
    _assert_same_fields(load_fields(tmp_path / "fields.json"), q)
    assert main(["export", "--in", str(src), "--format", "csv"]) == 0
    csv_path = tmp_path / "fields.csv"
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 1 + 6 * 8
    # exported values parse back to the exact stored doubles
    first = lines[1].split(",")
    assert float(first[4]) == q.a.ax[0, 0]
    assert main(["export", "--in", str(tmp_path / "nope.swv"),
                 "--format", "csv"]) == 4
