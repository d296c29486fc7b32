import csv
import json
import math
import subprocess
import sys

import pytest

from polyelast import cli
from polyelast.benchmarks import BenchmarkError
from polyelast.mesh import read_mesh
from polyelast.solver import SolverError


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---- configuration


def test_config_defaults_and_validation():
    cfg = cli.make_config(["run", "--case", "patch"])
    assert (cfg.formulation, cfg.p, cfg.seed, cfg.format) == ("sbfem", 1, 42, ("csv", "json"))
    for argv, msg in [
        (["run", "--case", "nope"], "unknown case"),
        (["run", "--case", "patch", "--formulation", "xfem"], "formulation"),
        (["run", "--case", "patch", "--formulation", "polyfem", "--p", "2"], "sbfem"),
        (["run", "--case", "patch", "--levels", "10,5"], "increasing"),
        (["run", "--case", "patch", "--levels", "a,b"], "--levels"),
        (["run", "--case", "patch", "--format", "xml"], "format"),
        (["run", "--case", "patch", "--param", "sigma"], "key=value"),
    ]:
        with pytest.raises(cli.ConfigError, match=msg):
            cli.make_config(argv).case_obj()


def test_config_file_and_flag_override(tmp_path):
    toml = tmp_path / "c.toml"
    toml.write_text('case = "cantilever"\nformulation = "polyfem"\nlevels = [20, 40]\nseed = 3\n')
    cfg = cli.make_config(["run", "--config", str(toml), "--seed", "9"])
    assert (cfg.case, cfg.formulation, cfg.levels, cfg.seed) == ("cantilever", "polyfem", (20, 40), 9)
    js = tmp_path / "c.json"
    js.write_text(json.dumps({"case": "patch", "p": 3}))
    cfg = cli.make_config(["run", "--config", str(js), "--p", "2"])
    assert (cfg.case, cfg.p) == ("patch", 2)


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('case = "patch"\ncolour = "red"\n')
    assert run("run", "--config", bad) == cli.EXIT_CONFIG
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert run("run", "--config", broken) == cli.EXIT_CONFIG
    assert run("run", "--config", tmp_path / "absent.toml") == cli.EXIT_CONFIG


def test_unknown_param_is_config_error(tmp_path, capsys):
    assert run("mesh", "--case", "patch", "--param", "radius=2", "--out", tmp_path) == cli.EXIT_CONFIG
    assert "radius" in capsys.readouterr().err


def test_fmt():
    assert cli.fmt(3) == "3"
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert cli.fmt(float("nan")) == "nan"


# ---- mesh


def test_mesh_counts_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("mesh", "--case", "plate-hole", "--seed", 42, "--out", out) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == [f"mesh_plate-hole_L{i}.json" for i in range(4)]
    for name, target in zip(files, (100, 200, 400, 800)):
        assert (a / name).read_bytes() == (b / name).read_bytes()
        n = read_mesh(a / name).n_elements
        assert abs(n - target) <= 0.05 * target


def test_mesh_seed_changes_output(tmp_path):
    run("mesh", "--case", "patch", "--levels", 10, "--seed", 1, "--out", tmp_path / "a")
    run("mesh", "--case", "patch", "--levels", 10, "--seed", 2, "--out", tmp_path / "b")
    f = "mesh_patch_L0.json"
    assert (tmp_path / "a" / f).read_bytes() != (tmp_path / "b" / f).read_bytes()


def test_mesh_hole_outside_plate(tmp_path, capsys):
    code = run("mesh", "--case", "plate-hole", "--param", "a=7", "--out", tmp_path)
    assert code != 0 and code == cli.EXIT_CONFIG
    assert "hole 0" in capsys.readouterr().err


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run("mesh", "--case", "patch", "--levels", 1, "--out", blocker / "sub") != 0


# ---- run


def test_run_patch_sbfem_p2(tmp_path):
    assert run("run", "--case", "patch", "--p", 2, "--out", tmp_path) == cli.EXIT_OK
    rows = read_csv(tmp_path / "patch_sbfem_p2.csv")
    assert list(rows[0]) == list(cli.CSV_COLUMNS)
    assert len(rows) == 4 and all(float(r["l2_rel"]) <= 1e-12 for r in rows)
    summary = json.loads((tmp_path / "patch_sbfem_p2.json").read_text())
    assert summary["ok"] is True and summary["config"]["seed"] == 42
    assert {c["status"] for c in summary["checks"]} == {"pass"}


def test_run_patch_nsfem_expected_failure(tmp_path):
    code = run("run", "--case", "patch", "--formulation", "nsfem", "--out", tmp_path)
    summary = json.loads((tmp_path / "patch_nsfem_p1.json").read_text())
    status = {c["status"] for c in summary["checks"]}
    # the fixture is an expected failure: exit 0 if it fails as expected,
    # a fixture exit if it unexpectedly passes
    assert status in ({"xfail"}, {"xpass"}, {"xfail", "xpass"})
    assert code == (cli.EXIT_OK if status == {"xfail"} else cli.EXIT_FIXTURE)


def test_run_csv_bytes_deterministic(tmp_path):
    for out in ("a", "b"):
        assert run("run", "--case", "cantilever", "--formulation", "polyfem", "--levels", "20,40",
                   "--format", "csv", "--out", tmp_path / out) in (0, cli.EXIT_FIXTURE)
    a = (tmp_path / "a" / "cantilever_polyfem_p1.csv").read_bytes()
    assert a == (tmp_path / "b" / "cantilever_polyfem_p1.csv").read_bytes()
    assert not (tmp_path / "a" / "cantilever_polyfem_p1.json").exists()


def test_run_solver_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(case, fixtures=None, progress=None):
        raise BenchmarkError(2, "-", "solve", SolverError("matrix is singular"))

    monkeypatch.setattr(cli, "run_benchmark", boom)
    assert run("run", "--case", "patch", "--out", tmp_path) == cli.EXIT_SOLVER
    err = capsys.readouterr().err
    assert "level 2" in err and "solve" in err


# ---- report


@pytest.fixture(scope="module")
def cantilever_runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    for form in ("polyfem", "nsfem", "sbfem"):
        run("run", "--case", "cantilever", "--formulation", form, "--levels", "20,40,80", "--out", out)
    return out


def test_report_merges_formulations(cantilever_runs):
    assert run("report", "--out", cantilever_runs) == cli.EXIT_OK
    rows = read_csv(cantilever_runs / "report_cantilever.csv")
    assert len(rows) == 3
    for form in ("nsfem", "polyfem", "sbfem"):
        assert all(math.isfinite(float(r[f"{form}_p1_l2_rel"])) for r in rows)
    assert [int(r["level"]) for r in rows] == [0, 1, 2]


def test_report_plot_data_sorted(cantilever_runs):
    run("report", "--out", cantilever_runs)
    plots = sorted(cantilever_runs.glob("plot_cantilever_*_l2_rel.dat"))
    assert len(plots) == 3
    for p in plots:
        lines = p.read_text().splitlines()
        assert lines[0] == "# dofs error"
        x = [float(line.split()[0]) for line in lines[1:]]
        assert x == sorted(x) and len(x) == 3


def test_report_single_run_rekeys_csv(tmp_path):
    run("run", "--case", "patch", "--levels", "1,10", "--out", tmp_path)
    assert run("report", "--out", tmp_path / "rep", tmp_path / "patch_sbfem_p1.json") == cli.EXIT_OK
    src = read_csv(tmp_path / "patch_sbfem_p1.csv")
    rep = read_csv(tmp_path / "rep" / "report_patch.csv")
    assert len(src) == len(rep)
    for a, b in zip(src, rep):
        assert (a["variant"], a["level"]) == (b["variant"], b["level"])
        for c in ("dofs", "l2_rel", "h1_rel", "K_I"):
            assert a[c] == b[f"sbfem_p1_{c}"]


def test_report_missing_inputs(tmp_path, capsys):
    assert run("report", "--out", tmp_path / "nowhere") == cli.EXIT_REPORT
    assert run("report", "--out", tmp_path) == cli.EXIT_REPORT
    assert run("report", "--out", tmp_path, tmp_path / "a.json", tmp_path / "b.json") == cli.EXIT_REPORT
    err = capsys.readouterr().err
    assert "a.json" in err and "b.json" in err


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "polyelast.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "report" in out.stdout
