import json
import os

import numpy as np
import pytest

from boldg.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main

BASE = [
    "--domain", "-15", "15",
    "--degree", "1",
    "--solution", "one_soliton",
    "--solution-params", "c=0.25,L=15",
    "--flux", "burgers",
    "--boundary", "periodic",
    "--scheme", "lserk54",
    "--t-final", "0.5",
]
TINY = ["--N", "8,12", *BASE]


def test_converge_tiny_run(tmp_path, capsys):
    rc = main(["converge", *TINY, "--output-dir", str(tmp_path)])
    assert rc == EXIT_OK
    assert (tmp_path / "table.csv").exists()
    assert (tmp_path / "metadata.json").exists()
    out = capsys.readouterr().out
    assert "N=8" in out and "N=12" in out


def test_converge_preset_overridable(tmp_path):
    # preset supplies the physics; shrink the run so it stays fast
    rc = main([
        "converge", "--experiment", "example1_rk", "--N", "8",
        "--degree", "1", "--t-final", "0.25", "--output-dir", str(tmp_path),
    ])
    assert rc == EXIT_OK
    table = (tmp_path / "table.csv").read_text(encoding="utf-8")
    assert table.splitlines()[0] == "N,error,rate,C1,C2"


def test_simulate_writes_snapshot_and_diagnostics(tmp_path):
    rc = main(["simulate", *BASE, "--N", "8", "--output-dir", str(tmp_path)])
    assert rc == EXIT_OK
    assert (tmp_path / "snapshot_N8.csv").exists()
    diag = (tmp_path / "diagnostics.csv").read_text(encoding="utf-8")
    assert diag.splitlines()[0] == "t,norm,C1,C2"
    meta = json.loads((tmp_path / "metadata.json").read_text(encoding="utf-8"))
    assert meta["N"] == 8


def test_config_error_exit_code(tmp_path, capsys):
    rc = main(["converge", "--experiment", "unknown_thing", "--output-dir", str(tmp_path)])
    assert rc == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_invalid_n_list_exit_code(tmp_path):
    rc = main(["converge", *BASE, "--N", "16,8", "--output-dir", str(tmp_path)])
    assert rc == EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path, capsys):
    # a wildly unstable fixed step blows up; simulate propagates exit 3
    rc = main([
        "simulate", *BASE[:-2], "--N", "8", "--t-final", "5000",
        "--tau-rule", "fixed", "--tau-coefficient", "50.0",
        "--output-dir", str(tmp_path),
    ])
    assert rc == EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("file, not a directory", encoding="utf-8")
    rc = main(["converge", *TINY, "--output-dir", str(blocker / "sub")])
    assert rc == EXIT_IO


def test_environment_variable_wins(tmp_path, monkeypatch):
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv("BOLDG_OUTPUT_DIR", str(env_dir))
    rc = main(["converge", *TINY, "--output-dir", str(tmp_path / "flagged")])
    assert rc == EXIT_OK
    assert (env_dir / "table.csv").exists()
    assert not (tmp_path / "flagged").exists()


def test_config_file_overrides_flags(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "# comment line\n"
        "t_final = 0.25\n"
        "N_list = 8\n",
        encoding="utf-8",
    )
    outdir = tmp_path / "out"
    rc = main(["converge", *TINY, "--t-final", "99",
               "--config", str(cfgfile), "--output-dir", str(outdir)])
    assert rc == EXIT_OK
    meta = json.loads((outdir / "metadata.json").read_text(encoding="utf-8"))
    assert meta["config"]["t_final"] == 0.25
    assert meta["config"]["N_list"] == [8]


def test_stability_subcommand(tmp_path, capsys):
    rc = main(["stability", "--N", "8", "--degree", "1", "--solution", "none",
               "--trials", "5", "--output-dir", str(tmp_path)])
    assert rc == EXIT_OK
    report = json.loads((tmp_path / "stability_report.json").read_text(encoding="utf-8"))
    assert report["reports"][0]["max_symmetric_eigenvalue"] <= 1e-10
    assert "2-step" in capsys.readouterr().out


def test_exact_eval_to_stdout(capsys):
    rc = main(["exact-eval", "--solution", "one_soliton", "--t", "0",
               "--domain", "-15", "15", "--samples", "11"])
    assert rc == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "x,u"
    assert len(lines) == 12
    x0, u0 = lines[1].split(",")
    assert float(x0) == -15.0
    assert np.isfinite(float(u0))


def test_exact_eval_two_soliton_to_file(tmp_path):
    path = tmp_path / "two.csv"
    rc = main(["exact-eval", "--solution", "two_soliton", "--t", "20",
               "--domain", "-150", "150", "--samples", "101", "--output", str(path)])
    assert rc == EXIT_OK
    body = path.read_text(encoding="utf-8").splitlines()
    assert len(body) == 102


def test_exact_eval_rejects_bad_domain():
    rc = main(["exact-eval", "--domain", "5", "-5", "--samples", "11"])
    assert rc == EXIT_CONFIG
