import filecmp
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from hardphase import fileio
from hardphase.cli import UsageError, build_config, parse_config, render_config, run
from hardphase.eos import HARD_PHASE
from hardphase.spectrum import spectrum_row
from hardphase.steady_state import StarConfig


def files_of(path):
    return sorted(os.listdir(path))


def test_spectrum_end_to_end(tmp_path):
    out = tmp_path / "s"
    assert run(["spectrum", "--kappa", "12", "--grid", "4096", "--output-dir", str(out)]) == 0
    header, cols = fileio.read_csv(out / "spectrum.csv")
    assert header == fileio.HEADERS["spectrum"]
    assert cols[5] == ["Unstable"]
    row, *_ = spectrum_row(HARD_PHASE, 12.0, StarConfig(grid_size=4096))
    assert cols[3][0] == row.nu_star
    assert cols[1][0] == row.R and cols[2][0] == row.M
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["grid_size"] == 4096
    assert manifest["seed"] == 20240517
    assert manifest["results"]["certificates"][0]["quotient"] < 0
    assert sorted(manifest["outputs"]) == [f for f in files_of(out) if f != "manifest.json"]


def test_rerun_from_config_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["spectrum", "--kappa", "0.05,8", "--grid", "512", "--plot",
                "--output-dir", str(a)]) == 0
    text = (a / "config.txt").read_text().replace(str(a), str(b))
    cfg_file = tmp_path / "cfg.txt"
    cfg_file.write_text(text)
    assert run(["spectrum", "--config", str(cfg_file)]) == 0
    assert files_of(a) == files_of(b)
    for name in files_of(a):
        if name not in ("config.txt", "manifest.json"):
            assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_usage_errors(tmp_path, capsys):
    out = str(tmp_path / "u")
    assert run(["spectrum", "--kappa", "-1", "--output-dir", out]) == 2
    assert "kappa" in capsys.readouterr().err
    assert run(["spectrum", "--grid", "10", "--output-dir", out]) == 2
    assert run(["nonsense"]) == 2
    assert run(["spectrum", "--no-such-flag"]) == 2
    assert run(["spectrum", "--config", str(tmp_path / "missing.txt")]) == 2
    assert run(["profile", "--kappa", "1,2", "--output-dir", out]) == 2
    assert run(["asymptotics", "--alpha1", "0.3", "--alpha2", "0.2", "--output-dir", out]) == 2


def test_numerical_failure_writes_report(tmp_path):
    out = tmp_path / "f"
    code = run(["critical", "--kappa-lo", "0.01", "--kappa-hi", "0.1", "--grid", "256",
                "--output-dir", str(out)])
    assert code == 1
    report = json.loads((out / "error.json").read_text())
    assert report["error"] == "BracketError"
    assert not (out / "manifest.json").exists()


def test_phase_smoke(tmp_path):
    out = tmp_path / "p"
    assert run(["phase", "--eps", "1e-8", "--tau-max", "30", "--plot",
                "--output-dir", str(out)]) == 0
    assert {"trajectory.csv", "phase.svg"} <= set(files_of(out))
    results = json.loads((out / "manifest.json").read_text())["results"]
    assert results["final_distance"] < 1e-10 and results["stays_in_triangle"]


@pytest.mark.parametrize("argv", [
    ["family", "--kappa", "0.1,1", "--grid", "256", "--plot"],
    ["profile", "--kappa", "1", "--grid", "256", "--plot"],
    ["asymptotics", "--kappa", "12", "--plot"],
    ["evolve", "--kappa", "12", "--grid", "512", "--plot"],
    ["evolve", "--kappa", "0.05", "--grid", "256", "--seed-mode", "random"],
    ["critical", "--grid", "256", "--tol-kappa", "1e-2"],
    ["spectrum", "--kappa", "1", "--grid", "256", "--dump-operator"],
])
def test_commands_succeed(tmp_path, argv):
    out = tmp_path / argv[0]
    assert run(argv + ["--output-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == argv[0]
    for name in manifest["outputs"]:
        assert (out / name).exists()
    for name in manifest["outputs"]:
        if name.endswith(".csv"):
            fileio.read_csv(out / name)


def test_evolve_escape_consistency(tmp_path):
    out = tmp_path / "e"
    assert run(["evolve", "--kappa", "12", "--output-dir", str(out)]) == 0
    res = json.loads((out / "manifest.json").read_text())["results"]
    assert res["crossing_time"] == pytest.approx(res["escape_time"], rel=0.02)
    assert res["growth_rate"] == pytest.approx(res["predicted_rate"], rel=0.01)


def test_precedence(tmp_path):
    file_values = {"grid_size": "512", "seed": "7", "kappa": "1,2"}
    cfg = build_config("spectrum", file_values, {"grid_size": "1024"})
    assert cfg.grid_size == 1024
    assert cfg.seed == 7
    assert cfg.kappa == (1.0, 2.0) or list(cfg.kappa) == [1.0, 2.0]
    assert build_config("spectrum").grid_size == 4096


def test_config_round_trip():
    cfg = build_config("evolve", {"kappa": "12", "delta": "1e-7", "plot": "true"})
    assert parse_config(render_config(cfg)) == cfg
    with pytest.raises(UsageError):
        build_config("spectrum", {"command": "family"})
    with pytest.raises(UsageError):
        build_config("spectrum", {"unknown_key": "1"})
    with pytest.raises(UsageError):
        build_config("spectrum", {"seed": str(2 ** 64)})


def test_module_entry_point(tmp_path):
    out = tmp_path / "m"
    proc = subprocess.run([sys.executable, "-m", "hardphase", "profile", "--kappa", "0.5",
                           "--grid", "128", "--output-dir", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    header, cols = fileio.read_csv(out / "profile.csv")
    assert header == fileio.HEADERS["profile"]
    assert cols[0].size == 129 and np.all(np.diff(cols[0]) > 0)
