import csv
import json
import subprocess
import sys
from importlib import resources

import pytest

from manes.cli import COMMANDS, run

BASE = json.dumps({"mu1": 0.4, "mu2": -0.4, "sigma1": 0.1, "sigma2": 0.1, "a": 0.5, "T": 1.0, "h": 0.3})
CHAIN = str(resources.files("manes") / "data" / "synthetic_chain.csv")


def _rows(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_all_subcommands_registered():
    assert set(COMMANDS) == {"potential", "selfconsist", "free-energy", "bifurcate", "phase-diagnostics",
                             "hetero", "simulate", "mckean-vlasov", "calibrate", "price"}


@pytest.mark.parametrize("argv,files", [
    (["potential", "--params", BASE, "--g", "0.2"], ["potential.csv"]),
    (["selfconsist", "--params", BASE, "--g", "0.2", "--B", "0.01"], ["selfconsist.json"]),
    (["free-energy", "--params", BASE, "--g", "0.2", "--n", "21"], ["free_energy.csv"]),
    (["phase-diagnostics", "--params", BASE, "--g", "0.2"], ["phase_diagnostics.json"]),
    (["price", "--params", BASE, "--spot", "100", "--strikes", "90,100", "--type", "P"], ["price.json"]),
    (["simulate", "--params", BASE, "--g", "0.2", "--N", "20", "--steps", "200"],
     ["simulate.csv", "simulate_summary.json"]),
    (["mckean-vlasov", "--params", BASE, "--g", "0.2", "--n-cells", "100", "--t-end", "0.2"],
     ["mckean_vlasov.csv", "mckean_vlasov_density.csv", "mckean_vlasov_summary.json"]),
])
def test_subcommands_write_artifacts(tmp_path, argv, files):
    assert run(argv + ["--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(files)
    for name in files:
        text = (tmp_path / name).read_text()
        meta = json.loads(text)["metadata"] if name.endswith(".json") else json.loads(text.splitlines()[0][2:])
        assert meta["version"] and len(meta["config_hash"]) == 64
        assert meta["subcommand"] == argv[0]


def test_bifurcate_branch_count_changes_at_hc(tmp_path):
    assert run(["bifurcate", "--params", BASE, "--g", "0.2", "--h-min", "0.245", "--h-max", "0.253",
                "--n", "9", "--out", str(tmp_path)]) == 0
    counts = {}
    for r in _rows(tmp_path / "bifurcate.csv"):
        counts[float(r["h"])] = int(r["n_roots"])
    hs = sorted(counts)
    assert counts[hs[0]] == 3 and counts[hs[-1]] == 1
    assert [counts[h] for h in hs] == sorted((counts[h] for h in hs), reverse=True)


def test_hetero(tmp_path):
    assets = tmp_path / "assets.csv"
    assets.write_text("mu,sigma,B\n0.4,0.1,0\n0.35,0.12,0.001\n0.45,0.09,-0.001\n")
    out = tmp_path / "out"
    assert run(["hetero", "--assets", str(assets), "--g", "0.2", "--h", "0.3", "--out", str(out)]) == 0
    doc = json.loads((out / "hetero.json").read_text())
    assert len(doc["m"]) == 3


def test_calibrate_bundled_chain(tmp_path):
    assert run(["calibrate", "--quotes", CHAIN, "--h", "0.3", "--n-starts", "64", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "calibrate.json").read_text())
    assert doc["mape"] < 1e-3
    assert (tmp_path / "calibrate_potential.csv").exists()


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": json.loads(BASE), "g": 0.5}))
    assert run(["selfconsist", "--config", str(cfg), "--g", "0.2", "--out", str(tmp_path / "o")]) == 0
    meta = json.loads((tmp_path / "o" / "selfconsist.json").read_text())["metadata"]
    assert meta["config"]["g"] == 0.2


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": json.loads(BASE), "g": 0.2, "gee": 1}))
    assert run(["selfconsist", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "gee" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_missing_input_file(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["calibrate", "--quotes", str(tmp_path / "none.csv"), "--h", "0.3", "--out", str(out)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "input"
    assert not out.exists()


def test_usage_errors(tmp_path, capsys):
    assert run(["selfconsist", "--params", BASE, "--out", str(tmp_path)]) == 2  # --g missing
    assert run(["selfconsist", "--params", BASE, "--g", "0.2", "--gg", "1", "--out", str(tmp_path)]) == 2
    assert "--g" in capsys.readouterr().err
    assert run(["nosuch", "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    flat = json.dumps({"mu1": 0.05, "mu2": -0.05, "sigma1": 0.3, "sigma2": 0.3, "a": 0.5, "T": 1.0, "h": 0.3})
    out = tmp_path / "o"
    assert run(["phase-diagnostics", "--params", flat, "--g", "0.5", "--out", str(out)]) == 3
    assert json.loads(capsys.readouterr().err)["type"] == "NonCritical"
    assert not out.exists()


def test_byte_identical_reruns(tmp_path):
    argv = ["simulate", "--params", BASE, "--g", "0.2", "--N", "30", "--steps", "300", "--seed", "4"]
    assert run(argv + ["--out", str(tmp_path / "a")]) == 0
    assert run(argv + ["--threads", "3", "--out", str(tmp_path / "b")]) == 0
    for name in ("simulate.csv", "simulate_summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "manes", "price", "--params", BASE, "--spot", "100",
                           "--strikes", "100", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "price.json").exists()
