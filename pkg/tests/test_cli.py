import csv
import json
from pathlib import Path

import numpy as np

from westervelt_cpg import cli, run_simulation
from westervelt_cpg.integrators import NewtonConfig

SMALL = ["--domain", "0,8", "--elements", "16", "--tau", "0.25", "--t-final", "2",
         "--initial", "gaussian(0.5,3)"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_simulate_paper_config(tmp_path):
    out = tmp_path / "fig1"
    code = cli.main(["simulate", "--elements", "256", "--tau", "0.0625", "--t-final", "8",
                     "--snapshots", "1,4,8", "--overlay-linear", "--out-dir", str(out)])
    assert code == 0
    rows = read_csv(out / "energy.csv")
    assert rows[0] == ["t", "E_h", "dissipation_cumulative"]
    energies = np.array([float(r[1]) for r in rows[1:]])
    assert len(energies) == 129
    assert np.all(np.abs(energies - 0.471801) <= 5e-6)
    snaps = read_csv(out / "snapshots.csv")
    assert snaps[0] == ["x", "1", "4", "8"]
    assert len(snaps) == 1 + 513
    assert read_csv(out / "snapshots_linear.csv")[0] == ["x", "1", "4", "8"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "completed"
    assert manifest["config"]["beta"] == "0.3"
    assert len(manifest["outputs"]) == 3
    assert all(Path(p).exists() for p in manifest["outputs"])


def test_missing_tau_writes_nothing(tmp_path, capsys):
    out = tmp_path / "none"
    code = cli.main(["simulate", "--elements", "16", "--t-final", "1", "--out-dir", str(out)])
    assert code == 1
    assert not out.exists()
    assert "--tau" in capsys.readouterr().err


def test_degenerate_exit_code(tmp_path):
    code = cli.main(["simulate", *SMALL, "--beta", "0.5", "--initial", "constant(1)",
                     "--out-dir", str(tmp_path)])
    assert code == 2
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "degenerate"


def test_newton_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "NewtonConfig", lambda: NewtonConfig(max_iter=1))
    assert cli.main(["simulate", *SMALL, "--out-dir", str(tmp_path)]) == 3


def test_bad_values_exit_code(tmp_path):
    for extra in (["--integrator", "rk4"], ["--alpha", "-1"], ["--initial", "sawtooth"],
                  ["--domain", "3"], ["--elements", "two"]):
        assert cli.main(["simulate", *SMALL, *extra, "--out-dir", str(tmp_path)]) == 1
    assert cli.main(["compare", *SMALL, "--integrator", "euler", "--out-dir", str(tmp_path)]) == 1
    assert cli.main(["nonsense"]) == 1


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\ndomain = 0,8\nelements = 16\ntau = 0.25  # step\n"
                   "t-final = 2\ninitial = gaussian(0.5,3)\nbeta = 0.1\n")
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(cfg), "--beta", "0.2", "--out-dir", str(out)]) == 0
    echo = json.loads((out / "manifest.json").read_text())["config"]
    assert echo["beta"] == "0.2" and echo["tau"] == "0.25"
    cfg.write_text("tau = 0.1\ncolour = blue\n")
    assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(out)]) == 1


def test_manifest_round_trip(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["simulate", *SMALL, "--alpha", "0.05", "--snapshots", "0.5,2",
                     "--out-dir", str(a)]) == 0
    assert cli.main(["simulate", "--config", str(a / "manifest.json"), "--out-dir", str(b)]) == 0
    for name in ("snapshots.csv", "energy.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_csv_values_parse_back_exactly(tmp_path):
    assert cli.main(["simulate", *SMALL, "--alpha", "0.1", "--snapshots", "2",
                     "--out-dir", str(tmp_path)]) == 0
    traj = run_simulation(cli.build_config(cli.resolve(cli.build_parser().parse_args(
        ["simulate", *SMALL, "--alpha", "0.1", "--snapshots", "2"]))))
    rows = read_csv(tmp_path / "energy.csv")[1:]
    assert [float(r[1]) for r in rows] == traj.ledger.energies
    assert [float(r[2]) for r in rows] == list(traj.ledger.cumulative_dissipation())
    snaps = read_csv(tmp_path / "snapshots.csv")[1:]
    assert [float(r[1]) for r in snaps] == list(traj.snapshots[0].p)


def test_convergence_command(tmp_path):
    assert cli.main(["convergence", *SMALL, "--levels", "2", "--out-dir", str(tmp_path)]) == 1
    assert not (tmp_path / "convergence.csv").exists()
    code = cli.main(["convergence", *SMALL, "--degree-k", "1", "--order-q", "1", "--h0", "0.5",
                     "--levels", "3", "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "convergence.csv")
    assert rows[0] == ["h_tau", "err", "eoc"]
    assert [r[0] for r in rows[1:]] == ["0.5", "0.25", "0.125"]
    assert rows[1][2] == ""
    assert float(rows[-1][2]) > 1.5


def test_compare_command(tmp_path):
    code = cli.main(["compare", *SMALL, "--beta", "0", "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "compare.csv")
    assert rows[0] == ["integrator", "max_drift", "balance_residual", "final_energy"]
    assert [r[0] for r in rows[1:]] == ["cpg", "implicit_midpoint", "lobatto_iiia2"]
    finals = [float(r[3]) for r in rows[1:]]
    assert all(float(r[1]) <= 1e-10 for r in rows[1:])
    assert max(finals) - min(finals) <= 1e-10
