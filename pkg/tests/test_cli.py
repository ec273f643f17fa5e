import json
import subprocess
import sys

import pytest

from paraxial_moments.cli import main

SMALL_MC = """\
beam.k0 = 4
beam.r0 = 1
covariance.c0 = 1
grid.n = 64
grid.h = 0.25
sim.z = 1
sim.dz = 0.25
sim.realizations = 4
sim.seed = 11
probes.offsets = 0,0; 0.5,0
"""


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fig1_csv(capsys):
    code, out, _ = run(["fig1", "--steps", "4", "--zc-ratios", "0.1,1"], capsys)
    lines = out.split("\n")
    assert code == 0 and lines[0] == "z_over_zsca,zc_ratio,S" and lines[-1] == ""
    rows = [l.split(",") for l in lines[1:-1]]
    assert len(rows) == 8 and sum(r[1] == "1.0" for r in rows) == 4
    assert all(float(r[2]) >= 0 for r in rows)


def test_fig2_csv_and_artifacts(tmp_path, capsys):
    code, _, _ = run(["fig2", "--n", "3", "--out", str(tmp_path)], capsys)
    assert code == 0
    text = (tmp_path / "fig2.csv").read_text()
    assert text.startswith("r_s_bar,xi_s_bar,cv\n")
    assert "0.5,1.0,1.0\n" in text and len(text.strip().split("\n")) == 10
    manifest = json.loads((tmp_path / "fig2.manifest.json").read_text())
    assert manifest["config"]["fig2.n"] == 3 and manifest["artifact"] == "fig2.csv"
    assert (tmp_path / "fig2.gp").exists()


def test_moments_at_source(capsys):
    code, out, _ = run(["moments", "eval", "--quantity", "mu1", "--z", "0"], capsys)
    data = json.loads(out)
    assert code == 0 and data["value_re"] == pytest.approx(1.0) and data["converged"]


def test_wigner_command(capsys):
    code, out, _ = run(["wigner", "--z", "0", "--rs", "0.5", "--xis", "1"], capsys)
    data = json.loads(out)
    assert code == 0 and data["mean"] > 0 and data["cv"] == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("argv", [
    ["fig1", "--set", "fig1.unknown=1"],
    ["fig1", "--set", "fig1.steps"],
    ["fig2", "--n", "0"],
    ["moments", "eval", "--quantity", "mu2", "--z", "1", "--offsets", "0,0"],
    ["mc", "--set", "sim.dz=2"],
    ["validate", "--criteria", "12"],
])
def test_invalid_configuration_exits_2(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_bad_flag_is_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["moments", "eval", "--quantity", "mu9", "--z", "1"])
    assert exc.value.code == 2


def test_non_convergence_exit_codes(capsys):
    argv = ["moments", "eval", "--quantity", "wigner", "--z", "1", "--k0", "2", "--xi", "0.5,0",
            "--set", "quad.rel_tol=1e-15", "--set", "quad.max_level=3"]
    code, out, err = run(argv, capsys)
    assert code == 3 and "did not converge" in err
    assert json.loads(out)["converged"] is False
    assert run(argv + ["--allow-loose"], capsys)[0] == 0


def test_mc_replay_is_identical(tmp_path, capsys):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL_MC)
    code, _, _ = run(["mc", "--config", str(cfg), "--out", str(tmp_path / "a")], capsys)
    assert code == 0
    first = json.loads((tmp_path / "a" / "stats.json").read_text())
    assert first["count"] == 4 and first["norm_drift_max"] < 1e-10
    code, _, _ = run(["mc", "--config", str(tmp_path / "a" / "stats.json"), "--threads", "2",
                      "--out", str(tmp_path / "b.json")], capsys)
    assert code == 0
    second = json.loads((tmp_path / "b.json").read_text())
    assert second["records"] == first["records"]
    assert second["manifest"]["config"] == first["manifest"]["config"]


def test_mc_wigner_probe(tmp_path, capsys):
    cfg = tmp_path / "wigner.ini"
    cfg.write_text(SMALL_MC.replace("beam.k0 = 4", "beam.k0 = 2").replace("sim.z = 1", "sim.z = 0.5")
                   + "probes.xi = 0.5,0\n")
    assert run(["mc", "--config", str(cfg), "--out", str(tmp_path)], capsys)[0] == 0
    entry = json.loads((tmp_path / "stats.json").read_text())["wigner"]
    assert entry["mean"]["re"] > 0 and entry["mean_limit"] > 0 and entry["cv_limit"] >= 0


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL_MC)
    run(["mc", "--config", str(cfg), "--set", "sim.realizations=3", "--realizations", "2",
         "--out", str(tmp_path)], capsys)
    assert json.loads((tmp_path / "stats.json").read_text())["count"] == 2


def test_gsr_check(tmp_path, capsys):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL_MC + "probes.quadruple = 0,0; 0.25,0; 0,0.25; 0.25,0.25\n")
    code, out, _ = run(["gsr-check", "--config", str(cfg)], capsys)
    data = json.loads(out)
    assert code == 0 and data["count"] == 4 and data["se"] >= 0


def test_validate_subset(tmp_path, capsys):
    code, out, _ = run(["validate", "--criteria", "1,3", "--out", str(tmp_path)], capsys)
    assert code == 0 and out.count("[PASS]") == 2
    report = json.loads((tmp_path / "validation.json").read_text())
    assert [c["number"] for c in report["criteria"]] == [1, 3]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "paraxial_moments", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
