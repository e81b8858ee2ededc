import json
import subprocess
import sys

import numpy as np
import pytest

from hypoestim.cli import main
from hypoestim.io import read_table


@pytest.fixture
def trig_csv(tmp_path):
    out = tmp_path / "trig.csv"
    rc = main(["simulate", "--model", "trig", "--params", "1,-8,8,0.5", "--sigma", "0.7", "--dt", "0.05",
               "--N", "2000", "--k", "10", "--seed", "3", "--out", str(out)])
    assert rc == 0
    return out


def test_simulate_writes_path(trig_csv):
    table = read_table(trig_csv)
    assert list(table) == ["t", "q", "p"]
    assert table["q"].size == 2001
    np.testing.assert_allclose(np.diff(table["t"]), 0.05, rtol=1e-9)


def test_seed_env_override(tmp_path, monkeypatch):
    args = ["simulate", "--model", "growth", "--sigma", "1", "--dt", "0.1", "--N", "20", "--seed", "1"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    monkeypatch.setenv("HYPOESTIM_SEED", "99")
    main(args + ["--out", str(tmp_path / "b.csv")])
    main(args[:-1] + ["2", "--out", str(tmp_path / "c.csv")])
    b, c = read_table(tmp_path / "b.csv")["q"], read_table(tmp_path / "c.csv")["q"]
    assert b.tobytes() == c.tobytes()
    assert read_table(tmp_path / "a.csv")["q"].tobytes() != b.tobytes()


def test_fit_and_density(trig_csv, tmp_path):
    chain, summary, dens = tmp_path / "chain.csv", tmp_path / "summary.csv", tmp_path / "dens.csv"
    rc = main(["fit", "--in", str(trig_csv), "--model", "trig", "--c", "3", "--ngibbs", "10", "--seed", "0",
               "--out-chain", str(chain), "--out-summary", str(summary)])
    assert rc == 0
    table = read_table(chain)
    assert list(table) == ["iter", "D_1", "D_2", "D_3", "gamma", "sigma"]
    np.testing.assert_array_equal(table["iter"], np.arange(1, 11))
    with open(summary) as fh:
        assert fh.readline().strip() == "param,mean,sd"
    assert main(["density", "--chain", str(chain), "--grid-points", "64", "--out", str(dens)]) == 0
    d = read_table(dens)
    assert d["q"].size == 64 and np.all(d["density_mean"] > 0)


def test_config_file_supplies_required_options(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "harmonic", "params": "4,0.5", "sigma": 1.0, "dt": 0.1, "N": 30,
                               "seed": 4}))
    out = tmp_path / "h.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--N", "10"]) == 0
    assert read_table(out)["q"].size == 11


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["nd-demo", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 3
    assert "bogus" in capsys.readouterr().err


def test_sweep_with_fit(tmp_path):
    out, fit = tmp_path / "sweep.csv", tmp_path / "fit.csv"
    rc = main(["sweep", "--model", "harmonic", "--params", "4,0.5", "--sigma", "1", "--T", "10",
               "--dts", "1/10,1/20", "--reps", "3", "--ngibbs", "6", "--seed", "1", "--out", str(out),
               "--out-fit", str(fit)])
    assert rc == 0
    rows = read_table(out)
    np.testing.assert_allclose(rows["dt"], [0.1, 0.05])
    with open(fit) as fh:
        header = fh.readline().strip().split(",")
    assert header[:5] == ["param", "b", "se_b", "c", "se_c"]


def test_demos(tmp_path, capsys):
    assert main(["nd-demo", "--reps", "20", "--settings", "10:0.1", "--seed", "0", "--out", str(tmp_path / "nd.csv"),
                 "--out-hist", str(tmp_path / "ndh.csv")]) == 0
    assert main(["lit-drift-demo", "--reps", "3", "--settings", "20:0.02", "--seed", "0",
                 "--out", str(tmp_path / "lit.csv")]) == 0
    assert "ratio_D" in capsys.readouterr().out


def test_error_exit_codes(tmp_path):
    assert main(["fit", "--in", str(tmp_path / "missing.csv"), "--model", "harmonic"]) == 6
    bad = tmp_path / "bad.csv"
    bad.write_text("t,q\n0,0\n2,1\n3,2\n")
    assert main(["fit", "--in", str(bad), "--model", "harmonic"]) == 3
    flat = tmp_path / "flat.csv"
    flat.write_text("t,q\n" + "".join(f"{i},0\n" for i in range(20)))
    assert main(["fit", "--in", str(flat), "--model", "harmonic", "--sigma-init", "1"]) == 4
    assert main(["simulate", "--model", "harmonic", "--params=-400,0", "--sigma", "1", "--dt", "0.1",
                 "--N", "1000", "--k", "2", "--out", str(tmp_path / "d.csv")]) == 5
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hypoestim", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
