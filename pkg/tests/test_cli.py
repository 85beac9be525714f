import json
import subprocess
import sys

import numpy as np
import pytest

from bosoncert.cli import main
from bosoncert.distributions import load_distribution
from bosoncert.interferometer import load_interferometer
from bosoncert.sampling import load_sample
from bosoncert.stats import load_report


def run_ok(capsys, *argv):
    assert main(list(argv)) == 0
    return capsys.readouterr().out


def test_full_pipeline(tmp_path, capsys):
    uni = tmp_path / "u.json"
    out = run_ok(capsys, "gen-unitary", "--m", "6", "--seed", "3", "--out", str(uni))
    assert str(uni) in out
    assert load_interferometer(uni).m == 6

    tq = tmp_path / "tq.bsd"
    td = tmp_path / "td.bsd"
    out = run_ok(capsys, "simulate", "--unitary", str(uni), "--n", "3", "--out", str(tq))
    assert "56 states" in out
    run_ok(capsys, "simulate", "--unitary", str(uni), "--law", "distinguishable",
           "--input", "1,1,1,0,0,0", "--out", str(td))
    assert abs(load_distribution(td).probs.sum() - 1.0) < 1e-9

    s1 = tmp_path / "s1.csv"
    s2 = tmp_path / "s2.csv"
    s3 = tmp_path / "s3.csv"
    run_ok(capsys, "sample", "--table", str(tq), "--n-m", "2000",
           "--master-seed", "7", "--role", "s1", "--out", str(s1))
    run_ok(capsys, "sample", "--table", str(tq), "--n-m", "2000",
           "--master-seed", "7", "--role", "quantum2", "--out", str(s2))
    run_ok(capsys, "sample", "--table", str(td), "--n-m", "2000",
           "--master-seed", "7", "--role", "distinguishable", "--out", str(s3))
    assert load_sample(s1).n_m == 2000

    part = tmp_path / "part.json"
    out = run_ok(capsys, "coarsegrain", "--sample", str(s1),
                 "--target-n-b", "5", "--out", str(part))
    assert "bins" in out

    rep = tmp_path / "rep.json"
    out = run_ok(capsys, "certify", "--sample1", str(s1), "--sample2", str(s2),
                 "--partition", str(part), "--alpha", "0.01", "--out", str(rep))
    payload = json.loads(out)
    assert set(payload) >= {"chi2", "df", "p_value", "alpha", "pass", "n_b"}
    assert load_report(rep).p_value == payload["p_value"]

    # same partition, distinguishable target: just a well-formed verdict
    out = run_ok(capsys, "certify", "--sample1", str(s1), "--sample2", str(s3),
                 "--partition", str(part))
    assert isinstance(json.loads(out)["pass"], bool)


def test_ion_chain_command(tmp_path, capsys):
    uni = tmp_path / "ion.json"
    pos = tmp_path / "pos.txt"
    out = run_ok(capsys, "ion-chain", "--m", "4", "--freq-z-hz", "3e4",
                 "--freq-x-hz", "4e6", "--tau-s", "1e-4",
                 "--positions-out", str(pos), "--out", str(uni))
    assert "4 ions" in out
    assert load_interferometer(uni).m == 4
    positions = np.loadtxt(pos)
    assert positions.shape == (4,)
    assert np.all(np.diff(positions) > 0)


def test_uniform_sampling_needs_shape(tmp_path, capsys):
    out_path = tmp_path / "u.csv"
    run_ok(capsys, "sample", "--uniform", "--m", "8", "--n", "2", "--n-m", "100",
           "--master-seed", "1", "--out", str(out_path))
    assert load_sample(out_path).n_m == 100
    assert main(["sample", "--uniform", "--n", "2", "--n-m", "100",
                 "--master-seed", "1", "--out", str(out_path)]) == 2
    assert main(["sample", "--n-m", "100", "--master-seed", "1",
                 "--out", str(out_path)]) == 2


def test_campaign_and_plots(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"system": {"kind": "haar", "m": 6, "seed": 3}, "n": 2}))
    outdir = tmp_path / "campaign"
    out = run_ok(capsys, "campaign", "--config", str(config), "--outdir", str(outdir),
                 "--n-m", "800", "--n-s", "4", "--targets", "quantum2,uniform",
                 "--target-n-b", "4", "--master-seed", "9", "--system-seed", "4",
                 "--workers", "1")
    assert "quantum2@4: pass" in out
    assert "report:" in out
    report = json.loads((outdir / "report.json").read_text())
    assert report["config"]["system"]["seed"] == 4
    assert report["config"]["n_m"] == 800

    out = run_ok(capsys, "emit-plots", "--outdir", str(outdir))
    assert out.count("wrote") == 3
    assert (outdir / "figures" / "pvalue_hist.csv").is_file()


def test_validation_failures_exit_2(tmp_path, capsys):
    assert main(["simulate", "--unitary", str(tmp_path / "missing.json"),
                 "--n", "2", "--out", str(tmp_path / "t.bsd")]) == 2

    uni = tmp_path / "u.json"
    run_ok(capsys, "gen-unitary", "--m", "4", "--seed", "1", "--out", str(uni))
    assert main(["simulate", "--unitary", str(uni), "--n", "5",
                 "--out", str(tmp_path / "t.bsd")]) == 2
    assert main(["simulate", "--unitary", str(uni), "--input", "1,1",
                 "--out", str(tmp_path / "t.bsd")]) == 2
    assert main(["simulate", "--unitary", str(uni),
                 "--out", str(tmp_path / "t.bsd")]) == 2

    config = tmp_path / "broken.json"
    config.write_text("{not json")
    assert main(["campaign", "--config", str(config), "--outdir", str(tmp_path / "o")]) == 2
    config.write_text(json.dumps({"system": {"kind": "haar", "m": 6, "seed": 3},
                                  "n": 2, "targets": ["noisy:timing:0.1"]}))
    assert main(["campaign", "--config", str(config), "--outdir", str(tmp_path / "o")]) == 2
    capsys.readouterr()


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-c", "from bosoncert.cli import main; raise SystemExit(main(['--help']))"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert "certify" in proc.stdout
