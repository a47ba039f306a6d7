import csv
import json
import subprocess
import sys

import pytest

from skewlab.cli import main
from skewlab.mobius import read_mutbl


def table(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cf_silver(capsys):
    code, out, _ = run(capsys, "cf", "--alpha", "surd:-1,1,2", "--depth", "5")
    assert code == 0
    rows = table(out)
    assert [r["q_k"] for r in rows] == ["1", "2", "5", "12", "29", "70"]
    assert all(float(r["dist_low"]) <= float(r["dist"]) <= float(r["dist_high"]) for r in rows)
    assert out.splitlines()[0] == "# artifact 0.1.0"
    assert out.splitlines()[1] == "# command cf"


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, )[0] == 64
    assert run(capsys, "frobnicate")[0] == 64
    assert run(capsys, "cf")[0] == 64
    empty = tmp_path / "empty.cfg"
    empty.write_text("")
    assert run(capsys, "--config", str(empty))[0] == 64


def test_configuration_errors(capsys, tmp_path):
    code, _, err = run(capsys, "disjoint", "--sieve", str(tmp_path / "missing.mutbl"))
    assert code == 3 and "not found" in err
    assert run(capsys, "cf", "--alpha", "nope")[0] == 3
    bad = tmp_path / "bad.cfg"
    bad.write_text("command=cf\nalpha=surd:-1,2,5\nwibble=3\n")
    assert run(capsys, "--config", str(bad))[0] == 3


def test_verification_failure_exit(capsys):
    code, out, err = run(capsys, "cocycle", "--check-coboundary", "--tol", "1e-30")
    assert code == 2 and "witness" in err
    assert table(out)[0]["verdict"] == "fail"


def test_rerun_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["orbit", "--n", "50", "--stride", "5", "--x0", "0.25,0.5", "--K", "8", "--no-plot"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(table(a.read_text())) == 11


def test_config_precedence_and_manifest(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ncommand=cf\nalpha=surd:-1,1,2\ndepth=3\n")
    out = tmp_path / "cf.csv"
    assert main(["--config", str(cfg), "--out", str(out), "--no-plot"]) == 0
    assert len(table(out.read_text())) == 4
    assert main(["cf", "--config", str(cfg), "--depth", "6", "--out", str(out), "--no-plot"]) == 0
    rows = table(out.read_text())
    assert len(rows) == 7 and rows[-1]["q_k"] == "169"
    rec = json.loads((tmp_path / "cf.csv.manifest.jsonl").read_text())
    assert set(rec) == {"command", "config", "config_hash", "seed", "version", "wall_time", "verdicts",
                        "exit_status"}
    assert rec["config"]["depth"] == 6 and rec["exit_status"] == 0
    assert f"# config_hash {rec['config_hash']}" in out.read_text()
    assert not (tmp_path / "cf.png").exists()


def test_plot_written(tmp_path):
    out = tmp_path / "cf.csv"
    assert main(["cf", "--alpha", "surd:-1,2,5", "--depth", "8", "--out", str(out)]) == 0
    png = tmp_path / "cf.png"
    assert png.exists() and png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_config_hash_tracks_inputs(capsys, tmp_path):
    def header(*argv):
        _, out, _ = run(capsys, *argv)
        return next(l for l in out.splitlines() if l.startswith("# config_hash"))
    base = header("cf", "--alpha", "surd:-1,2,5")
    assert header("cf", "--alpha", "surd:-1,2,5", "--threads", "4") == base
    assert header("cf", "--alpha", "surd:-1,2,5", "--depth", "11") != base


def test_sieve_and_disjoint(capsys, tmp_path):
    mt = tmp_path / "mu.mutbl"
    code, _, err = run(capsys, "sieve", "--n", "100000", "--out", str(mt))
    assert code == 0
    assert read_mutbl(mt).limit == 10**5
    code, out, _ = run(capsys, "disjoint", "--sieve", str(mt), "--b", "0", "--checkpoints", "1e3..1e5", "--K", "8")
    assert code == 0
    rows = table(out)
    assert [r["N"] for r in rows] == ["1000", "10000", "100000"]
    assert float(rows[-1]["re"]) == pytest.approx(-48e-5)


def test_cocycle_sets(capsys):
    code, out, _ = run(capsys, "cocycle", "--sets", "--alpha", "rule:liouville:5", "--alpha-depth", "9")
    rows = table(out)
    assert code == 0
    assert [r["in_E"] for r in rows] == ["in"] * 7 + ["undecided"]
    assert rows[1]["multipliers"] == "1..32"


def test_corpus_listing(capsys):
    code, out, _ = run(capsys, "corpus")
    assert code == 0
    assert [r["name"] for r in table(out)] == ["golden-smooth", "silver-smooth", "liouville-smooth",
                                              "furstenberg", "rational"]


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "skewlab.cli", "cf", "--alpha", "surd:-1,2,5", "--depth", "2"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "# command cf" in res.stdout


def test_help_and_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0 and "rigidity" in capsys.readouterr().out
    with pytest.raises(SystemExit):
        main(["--version"])
    assert "lab 0.1.0" in capsys.readouterr().out
