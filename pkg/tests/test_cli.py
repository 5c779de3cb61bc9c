import json
import subprocess
import sys

import numpy as np
import pytest

from seqgen.cli import main
from seqgen.io import read_csv, verify_manifest


def run(*argv):
    return main([str(a) for a in argv])


def test_walk_happy_path(tmp_path):
    out = tmp_path / "w.csv"
    assert run("walk", "--gamma-l", 0.25, "--gamma-r", 0.25, "--horizon", 1024, "--out", out) == 0
    cols, rows = read_csv(out)
    assert cols == ["t", "p0", "mean", "msd"]
    assert len(rows) == 1024
    assert float(rows[0][1]) == pytest.approx(0.75)
    mp = tmp_path / "w.manifest.json"
    doc = json.loads(mp.read_text())
    assert doc["subcommand"] == "walk" and doc["params"]["horizon"] == 1024
    assert verify_manifest(mp)


def test_walk_stride(tmp_path):
    out = tmp_path / "w.csv"
    run("walk", "--gamma-l", 0.3, "--gamma-r", 0.2, "--horizon", 100, "--steps", 10, "--out", out)
    _, rows = read_csv(out)
    assert [int(r[0]) for r in rows] == list(range(10, 101, 10))


def test_unknown_flag_exit_2():
    r = subprocess.run([sys.executable, "-m", "seqgen.cli", "walk", "--bogus"],
                       capture_output=True, text=True)
    assert r.returncode == 2
    assert "usage" in r.stderr


def test_validation_exit_2_before_work(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert run("walk", "--gamma-l", 0.7, "--gamma-r", 0.7, "--out", out) == 2
    assert run("motzkin", "--n", 10, "--cut", 10, "--out", out) == 2
    assert run("pda", "--grammar", "balanced01", "--n", 8, "--schedule", "push-pop", "--out", out) == 2
    assert run("conveyor", "--mode", "three", "--n", 4, "--out", out) == 2
    assert run("walk", "--gamma-l", 0.2, "--gamma-r", 0.2, "--out", tmp_path / "no" / "x.csv") == 2
    assert not out.exists()


def test_domain_error_exit_1(tmp_path, capsys):
    out = tmp_path / "x.csv"
    bad = tmp_path / "bad.cnf"
    bad.write_text("S -> 'a' @ 0.5\n")
    assert run("pda", "--grammar", bad, "--n", 4, "--out", out) == 1
    assert "GrammarError" in capsys.readouterr().err


def test_motzkin_subcommand(tmp_path):
    out = tmp_path / "m.csv"
    assert run("motzkin", "--n", 12, "--colors", 1, "--out", out) == 0
    cols, rows = read_csv(out)
    assert cols == ["l", "entropy", "renyi2", "height_mean"]
    assert len(rows) == 11
    assert run("motzkin", "--n", 12, "--colors", 2, "--weights", "0.2,0.4,0.2", "--cut", 5, "--out", out) == 0
    assert len(read_csv(out)[1]) == 1


def test_channel_subcommand(tmp_path):
    from seqgen.channel import channel_to_json, random_channel, renyi_entropy_channel

    ch = random_channel(3, 2, rng=1)
    f = tmp_path / "c.json"
    f.write_text(channel_to_json(ch, start=0, final=2))
    out = tmp_path / "c.csv"
    assert run("channel", "--file", f, "--n", 6, "--out", out) == 0
    _, rows = read_csv(out)
    assert float(rows[2][1]) == pytest.approx(renyi_entropy_channel(ch, 0, 2, 6, 3, 2), abs=1e-12)
    assert run("channel", "--file", f, "--n", 6, "--cut", 2, "--order", "inf", "--out", out) == 0


def test_channel_bundled_name(tmp_path):
    from seqgen.channel import channel_from_json, renyi_entropy_channel
    from importlib import resources

    ch, _ = channel_from_json(resources.files("seqgen").joinpath("data", "random3.json").read_text())
    out = tmp_path / "r3.csv"
    assert run("channel", "--file", "random3", "--n", 8, "--cut", 4, "--out", out) == 0
    _, rows = read_csv(out)
    assert float(rows[0][1]) == pytest.approx(renyi_entropy_channel(ch, 0, 0, 8, 4, 2), abs=1e-12)
    assert run("channel", "--file", "nosuch", "--n", 8, "--out", out) == 2


def test_pda_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run("--seed", 11, "pda", "--grammar", "motzkin1", "--n", "8,16", "--trials", 300, "--out", out) == 0
    assert a.read_bytes() == b.read_bytes()
    cols, rows = read_csv(a)
    assert cols == ["n", "accepted", "trials", "rate", "ci_low", "ci_high"]


def test_conveyor_subcommands(tmp_path, capsys):
    out = tmp_path / "g.csv"
    assert run("conveyor", "--mode", "two", "--n", 6, "--colors", 1, "--audit", "--trajectories", 20, "--out", out) == 0
    assert "audit passed" in capsys.readouterr().out
    cols, rows = read_csv(out)
    assert cols == ["t", "nontrivial_gates", "active_width"]
    assert run("conveyor", "--mode", "three", "--grammar", "balanced01", "--n", 4, "--out", out) == 0
    assert run("conveyor", "--mode", "two", "--n", 40, "--trajectories", 10, "--out", out) == 0


def test_switch_subcommand(tmp_path):
    out = tmp_path / "s.csv"
    assert run("switch", "--aux", "diffusive2d", "--t", 1000, "--trials", 100, "--seed", 4, "--out", out) == 0
    cols, rows = read_csv(out)
    assert cols == ["t", "mean_x", "msd", "flips"]
    assert all(float(r[1]) >= 0 for r in rows)
    assert run("switch", "--trap-mu", 0.5, "--t", 1000, "--trials", 100, "--out", out) == 0


def test_repro_quick(capsys):
    assert run("repro", "--claim", "return-sqrt", "--quick") == 0
    assert "PASS" in capsys.readouterr().out
