import json

from seqgen.io import CSV_HEADER, manifest_path, read_csv, verify_manifest, write_csv, write_manifest


def test_csv_roundtrip_and_header(tmp_path):
    out = write_csv(tmp_path / "a.csv", ("t", "x"), [(1, 0.1), (2, float("nan"))], comments=["note"])
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert lines[1] == "# note"
    cols, rows = read_csv(out)
    assert cols == ["t", "x"]
    assert rows == [["1", "0.1"], ["2", "nan"]]


def test_csv_deterministic(tmp_path):
    rows = [(i, i / 7) for i in range(20)]
    a = write_csv(tmp_path / "a.csv", ("i", "v"), rows).read_bytes()
    b = write_csv(tmp_path / "b.csv", ("i", "v"), rows).read_bytes()
    assert a == b


def test_manifest_digest(tmp_path):
    out = write_csv(tmp_path / "run.csv", ("t",), [(1,)])
    mp = write_manifest(out, "walk", {"horizon": 4, "out": out}, 3, "0.1.0", 0.5)
    assert mp == manifest_path(out) and mp.name == "run.manifest.json"
    doc = json.loads(mp.read_text())
    assert doc["subcommand"] == "walk" and doc["seed"] == 3
    assert doc["params"]["out"] == str(out)
    assert verify_manifest(mp)
    out.write_text("tampered\n")
    assert not verify_manifest(mp)
