from __future__ import annotations

import csv
import json

import pytest

from lacebounds.cli import main

M0_TEXT = "d = 1\nW = 4\nT = 3\nkernel = nn\np = 0.5\n"


@pytest.fixture
def model(tmp_path):
    def make(text=M0_TEXT, name="model.txt"):
        path = tmp_path / name
        path.write_text(text)
        return path
    return make


def test_twopoint_and_cache(model, tmp_path, caplog):
    out = tmp_path / "o"
    assert main(["twopoint", "--model", str(model()), "--out", str(out), "-v"]) == 0
    text = (out / "twopoint.csv").read_text()
    rows = list(csv.DictReader(text.splitlines()))
    row = next(r for r in rows if r["dsigma"] == "0" and r["dtau"] == "2")
    assert row["value"] == "0.12109375"
    with caplog.at_level("INFO"):
        assert main(["twopoint", "--model", str(model()), "--out", str(out), "-v"]) == 0
    assert "cache hit" in caplog.text
    assert (out / "twopoint.csv").read_text() == text


def test_twopoint_p_zero_and_mc(model, tmp_path):
    out = tmp_path / "o"
    assert main(["twopoint", "--model", str(model()), "--p", "0", "--out", str(out),
                 "--samples", "2000"]) == 0
    rows = list(csv.DictReader((out / "twopoint.csv").read_text().splitlines()))
    assert [(r["dsigma"], r["dtau"]) for r in rows if float(r["value"]) != 0] == [("0", "0")]
    assert (out / "twopoint_mc.csv").exists()


def test_diagrams(model, tmp_path):
    out = tmp_path / "o"
    assert main(["diagrams", "--model", str(model()), "--out", str(out), "--m", "1"]) == 0
    doc = json.loads((out / "diagrams.json").read_text())
    d = doc["diagrams"][0]
    assert d["m"] == 1.0 and d["T"] > 0 and d["W"][0]["value"] == 0.0
    assert main(["diagrams", "--model", str(model()), "--out", str(tmp_path / "z"), "--p", "0"]) == 0
    z = json.loads((tmp_path / "z" / "diagrams.json").read_text())["diagrams"]
    assert all(e["T"] == 0 and e["H"] == 0 for e in z)


def test_diagrams_cache_only_miss(model, tmp_path):
    assert main(["diagrams", "--model", str(model()), "--out", str(tmp_path / "o"), "--cache-only"]) == 2


@pytest.mark.parametrize("argv", [
    ["verify", "--model", "/does/not/exist"],
    ["diagrams", "--model", "MODEL", "--m", "0"],
    ["diagrams", "--model", "MODEL", "--ell", "3"],
    ["verify", "--model", "MODEL", "--bond-budget", "0"],
    ["sweep", "--model", "MODEL", "--p-grid", "x"],
    ["frobnicate"],
])
def test_config_errors(model, argv):
    argv = [str(model()) if a == "MODEL" else a for a in argv]
    assert main(argv) == 2


def test_bad_model_file(model, tmp_path):
    assert main(["twopoint", "--model", str(model("W = 4\n")), "--out", str(tmp_path)]) == 2


def test_verify_p_zero_exit0_and_deterministic(model, tmp_path):
    args = ["verify", "--model", str(model()), "--p", "0", "--skip-inclusions"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    assert (tmp_path / "a" / "timings.json").exists()
    assert json.loads(a)["skipped"] == []


def test_verify_oversized_exit3(model, tmp_path):
    big = model("d = 1\nW = 5\nT = 6\nkernel = nn\np = 0.5\n", "big.txt")
    out = tmp_path / "o"
    assert main(["verify", "--model", str(big), "--out", str(out), "--skip-inclusions"]) == 3
    doc = json.loads((out / "report.json").read_text())
    assert {s["family"] for s in doc["skipped"]} == {"lemma1", "lemma2"}
    assert doc["results"]


def test_sweep(model, tmp_path, caplog):
    out = tmp_path / "o"
    with caplog.at_level("WARNING"):
        assert main(["sweep", "--model", str(model()), "--out", str(out),
                     "--p-grid", "0.2,0.5,0.8,0.5", "--m", "1"]) == 0
    assert "duplicate" in caplog.text
    rows = list(csv.DictReader((out / "sweep.csv").read_text().splitlines()))
    assert [r["p"] for r in rows] == ["0.2", "0.5", "0.8"]
    Ts = [float(r["T"]) for r in rows]
    assert Ts == sorted(Ts) and all(r["monotone"] == "true" for r in rows)


def test_sweep_p_zero(model, tmp_path):
    out = tmp_path / "o"
    assert main(["sweep", "--model", str(model()), "--out", str(out), "--p-grid", "0"]) == 0
    rows = list(csv.DictReader((out / "sweep.csv").read_text().splitlines()))
    assert len(rows) == 1
    assert all(float(v) == 0.0 for k, v in rows[0].items() if k != "monotone")


def test_diagrams_cached_and_cache_only_hit(model, tmp_path, caplog):
    out, cache = tmp_path / "o", tmp_path / "c"
    base = ["diagrams", "--model", str(model()), "--cache-dir", str(cache), "-v"]
    assert main(base + ["--out", str(out)]) == 0
    first = (out / "diagrams.json").read_bytes()
    assert len(list(cache.glob("diagrams-*.json"))) == 3
    with caplog.at_level("INFO"):
        assert main(base + ["--out", str(out), "--cache-only"]) == 0
    assert "cache hit: diagrams-" in caplog.text
    assert (out / "diagrams.json").read_bytes() == first
