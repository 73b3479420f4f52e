from __future__ import annotations

import json

import pytest

from ghostlevel.cli import main, parse_ns, UsageError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    rows = [json.loads(line) for line in out.splitlines() if line.startswith("{")]
    return code, rows, out


def test_level_su3(tmp_path, capsys):
    code, rows, _ = run(capsys, "level", "--group", "SU(3)", "--n", "3", "--char", "0", "--out", str(tmp_path))
    assert code == 0
    assert rows[0]["lower"] == rows[0]["upper"] == 5
    assert (tmp_path / "level_SU3_n3_c0.json").exists()


def test_level_su2_char2(tmp_path, capsys):
    code, rows, _ = run(capsys, "level", "--group", "SU(2)", "--n", "2", "--char", "2", "--out", str(tmp_path))
    assert code == 0 and rows[0]["lower"] == 2 and rows[0]["exact"]


def test_level_n1(tmp_path, capsys):
    code, rows, _ = run(capsys, "level", "--group", "SU(2)", "--n", "1", "--out", str(tmp_path))
    assert code == 0 and rows[0]["lower"] == rows[0]["upper"] == 1


def test_tor_and_ext(tmp_path, capsys):
    code, rows, _ = run(capsys, "tor", "--group", "SU(2)", "--n", "2", "--out", str(tmp_path))
    assert code == 0 and rows[0]["total_dim"] == 2 and rows[0]["degrees"] == [0, 3]
    code, rows, _ = run(capsys, "ext", "--group", "SU(3)", "--n", "2", "--out", str(tmp_path))
    assert code == 0 and rows[0]["generator_degree"] == -8 and rows[0]["one_dimensional"]


def test_loop_sp2(tmp_path, capsys):
    code, rows, _ = run(capsys, "loop", "--group", "Sp(2)", "--trials", "100", "--seed", "7", "--out", str(tmp_path))
    assert code == 0
    assert rows[0]["free"] and rows[0]["trials"] == rows[0]["null_homotopic"] == 100


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"groups": ["SU(2)"], "n": "2-3", "out": str(tmp_path / "c")}))
    code, rows, _ = run(capsys, "level", "--config", str(cfg))
    assert code == 0 and [r["n"] for r in rows] == [2, 3]
    code, rows, _ = run(capsys, "level", "--config", str(cfg), "--n", "4")
    assert code == 0 and [r["n"] for r in rows] == [4]


def test_usage_errors(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["level", "--group", "SO(5)", "--char", "2", "--out", out]) == 2
    assert main(["level", "--group", "E8", "--out", out]) == 2
    assert main(["level", "--group", "SU(3)", "--n", "4", "--D", "30", "--out", out]) == 2
    assert main(["level", "--n", "2", "--out", out]) == 2
    assert main(["level", "--group", "SU(2)", "--n", "x", "--out", out]) == 2
    assert main(["ghost-chain", "--group", "SU(2)", "--n", "1", "--out", out]) == 2
    assert main(["frobnicate"]) == 2
    assert main([]) == 2
    capsys.readouterr()


def test_parse_ns():
    assert parse_ns("3") == [3]
    assert parse_ns("2,3") == [2, 3]
    assert parse_ns("2-4") == [2, 3, 4]
    with pytest.raises(UsageError):
        parse_ns("4-2")


def test_verify_and_tamper(tmp_path, capsys):
    for cmd in ("level", "tor", "ext", "ghost-chain", "em"):
        assert main([cmd, "--group", "SU(2)", "--n", "2", "--out", str(tmp_path)]) == 0
    assert main(["loop", "--group", "SU(2)", "--trials", "5", "--out", str(tmp_path)]) == 0
    files = sorted(str(p) for p in tmp_path.glob("*.json"))
    assert len(files) == 6
    assert main(["--verify", *files]) == 0
    capsys.readouterr()

    doc = json.loads((tmp_path / "level_SU2_n2_c0.json").read_text())
    doc["result"]["lower"] = 3
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(doc))
    assert main(["--verify", str(bad)]) == 1
    assert "FAIL" in capsys.readouterr().out

    doc = json.loads((tmp_path / "tor_SU2_n2_c0.json").read_text())
    doc["result"]["total_dim"] = 3
    bad.write_text(json.dumps(doc))
    assert main(["--verify", str(bad)]) == 1
    bad.write_text("{not json")
    assert main(["--verify", str(bad)]) == 1


def test_rerun_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["ghost-chain", "--group", "SU(3)", "--n", "2-3", "--out", str(d)]) == 0
        assert main(["loop", "--group", "SU(2)", "--trials", "20", "--seed", "4", "--out", str(d)]) == 0
    capsys.readouterr()
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
