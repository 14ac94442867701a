import csv
import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from levyren.harness import (ConfigError, RunConfig, emit_results, load_config, main, parse_number, parse_range,
                             write_manifest)


def test_parse_range():
    assert parse_range("0..4") == [0, 1, 2, 3, 4]
    assert parse_range("1,3") == [1, 3] and parse_range("2") == [2]
    for bad in ("4..1", "a..b", "1..2..3"):
        with pytest.raises(ConfigError):
            parse_range(bad)


@given(st.integers(0, 20), st.integers(0, 20))
def test_parse_range_roundtrip(lo, span):
    assert parse_range(f"{lo}..{lo + span}") == list(range(lo, lo + span + 1))


def test_parse_number():
    assert parse_number("1/3") == Fraction(1, 3) and parse_number("0.25") == Fraction(1, 4)
    with pytest.raises(ConfigError):
        parse_number("x")


def test_config_validation_and_caps():
    cfg = RunConfig(max_edges=20, k_max=20, m_max=20).validate()
    assert (cfg.max_edges, cfg.k_max, cfg.m_max) == (8, 6, 6)
    for bad in (dict(family="poisson"), dict(alpha="-1"), dict(d=4), dict(k=7), dict(m=7), dict(n=-1),
                dict(samples=0), dict(form="cubic"), dict(levels="0..13")):
        with pytest.raises(ConfigError):
            RunConfig(**bad).validate()
    with pytest.raises(ConfigError):
        RunConfig(m_range="0..3").validate().checked_m_list()
    assert RunConfig().digest() == RunConfig(out="elsewhere").digest() != RunConfig(seed=1).digest()


def test_load_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"family": "gaussian", "k": 4}))
    assert load_config(str(path)) == {"family": "gaussian", "k": 4}
    assert load_config(None) == {}
    path.write_text(json.dumps({"colour": "red"}))
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_emit_results(tmp_path):
    rows = [{"a": Fraction(17, 8), "b": 1.0 / 3, "c": True}, {"a": 2, "b": None, "c": False}]
    jpath, cpath = emit_results(rows, ["a", "b", "c"], tmp_path, "demo")
    lines = [json.loads(l) for l in jpath.read_text().splitlines()]
    assert lines[0] == {"a": "17/8", "b": 0.333333333333, "c": True}
    assert lines[1]["a"] == 2 and lines[1]["b"] is None
    table = list(csv.reader(cpath.open()))
    assert table == [["a", "b", "c"], ["2.125", "0.333333333333", "true"], ["2", "", "false"]]
    _, empty = emit_results([], ["x"], tmp_path, "empty")
    assert empty.read_text() == "x\n"


def test_manifest(tmp_path):
    cfg = RunConfig(seed=7).validate()
    data = json.loads(write_manifest(cfg, "wick", tmp_path).read_text())
    assert data["seed"] == 7 and data["command"] == "wick" and data["config_hash"] == cfg.digest()
    assert set(data["versions"]) >= {"levyren", "numpy", "scipy", "sympy", "python"}


def test_wick_cli(tmp_path, capsys):
    code = main(["wick", "--family", "gaussian", "--k", "4", "--n", "0", "--out", str(tmp_path)])
    assert code == 0
    assert "[1, 0, -6, 0, 3]" in capsys.readouterr().out
    rows = [json.loads(l) for l in (tmp_path / "wick.jsonl").read_text().splitlines()]
    assert [r["coefficient"] for r in rows] == ["1", "0", "-6", "0", "3"]
    assert (tmp_path / "manifest.json").exists()


@pytest.mark.parametrize("argv", [
    ["verify-compat", "--family", "gamma", "--alpha", "1", "--beta", "1", "--levels", "0..4"],
    ["cond-exp", "--family", "gamma", "--n", "1", "--m", "2", "--k", "3"],
    ["kinetic-ren", "--family", "gamma", "--n", "1", "--m", "1"],
    ["graph-expand", "--n", "1", "--m", "1", "--k", "2"],
    ["mass-eff", "--k", "2", "--m-max", "4"],
    ["mc-check", "--samples", "20000", "--workers", "2"],
])
def test_subcommands_succeed(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == 0
    stem = argv[0]
    assert (tmp_path / f"{stem}.jsonl").exists() and (tmp_path / f"{stem}.csv").exists()


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("LEVYREN_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["wick", "--family", "gamma", "--k", "2"]) == 0
    assert (tmp_path / "env" / "wick.csv").exists()


def test_config_file_and_override(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"family": "gaussian", "k": 3, "out": str(tmp_path / "o")}))
    assert main(["wick", "--config", str(path), "--k", "2"]) == 0
    rows = (tmp_path / "o" / "wick.jsonl").read_text().splitlines()
    assert len(rows) == 3


def test_exit_codes(tmp_path):
    out = ["--out", str(tmp_path)]
    assert main(["nonsense"]) == 2
    assert main([]) == 2
    assert main(["wick", "--k", "9"] + out) == 2
    assert main(["wick", "--k", "two"] + out) == 2
    assert main(["cond-exp", "--family", "cauchy"] + out) == 2
    assert main(["graph-expand", "--family", "gaussian"] + out) == 2
    # on m = 2..4 the single-edge classes at stratum 1 miss their power count
    assert main(["divergence-scan", "--d", "2", "--k", "1", "--m-range", "2..4"] + out) == 1
