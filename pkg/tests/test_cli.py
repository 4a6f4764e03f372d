import json

import numpy as np
import pytest

from fbmwalk.cli import (
    EXIT_OK,
    EXIT_USAGE,
    ConfigError,
    build_config,
    main,
    read_path,
    run_verify,
)
from fbmwalk.grid import bernoulli_stream
from fbmwalk.special import scaling_constant_c, zeta
from fbmwalk.walk import auto_grid, path_incremental


def test_generate_half_five_rows(tmp_path):
    out = tmp_path / "w.csv"
    assert main(["generate", "--hurst", "0.5", "--n", "4", "--seed", "7", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x" and len(lines) == 6
    assert lines[1] == "0,0"
    meta = json.loads((tmp_path / "w.meta.json").read_text())
    assert meta["hurst"] == 0.5 and meta["seed"] == 7 and meta["n_per_unit"] == 4
    assert {"past_horizon_steps", "scale", "generator_form", "version"} <= set(meta)


def test_generate_is_byte_identical(tmp_path):
    args = ["generate", "--hurst", "0.3", "--n", "16", "--seed", "3", "--paths", "2"]
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    assert main(args + ["--out", str(a / "p.csv")]) == EXIT_OK
    assert main(args + ["--out", str(b / "p.csv")]) == EXIT_OK
    for name in ("p_0000.csv", "p_0001.csv", "p.meta.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_generate_scaled_is_c_times_raw(tmp_path):
    base = ["generate", "--hurst", "0.7", "--n", "16", "--seed", "5"]
    main(base + ["--out", str(tmp_path / "raw.csv")])
    main(base + ["--scale", "c_H", "--out", str(tmp_path / "c.csv")])
    _, raw = read_path(tmp_path / "raw.csv")
    _, scaled = read_path(tmp_path / "c.csv")
    np.testing.assert_allclose(scaled, scaling_constant_c(0.7) * raw, rtol=1e-15, atol=0)


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_output_round_trips(tmp_path, fmt):
    out = tmp_path / f"p.{fmt}"
    main(["generate", "--hurst", "0.35", "--n", "8", "--horizon", "2", "--seed", "1",
          "--format", fmt, "--out", str(out)])
    t, x = read_path(out, fmt)
    grid = auto_grid(0.35, 8, 2.0)
    ref = path_incremental(0.35, bernoulli_stream(1, grid))
    assert np.array_equal(t, grid.times)
    assert np.array_equal(x, ref.values)


def test_csv_format_details(tmp_path):
    out = tmp_path / "p.csv"
    main(["generate", "--hurst", "0.6", "--n", "4", "--out", str(out)])
    raw = out.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert all(len(line.split(b",")) == 2 for line in raw.splitlines())


def test_generate_unwritable_path(tmp_path):
    out = tmp_path / "missing" / "p.csv"
    assert main(["generate", "--hurst", "0.6", "--n", "4", "--out", str(out)]) != EXIT_OK


@pytest.mark.parametrize("argv", [
    ["constants", "--hurst", "1.0"],
    ["constants", "--hurst", "0"],
    ["generate", "--hurst", "0.6", "--n", "0"],
    ["generate", "--hurst", "0.6", "--horizon", "1.1", "--n", "4"],
    ["generate", "--hurst", "0.6", "--paths", "0"],
    ["generate", "--hurst", "0.6", "--past-steps", "-3"],
    ["generate"],
])
def test_invalid_config_exit_two(argv, caplog):
    assert main(argv) == EXIT_USAGE
    assert caplog.records


def test_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--scale", "bogus", "--hurst", "0.6"])
    assert exc.value.code == EXIT_USAGE


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"hurst": 0.3, "n": 32, "paths": 4}))
    cfg = build_config("generate", {"n": 8}, str(cfg_file))
    assert (cfg.hurst, cfg.n, cfg.paths, cfg.horizon, cfg.past_steps, cfg.scale) == \
        (0.3, 8, 4, 1.0, "auto", "raw")
    cfg_file.write_text(json.dumps({"hurst": 0.3, "colour": "red"}))
    with pytest.raises(ConfigError, match="colour"):
        build_config("generate", {}, str(cfg_file))


def test_defaults():
    cfg = build_config("generate", {"hurst": 0.7})
    assert (cfg.n, cfg.horizon, cfg.past_steps, cfg.paths, cfg.scale) == (256, 1.0, "auto", 1, "raw")


def test_verify_routing_super():
    rep = run_verify(build_config("verify", {"hurst": 0.75, "n": 16, "paths": 3}))
    assert "lemma2" in rep["sections"] and "lemma3" not in rep["sections"]
    assert rep["passed"]
    assert all({"check", "value", "bound", "margin", "passed"} <= set(e) for e in rep["checks"])


def test_verify_lemma3_hundred_seeds():
    rep = run_verify(build_config("verify", {"hurst": 0.25, "n": 16, "paths": 100}))
    lemma3 = [e for e in rep["checks"] if e["check"] == "lemma3"]
    assert len(lemma3) == 100 and all(e["passed"] for e in lemma3)
    assert "lemma2" not in rep["sections"]


def test_verify_half_only_degeneracy(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "--hurst", "0.5", "--n", "16", "--paths", "4", "--out", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["sections"] == ["degeneracy"]
    assert {e["check"] for e in rep["checks"]} == {"degeneracy_H_half", "quadratic_variation"}


def test_converge_underresourced_run(tmp_path, caplog):
    out = tmp_path / "c.json"
    code = main(["converge", "--hurst", "0.3", "--n", "64", "--paths", "10",
                 "--study-n", "8,16,32", "--out", str(out)])
    assert code == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["warnings"] and "variance" in rep and "covariance" in rep
    assert any("gate skipped" in r.message for r in caplog.records)


def test_constants_examples(capsys):
    assert main(["constants", "--hurst", "0.5", "--format", "jsonl"]) == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert d["K_H"] == 1.0 and d["c_H"] == pytest.approx(1.0, rel=1e-15)
    main(["constants", "--hurst", "0.25", "--format", "jsonl"])
    d = json.loads(capsys.readouterr().out)
    assert d["K_H"] == pytest.approx(0.25 * zeta(1.25), rel=1e-14)
    assert d["zeta(3/2-H)"] == zeta(1.25)
    main(["constants", "--hurst", "0.7"])
    text = capsys.readouterr().out
    assert f"zeta(3-2H) = {zeta(1.6)!r}" in text


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip()
