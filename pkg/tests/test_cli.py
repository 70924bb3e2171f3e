import json

import pytest

from braidlab.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_arguments_is_usage_error(capsys):
    code, _, err = _run(capsys)
    assert code == 1 and "usage" in err.lower()


def test_unknown_flag(capsys):
    assert _run(capsys, "area", "--kk", "2")[0] == 1


def test_area_k2(capsys):
    code, out, _ = _run(capsys, "area", "--k", "2", "--gamma", "3", "--format", "json")
    assert code == 0
    rows = json.loads(out)
    eps_bar = next(r["value"] for r in rows if r["quantity"] == "eps_bar")
    assert eps_bar == pytest.approx(1 / 9, abs=1e-6)


def test_threshold_beta(capsys):
    code, out, _ = _run(capsys, "threshold", "--k", "6", "--eps", "0.353553", "--mode", "beta", "--tol", "1e-4")
    assert code == 0
    header, row = out.strip().splitlines()[:2]
    vals = dict(zip(header.split(","), row.split(",")))
    assert float(vals["value"]) == pytest.approx(0.88, abs=0.01)
    assert "tol" in vals


def test_numerical_error_exit_code(capsys):
    # no admissible root of the trial entropy here
    assert _run(capsys, "area", "--k", "3", "--gamma", "2")[0] == 2


def test_rate(capsys):
    code, out, _ = _run(capsys, "rate", "--k", "3", "--gamma", "6", "--N", "1", "--w", "1", "--depth", "8",
                        "--format", "json")
    assert code == 0 and json.loads(out)[0]["value"] == pytest.approx(4.0)


def test_graph_encode_decode_roundtrip(tmp_path, capsys):
    g, c, f, o = (str(tmp_path / n) for n in ("g.json", "c.csv", "f.csv", "o.json"))
    assert _run(capsys, "gen-graph", "--k", "3", "--m0", "40", "--gamma", "3", "--seed", "4", "--out", g)[0] == 0
    assert _run(capsys, "encode", "--graph", g, "--alpha", "1.5", "--seed", "2", "--out", c, "--flows-out", f)[0] == 0
    assert _run(capsys, "decode", "--graph", g, "--counters", c, "--fmin", "2", "--format", "json",
                "--out", o)[0] == 0
    rows = json.load(open(o))
    sizes = [int(l.split(",")[1]) for l in open(f).read().splitlines()[1:]]
    assert len(rows) == 40
    assert all(r["size"] == s for r, s in zip(rows, sizes) if r["decoded"])


def test_simulate_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"decoder": "bp", "k": 3, "m0": 100, "beta": 1.2, "trials": 3,
                               "dist": {"pmf": {"1": 1.0}}}))
    code, out, _ = _run(capsys, "simulate", "--config", str(cfg), "--format", "json")
    assert code == 0
    row = json.loads(out)  # a single row is emitted as a flat object
    assert row["ser"] == 0.0 and row["trials"] == 3 and row["seed"] == 0


def test_missing_file(capsys):
    assert _run(capsys, "decode", "--graph", "/nonexistent.json", "--counters", "x.csv")[0] == 1


def test_multilayer_spec(tmp_path, capsys):
    spec = tmp_path / "layers.json"
    spec.write_text(json.dumps([{"k": 3, "gamma": 4.233585, "d": 3}, {"k": 3, "gamma": 3.0, "d": 0}]))
    code, out, _ = _run(capsys, "multilayer", "--spec", str(spec), "--alpha", "1.5", "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert [r["layer"] for r in rows] == [1, 2] and rows[1]["satisfied"] is True
