from __future__ import annotations

import json
from importlib import resources

import numpy as np
import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

from maxreg import jsonio
from maxreg.cli import DEFAULTS, load_law, main, parse_config, read_config_file
from maxreg.errors import ParseError, ShapeError, UsageError
from maxreg.examples import second_order_threshold
from maxreg.weighted_time import load_signal

SMALL = ["--m", "20", "--nt", "256"]


def schema_validator(name):
    root = resources.files("maxreg") / "schemas"
    docs = {p.name: json.loads(p.read_text()) for p in root.iterdir() if p.name.endswith(".json")}
    registry = Registry().with_resources((k, Resource.from_contents(v)) for k, v in docs.items())
    return Draft202012Validator(docs[name], registry=registry)


def test_parse_defaults():
    cfg = parse_config(["solve", "--example", "heat", "--nu", "1", "--nt", "1024", "--tmax", "20"])
    assert cfg.subcommand == "solve" and cfg.example == "heat"
    assert cfg.nu == 1.0 and cfg.nt == 1024 and cfg.tmax == 20.0
    assert cfg.m == DEFAULTS["m"] and cfg.rhs == "builtin:manufactured" and cfg.c0_check is True


def test_parse_precedence(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nnu = 2\nnt=512\nk-coeff = 1,2\n")
    cfg = parse_config(["solve", "--config", str(p), "--example", "heat", "--nu", "3"])
    assert cfg.nu == 3.0 and cfg.nt == 512 and cfg.k_coeff == [1.0, 2.0]
    cfg = parse_config(["solve", "--config", str(p), "--example", "heat"])
    assert cfg.nu == 2.0


def test_parse_errors(tmp_path):
    with pytest.raises(UsageError):
        parse_config(["solve"])
    with pytest.raises(UsageError, match="--nt"):
        parse_config(["solve", "--example", "heat", "--nt", "1000"])
    with pytest.raises(UsageError, match="--nu"):
        parse_config(["solve", "--example", "heat", "--nu", "-1"])
    with pytest.raises(UsageError, match="--m"):
        parse_config(["solve", "--example", "heat", "--m", "many"])
    with pytest.raises(UsageError):
        parse_config(["solve", "--example", "heat", "--law-file", "x.json"])
    p = tmp_path / "bad.cfg"
    p.write_text("nu = 2\ncolour = blue\n")
    with pytest.raises(UsageError, match="colour"):
        parse_config(["solve", "--config", str(p), "--example", "heat"])
    p.write_text("nu 2\n")
    with pytest.raises(ParseError):
        read_config_file(p, ("nu",))


def test_main_usage_exit_codes(capsys):
    assert main(["solve"]) == 2
    assert "--example" in capsys.readouterr().err
    assert main(["solve", "--example", "wave"]) == 2
    assert main(["frobnicate"]) == 2


def test_heat_example_passes(tmp_path, capsys):
    out = tmp_path / "heat"
    code = main(["example", "heat", "--m", "40", "--nt", "1024", "--out", str(out)])
    assert code == 0
    assert "PASS" in capsys.readouterr().out
    rep = json.loads((out / "report.json").read_text())
    assert rep["pass"] is True and rep["exact_error_rel"] <= 1e-3
    for name in ("u.csv", "v.csv", "f.csv", "g.csv", "conditions.json", "run.json", "refined/u.csv"):
        assert (out / name).exists(), name
    schema_validator("report.schema.json").validate(rep)
    schema_validator("conditions.schema.json").validate(json.loads((out / "conditions.json").read_text()))


def test_fractional_beta_out_of_range(tmp_path, capsys):
    code = main(["example", "fractional", "--beta", "1.5", *SMALL, "--out", str(tmp_path)])
    assert code == 2
    assert "(0, 1)" in capsys.readouterr().err


def test_second_order_below_threshold(tmp_path, capsys):
    thr = second_order_threshold(np.array([[1.0]]), np.array([[1.0]]))
    code = main(["example", "second-order", "--nu", "0.5", *SMALL, "--out", str(tmp_path)])
    assert code == 2
    err = capsys.readouterr().err
    assert f"{thr:.17g}" in err


def test_check_conditions(tmp_path, capsys):
    code = main(["check-conditions", "--example", "fractional", "--m", "10", "--samples-k", "6",
                 "--out", str(tmp_path)])
    assert code == 0
    d = json.loads((tmp_path / "conditions.json").read_text())
    assert d["c1"] == pytest.approx(1.0, abs=1e-12)
    schema_validator("conditions.schema.json").validate(d)
    assert json.loads(capsys.readouterr().out) == d


def test_verify_roundtrip_and_negative_control(tmp_path):
    out = tmp_path / "frac"
    assert main(["example", "fractional", "--m", "30", "--nt", "1024", "--out", str(out)]) == 0
    first = json.loads((out / "report.json").read_text())
    v = tmp_path / "verify"
    assert main(["verify", str(out), "--out", str(v)]) == 0
    again = json.loads((v / "report.json").read_text())
    first.pop("timing_ms"), again.pop("timing_ms")
    first.pop("exact_error_rel", None)
    assert again == first

    rough = tmp_path / "rough"
    assert main(["example", "fractional", "--m", "30", "--nt", "1024", "--rhs", "builtin:rough",
                 "--out", str(rough)]) in (0, 1)
    assert main(["verify", str(rough), "--beta-check", "1.0"]) == 1
    rep = json.loads((rough / "report.json").read_text())
    assert rep["pass"] is False and rep["membership"]["member"] is False
    schema_validator("report.schema.json").validate(rep)


def test_verify_missing_dir(tmp_path):
    assert main(["verify", str(tmp_path / "nothing")]) == 2


def test_outputs_are_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["example", "second-order", *SMALL, "--oracle", "--substeps", "2", "--out", str(out)]) in (0, 1)
        outs.append(out)
    for name in ("u.csv", "v.csv", "theta.csv", "conditions.json", "run.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    a, b = (json.loads((o / "report.json").read_text()) for o in outs)
    a.pop("timing_ms"), b.pop("timing_ms")
    assert jsonio.dumps(a) == jsonio.dumps(b)
    assert "oracle" in a and a["oracle"]["substeps"] == 2


def test_custom_law_file(tmp_path):
    law = {"name": "relax", "M": [[1]], "N00": [[0.5]], "N01": [[0]], "N10": [[0]], "N11": [[1]]}
    p = tmp_path / "law.json"
    p.write_text(json.dumps(law))
    out = tmp_path / "out"
    assert main(["solve", "--law-file", str(p), "--nt", "512", "--no-refine", "--out", str(out)]) in (0, 1)
    u = load_signal(out / "u.csv")
    assert u.dim == 1 and np.any(u.values != 0)
    loaded = load_law(p, beta=0.5)
    assert loaded.beta == 0.5 and loaded.name == "relax"

    # the rhs file must live on the problem grid
    assert main(["solve", "--law-file", str(p), "--nt", "256", "--rhs", str(out / "u.csv"),
                 "--out", str(tmp_path / "x")]) == 2


def test_law_file_errors(tmp_path):
    p = tmp_path / "law.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_law(p)
    p.write_text(json.dumps({"M": [[1]]}))
    with pytest.raises(ParseError):
        load_law(p)
    p.write_text(json.dumps({"M": [[1]], "N11": [[1]], "N01": [[1, 2]]}))
    with pytest.raises(ShapeError):
        load_law(p)


def test_kernel_flag(tmp_path):
    t = np.linspace(0, 10, 201)
    csv = tmp_path / "k.csv"
    np.savetxt(csv, np.column_stack([t, np.exp(-t)]), delimiter=",")
    out = tmp_path / "out"
    code = main(["example", "integro", "--kernel", str(csv), *SMALL, "--no-refine", "--out", str(out)])
    assert code in (0, 1)
    assert (out / "theta.csv").exists()
    assert main(["example", "heat", "--kernel", "exp:1", *SMALL, "--out", str(out)]) == 2
    assert main(["example", "integro", "--kernel", "exp:x", *SMALL, "--out", str(out)]) == 2
