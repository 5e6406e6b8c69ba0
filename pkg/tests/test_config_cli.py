import filecmp
import json
import math

import pytest

from edgecurrents import __version__
from edgecurrents.cli import Table, fmt, main
from edgecurrents.config import ConfigError, canonical_json, parse_config
from edgecurrents.model import ModelError

BASE = {"B": 1.0, "L": 8, "V0": 0.2, "epsilon": 0.05}


def write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_defaults_materialized():
    cfg = parse_config(BASE)
    assert cfg.solver["resolution"] == 8 and cfg.experiment["L_list"] == [8, 12, 16]
    assert cfg.seeds == [0]
    doc = json.loads(cfg.canonical())
    assert doc["W"] == pytest.approx(cfg.params.W) and doc["layer"] == pytest.approx(math.log(8))


def test_seeds_forms():
    assert parse_config({**BASE, "seeds": 3}).seeds == [0, 1, 2]
    assert parse_config({**BASE, "seeds": [5, 2, 5]}).seeds == [2, 5]


def test_hash_ignores_output_location():
    a = parse_config({**BASE, "out": "x"})
    b = parse_config({**BASE, "out": "y"})
    assert a.hash == b.hash and a.canonical() == b.canonical()
    assert parse_config({**BASE, "seeds": 2}).hash != a.hash


def test_roundtrip_is_fixed_point():
    cfg = parse_config({**BASE, "experiment": {"p": 9}})
    again = parse_config(cfg.canonical())
    assert again.canonical() == cfg.canonical()


@pytest.mark.parametrize("doc, msg", [
    ({**BASE, "solver": {"resolutio": 8}}, "config.solver"),
    ({**BASE, "L": "eight"}, "config.L"),
    ({"B": 1.0, "L": 8, "V0": 0.2}, "epsilon"),
    ({**BASE, "experiment": {"p": 5}}, "config.experiment.p"),
    ({**BASE, "extra": 1}, "extra"),
])
def test_schema_errors_name_the_path(doc, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(doc)


def test_invalid_json_and_physics():
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config("{")
    with pytest.raises(ModelError):
        parse_config({**BASE, "V0": 0.3})


def test_canonical_json_strict():
    s = canonical_json({"b": math.nan, "a": [1.5, math.inf]})
    assert s == '{\n "a": [\n  1.5,\n  null\n ],\n "b": null\n}\n'


def test_fmt_round_trips_floats():
    assert fmt(True) == "1" and fmt(3) == "3"
    assert float(fmt(0.1 + 0.2)) == 0.1 + 0.2
    t = Table(["a", "b"], [(1, 0.5)]).render("hdr")
    assert t == "# hdr\na,b\n1,0.5\n"


def test_exit_codes(tmp_path, capsys):
    good = write(tmp_path, {**BASE, "experiment": {"samples": 50}})
    assert main(["kernel-check", "--config", good, "--out", str(tmp_path / "k")]) == 0
    rep = json.loads((tmp_path / "k" / "report.json").read_text())
    assert rep["passed"] and rep["version"] == __version__
    assert main(["spectrum", "--config", write(tmp_path, {**BASE, "V0": 0.3}, "bad.json")]) == 1
    assert "violates B > 4*V0" in capsys.readouterr().err
    assert main(["spectrum", "--config", write(tmp_path, {**BASE, "solver": {"dim_cap": 10}}, "cap.json")]) == 1
    assert "exceeds cap" in capsys.readouterr().err
    hall = write(tmp_path, {**BASE, "experiment": {"mu_l": 0.65, "mu_r": 0.6}}, "hall.json")
    assert main(["hall", "--config", hall]) == 1
    assert "ordering" in capsys.readouterr().err
    assert main(["spectrum", "--config", str(tmp_path / "missing.json")]) == 1


def test_failed_surrogate_exits_two(tmp_path, capsys):
    # a single seed makes the small-delta fit undefined
    cfg = write(tmp_path, {**BASE, "experiment": {"fast": True}})
    assert main(["wegner", "--config", cfg, "--seeds", "1", "--out", str(tmp_path / "w")]) == 2
    assert "surrogate check failed: fit" in capsys.readouterr().err


def test_stdout_report_without_out(tmp_path, capsys):
    cfg = write(tmp_path, {**BASE, "experiment": {"samples": 10}})
    assert main(["kernel-check", "--config", cfg]) == 0
    assert json.loads(capsys.readouterr().out)["subcommand"] == "kernel-check"


def _same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.diff_files or cmp.funny_files:
        return False
    same, diff, err = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not diff and not err and all(_same_tree(a / d, b / d) for d in cmp.common_dirs)


def test_artifacts_are_byte_identical(tmp_path):
    cfg = write(tmp_path, {**BASE, "experiment": {"fast": True}})
    runs = []
    for i, threads in enumerate((1, 1, 2)):
        out = tmp_path / f"run{i}"
        main(["wegner", "--config", cfg, "--seeds", "6", "--threads", str(threads), "--out", str(out)])
        runs.append(out)
    assert (runs[0] / "seeds" / "005.csv").exists()
    assert _same_tree(runs[0], runs[1]) and _same_tree(runs[0], runs[2])
    other = tmp_path / "other"
    main(["wegner", "--config", cfg, "--seeds", "6", "--seed-base", "3", "--out", str(other)])
    assert not _same_tree(runs[0], other)
