import json
import subprocess
import sys

import jsonschema
import pytest

from qcycle import schemas
from qcycle.cli import UsageError, main, parse_chi_relations, parse_matrix


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_intersect_example(capsys):
    code, out, _ = run(capsys, "intersect", "--p", "5", "--alpha", "1", "1", "--chi-eta-eps1", "-1")
    assert code == 0 and out.splitlines()[0] == "-2"
    code, out, _ = run(capsys, "intersect", "--p", "5", "--alpha", "1", "1", "--chi-eta-eps1", "-1",
                       "--format", "json")
    data = json.loads(out)
    jsonschema.validate(data, schemas.INTERSECT)
    assert data["value"] == -2 and data["negative"]


def test_intersect_gram(capsys):
    code, out, _ = run(capsys, "intersect", "--p", "5", "--gram", "[[25, 0], [0, 250]]",
                       "--format", "json")
    assert code == 0 and json.loads(out)["alpha"] == [1, 2]
    code, _, err = run(capsys, "intersect", "--p", "5", "--gram", "[[25, 0], [0, 250")
    assert code == 2 and "malformed matrix JSON" in err
    code, _, err = run(capsys, "intersect", "--p", "5", "--gram", "[[1, 0], [0, 5]]")
    assert code == 2 and "valuation below" in err
    code, _, err = run(capsys, "intersect", "--p", "3", "--alpha", "0", "2")
    assert code == 2 and "outside proven range" in err


def test_hz_example(capsys):
    code, out, _ = run(capsys, "hz", "--p", "7", "--beta", "1", "1", "--chi", " -eps1*eps2=+1")
    assert code == 0 and out.splitlines()[0] == "-4"
    code, out, _ = run(capsys, "hz", "--p", "7", "--beta", "1", "1", "--eps", "1", "-1", "1",
                       "--format", "json")
    assert json.loads(out)["value"] == -4


def test_hz_strict(capsys):
    code, _, err = run(capsys, "hz", "--p", "3", "--beta", "1", "2", "--strict-p3-intro")
    assert code == 2 and "strict" in err


def test_chi_relations():
    assert parse_chi_relations(["-eps1*eps2=+1"], 7) == (1, -1, 1)
    assert parse_chi_relations(["-eps1*eps2=+1"], 5) == (1, 1, 1)
    assert parse_chi_relations(["eps1=-1,eps3=-1"], 5) == (-1, 1, -1)
    with pytest.raises(UsageError):
        parse_chi_relations(["eps1=+1", "eps1=-1"], 5)
    with pytest.raises(UsageError):
        parse_chi_relations(["eps4=1"], 5)


def test_parse_matrix():
    assert parse_matrix('[[1, "1/3"], ["1/3", 2]]')[0][1] == parse_matrix('[[0, "2/6"]]')[0][1]
    for bad in ("[[1.5]]", '"x"', "[]", '[["a"]]'):
        with pytest.raises(UsageError):
            parse_matrix(bad)


def test_density_example(capsys):
    code, out, _ = run(capsys, "density", "--p", "3", "--T", "1,1,1")
    data = json.loads(out)
    jsonschema.validate(data, schemas.DENSITY)
    assert data["F_tilde"] == ["1/1", "3/1", "3/1", "1/1"]
    assert data["gamma_tilde"] == ["1/1", "-1/9", "-1/9", "1/81"]
    assert data["representable"] is True
    code, _, err = run(capsys, "density", "--p", "3", "--T", "2,1,1")
    assert code == 2


def test_verify_thmc(capsys, tmp_path):
    code, out, _ = run(capsys, "verify-thmc", "--format", "json")
    data = json.loads(out)
    jsonschema.validate(data, schemas.THMC_REPORT)
    assert code == 0 and data["summary"]["fail"] == 0
    skip_default = data["summary"]["skip"]
    code, out, _ = run(capsys, "verify-thmc", "--format", "json", "--strict-p3-intro")
    data = json.loads(out)
    assert code == 0 and data["summary"]["fail"] == 0 and data["summary"]["skip"] > skip_default
    code, out, _ = run(capsys, "verify-thmc", "--primes", "5", "--beta-max", "3")
    assert code == 0 and out.strip().splitlines()[-1].startswith("pass=")


def test_verify_thmc_config(capsys, tmp_path):
    cfg = tmp_path / "grid.json"
    report = tmp_path / "out.json"
    cfg.write_text(json.dumps({"p_list": [5, 7], "beta_max": 4, "class_combos": [[1, 1, 1], [1, -1, -1]],
                               "format": "json", "output": str(report)}))
    code, _, _ = run(capsys, "verify-thmc", "--config", str(cfg))
    data = json.loads(report.read_text())
    jsonschema.validate(data, schemas.THMC_REPORT)
    assert code == 0 and len(data["rows"]) == 2 * 10 * 2
    cfg.write_text(json.dumps({"p_list": [5], "bogus": 1}))
    code, _, err = run(capsys, "verify-thmc", "--config", str(cfg))
    assert code == 2 and "invalid config" in err
    cfg.write_text(json.dumps({"p_list": [4]}))
    code, _, err = run(capsys, "verify-thmc", "--config", str(cfg))
    assert code == 2


def test_count(capsys, monkeypatch):
    code, out, _ = run(capsys, "count", "--p", "3", "--t", "2", "--t-max", "3", "--T", "1,1,1")
    data = json.loads(out)
    jsonschema.validate(data, schemas.COUNT)
    assert code == 0 and data["stabilized"] == "512/81"
    code, out, _ = run(capsys, "count", "--p", "3", "--t", "2", "--S-form", "twist", "--T", "1,1,1")
    assert json.loads(out)["results"][0]["raw"] == 0
    code, out, _ = run(capsys, "count", "--p", "3", "--t", "1", "--S", "[[1,0],[0,-1]]",
                       "--T-matrix", "[[2]]", "--method", "naive")
    assert json.loads(out)["results"][0]["normalized"] == "2/3"
    code, _, err = run(capsys, "count", "--p", "3", "--t", "3", "--T", "1,1,1", "--budget", "1000")
    assert code == 3 and "over budget" in err
    monkeypatch.setenv("QCYCLE_BUDGET", "10")
    code, _, err = run(capsys, "count", "--p", "3", "--t", "2", "--T", "1,1,1")
    assert code == 3
    code, _, err = run(capsys, "count", "--p", "3", "--t", "2", "--T-matrix", "[[1,2")
    assert code == 2


def test_count_deterministic_across_workers(capsys):
    outs = []
    for w in ("1", "2"):
        code, out, _ = run(capsys, "count", "--p", "3", "--t", "2", "--T", "1,1,2", "--method", "columns",
                           "--workers", w)
        outs.append(json.loads(out)["results"][0]["raw"])
    assert outs[0] == outs[1]


def test_tree(capsys, tmp_path):
    dot = tmp_path / "c.dot"
    code, out, _ = run(capsys, "tree", "--p", "3", "--radius", "3", "--s", "[[0,1],[3,0]]",
                       "--dot", str(dot))
    data = json.loads(out)
    jsonschema.validate(data, schemas.TREE)
    assert code == 0 and data["edges"]
    std = {"u": {"a": 0, "b": "0/1"}, "v": {"a": 1, "b": "0/1"}}
    assert any(e["u"] == std["u"] and e["v"] == std["v"] for e in data["edges"])
    assert dot.read_text().startswith("graph cycle {")
    code, _, _ = run(capsys, "tree", "--p", "3", "--s", "[[1,0],[0,1]]")
    assert code == 2


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["intersect"])
    assert exc.value.code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "qcycle", "intersect", "--p", "5", "--alpha", "0", "3"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.splitlines()[0] == "4"
