import csv
import io
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from quasifact.cli import main

K33 = "edges:0-3,0-4,0-5,1-3,1-4,1-5,2-3,2-4,2-5"


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_verify_keylem(capsys):
    code, out, _ = _run(["verify", "--suite", "keylem", "--dim", "4", "--trials", "1000", "--seed", "42"], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["schema"] == 1 and rep["command"] == "verify" and rep["seed"] == 42
    assert rep["violations"] == [] and rep["max_violation"] <= 1e-8
    assert isinstance(rep["wall_time_ms"], int)


def test_verify_unknown_suite(capsys):
    code, _, err = _run(["verify", "--suite", "nosuch"], capsys)
    assert code == 2 and "keylem" in err


def test_verify_deterministic(tmp_path, capsys):
    outs = []
    for k in range(2):
        p = tmp_path / f"r{k}.json"
        assert main(["verify", "--suite", "revconv", "--dim", "2", "--trials", "1", "--seed", "1", "--json", str(p)]) == 0
        rep = json.loads(p.read_text())
        rep.pop("wall_time_ms")
        outs.append(json.dumps(rep, sort_keys=True))
    assert outs[0] == outs[1]


def test_verify_violation_exit(capsys):
    code, out, _ = _run(["verify", "--suite", "chain", "--dim", "2", "--trials", "2", "--tol", "-1"], capsys)
    rep = json.loads(out)
    assert code == 1 and len(rep["violations"]) == 2 and rep["max_violation"] >= 0


def test_verify_seed_env(tmp_path):
    env = dict(os.environ, QUASIFACT_SEED="17")
    out = subprocess.run([sys.executable, "-m", "quasifact.cli", "verify", "--suite", "ssa", "--trials", "1"],
                         capture_output=True, text=True, env=env, check=True).stdout
    assert json.loads(out)["seed"] == 17


def test_constants_c(capsys):
    code, out, _ = _run(["constants", "--c", "2", "--zeta-grid", "0.001:0.05:0.001"], capsys)
    rows = _rows(out)
    assert code == 0 and len(rows) == 50
    beta = [float(r["beta"]) for r in rows]
    assert all(b < a for a, b in zip(beta, beta[1:]))
    code, out, _ = _run(["constants", "--c", "3", "--zeta-grid", "0:0.01:0.01"], capsys)
    assert float(_rows(out)[0]["beta"]) == 1.0


def test_constants_d(capsys):
    code, out, _ = _run(["constants", "--d", "2", "--zeta", "0.01"], capsys)
    (row,) = _rows(out)
    assert code == 0 and float(row["beta_tilde"]) == pytest.approx(0.9355705, abs=1e-7)
    assert _run(["constants", "--d", "2", "--zeta", "0.2"], capsys)[0] == 2
    assert _run(["constants", "--c", "2", "--zeta-grid", "bad"], capsys)[0] == 2


def test_graph_certify_paley(tmp_path, capsys):
    p = tmp_path / "r.json"
    assert main(["graph-certify", "--graph", "paley:13", "--out", str(p)]) == 0
    rep = json.loads(p.read_text())
    assert not rep["trivial"] and 0 < rep["alpha_sqf"] and rep["lambda_cert"] > 0
    assert rep["convention"].startswith("edge-CMLSI")


def test_graph_certify_simulate(capsys):
    code, out, _ = _run(["graph-certify", "--graph", "complete:4", "--simulate", "--trials", "20"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["envelope"]["verdict"] == "pass" and rep["envelope"]["trials"] == 40


def test_graph_certify_bipartite_and_disconnected(capsys):
    code, out, _ = _run(["graph-certify", "--graph", K33], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["trivial"] and rep["reason"]
    assert rep["alpha_sqf"] == "inf"
    code, _, err = _run(["graph-certify", "--graph", "edges:0-1,2-3"], capsys)
    assert code == 2 and "disconnected" in err
    assert _run(["graph-certify", "--graph", "edges:0-1,1-2"], capsys)[0] == 2


def test_uncertainty_mub(capsys):
    code, out, _ = _run(["uncertainty", "--dim", "2", "--mub", "--trials", "100"], capsys)
    rows = _rows(out)
    assert code == 0 and len(rows) == 100
    for r in rows:
        assert float(r["rhs_qf"]) == pytest.approx(float(r["rhs_bardet"]), abs=1e-12)
        assert float(r["lhs"]) >= float(r["rhs_qf"]) - 1e-8


def test_uncertainty_angle(capsys):
    code, out, _ = _run(["uncertainty", "--dim", "2", "--angle", "0.2", "--trials", "500", "--seed", "7"], capsys)
    assert code == 0 and len(_rows(out)) == 500
    code, out, _ = _run(["uncertainty", "--dim", "2", "--angle", "1.2", "--bdim", "2", "--trials", "20"], capsys)
    rows = _rows(out)
    assert code == 0 and math.isnan(float(rows[0]["rhs_mu"]))
    assert _run(["uncertainty", "--dim", "3", "--angle", "0.0"], capsys)[0] == 2


def test_uncertainty_bits(capsys):
    nats = _rows(_run(["uncertainty", "--dim", "2", "--mub", "--trials", "3"], capsys)[1])
    bits = _rows(_run(["uncertainty", "--dim", "2", "--mub", "--trials", "3", "--bits"], capsys)[1])
    for a, b in zip(nats, bits):
        assert float(b["lhs"]) == pytest.approx(float(a["lhs"]) / math.log(2))


def test_decay(capsys):
    code, out, _ = _run(["decay", "--graph", "cycle:4", "--tmax", "10", "--points", "40", "--seed", "3"], capsys)
    rows = _rows(out)
    assert code == 0 and len(rows) == 40
    d = np.array([float(r["D"]) for r in rows])
    env = np.array([float(r["envelope"]) for r in rows])
    assert np.all(np.diff(d) <= 1e-12) and np.all(d <= env + 1e-8)
    assert d[0] == pytest.approx(env[0], abs=1e-12)
    assert _run(["decay", "--graph", "complete:3", "--extend", "2", "--points", "10"], capsys)[0] == 0
    assert _run(["decay", "--graph", "cycle:9", "--extend", "2"], capsys)[0] == 2


def test_bad_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--trials", "x"])
    assert exc.value.code == 2
