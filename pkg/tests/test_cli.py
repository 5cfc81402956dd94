import json

import numpy as np

from conftest import scalar_ranklist, stratum_564
from fiberstrat.cli import EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, run
from fiberstrat.network import WeightVector, load_weights, mu, ranklist_of, weights_to_json
from fiberstrat.ranklist import ranklist_to_json


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_dag_json(capsys):
    assert run(["dag", "--d", "1,1,1,1", "--rank", "0", "--format", "json"]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert len(obj["vertices"]) == 7 and len(obj["edges"]) == 9


def test_dag_is_deterministic(capsys):
    outs = []
    for extra in ([], ["--bfs"], ["--seed", "9"]):
        run(["dag", "--d", "4,6,5", "--rank", "1", "--format", "json", *extra])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1] == outs[2]


def test_dag_table_and_dot(capsys):
    run(["dag", "--d", "4,6,5", "--rank", "1"])
    assert "S11 (11,46,35)" in capsys.readouterr().out
    run(["dag", "--d", "2,1,1", "--rank", "0", "--format", "dot"])
    assert capsys.readouterr().out.count("->") == 2


def test_empty_fiber_exit(capsys):
    assert run(["dag", "--d", "2,2", "--rank", "3"]) == EXIT_DOMAIN
    assert "empty fiber" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert run(["bogus"]) == EXIT_USAGE
    assert run(["dag", "--d", "1,x", "--rank", "0"]) == EXIT_USAGE
    assert run(["dag", "--d", "2,2", "--rank", "1", "--rank-tol", "0.5"]) == EXIT_USAGE
    assert run(["--help"]) == EXIT_OK


def test_seed_env_must_be_integer(monkeypatch, capsys):
    monkeypatch.setenv("FIBERSTRAT_SEED", "abc")
    assert run(["dag", "--d", "2,2", "--rank", "1"]) == EXIT_USAGE


def test_moves(tmp_path, capsys):
    a = write_json(tmp_path / "a.json", ranklist_to_json(scalar_ranklist(0, 0, 0)))
    b = write_json(tmp_path / "b.json", ranklist_to_json(scalar_ranklist(0, 1, 1)))
    assert run(["moves", "--from", a, "--to", a]) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == []
    assert run(["moves", "--from", a, "--to", b]) == EXIT_OK
    seq = json.loads(capsys.readouterr().out)
    assert [(m["l"], m["k"], m["i"], m["h"]) for m in seq] == [(1, 0, 1, 0), (2, 1, 2, 0)]
    assert run(["moves", "--from", b, "--to", a]) == EXIT_DOMAIN


def test_invalid_ranklist_file(tmp_path, capsys):
    obj = ranklist_to_json(scalar_ranklist(0, 0, 0))
    obj["ranks"][0]["r"] = 5
    bad = write_json(tmp_path / "bad.json", obj)
    assert run(["canonical", "--ranklist", bad]) == EXIT_DOMAIN


def test_canonical_sample_verify_round_trip(tmp_path, capsys):
    r = stratum_564(3, 2)
    rl = write_json(tmp_path / "r.json", ranklist_to_json(r))
    out = tmp_path / "canon.json"
    assert run(["canonical", "--ranklist", rl, "--out", str(out)]) == EXIT_OK
    assert ranklist_of(load_weights(out)) == r
    w = tmp_path / "w.json"
    assert run(["sample", "--ranklist", rl, "--seed", "4", "--out", str(w)]) == EXIT_OK
    first = w.read_text()
    run(["sample", "--ranklist", rl, "--seed", "4", "--out", str(w)])
    assert w.read_text() == first
    assert ranklist_of(load_weights(w)) == r
    assert run(["verify", str(w)]) == EXIT_OK
    assert capsys.readouterr().out.rstrip().endswith("ALL PASS")


def test_sample_with_target(tmp_path):
    r = stratum_564(2, 2)
    rl = write_json(tmp_path / "r.json", ranklist_to_json(r))
    W = np.outer(np.arange(1.0, 6.0), np.ones(4))
    tgt = write_json(tmp_path / "W.json", W.tolist())
    out = tmp_path / "w.json"
    assert run(["sample", "--ranklist", rl, "--target", tgt, "--out", str(out)]) == EXIT_OK
    assert np.allclose(mu(load_weights(out)), W)
    assert run(["sample", "--ranklist", rl, "--target", write_json(tmp_path / "z.json", np.zeros((5, 4)).tolist())]) \
        == EXIT_DOMAIN


def test_analyze_and_spaces(tmp_path, capsys):
    theta_json = {"d": [1, 2, 1], "W": [[[1.0], [0.0]], [[1.0, 0.0]]]}
    path = write_json(tmp_path / "w.json", theta_json)
    assert run(["analyze", path, "--format", "json"]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["ledger"]["D_free"] == 3
    assert run(["spaces", path, "--emit", "nulldmu"]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["dim"] == 3 and all(len(v) == 4 for v in obj["basis"])
    assert run(["spaces", path, "--emit", "tangent"]) == EXIT_OK
    # every point of this fiber has the same ranks, so the stratum is the whole fiber
    assert json.loads(capsys.readouterr().out)["dim"] == 3


def test_csv_factors(tmp_path, capsys):
    np.savetxt(tmp_path / "w1.csv", [[1.0], [0.0]], delimiter=",")
    np.savetxt(tmp_path / "w2.csv", [[1.0, 0.0]], delimiter=",")
    args = ["--w1", str(tmp_path / "w1.csv"), "--w2", str(tmp_path / "w2.csv")]
    assert run(["analyze", *args]) == EXIT_OK
    assert "S<1,1,1>" in capsys.readouterr().out
    assert run(["analyze", *args, "--d", "1,3,1"]) == EXIT_DOMAIN
    assert run(["analyze", "--w2", str(tmp_path / "w2.csv")]) == EXIT_USAGE
    assert run(["dag", "--d", "2,2", "--rank", "1", *args]) == EXIT_USAGE


def test_verify_flags_mismatched_tolerance(tmp_path, capsys):
    rng = np.random.default_rng(0)
    U = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    theta = WeightVector.from_factors([U @ np.diag([1, 1, 1, 2e-3]), rng.standard_normal((3, 4))])
    path = write_json(tmp_path / "w.json", weights_to_json(theta))
    assert run(["verify", path]) == EXIT_OK
    assert run(["verify", path, "--rank-tol", "5e-3"]) == EXIT_VERIFY
    assert "FAILED" in capsys.readouterr().out
