import json

import numpy as np
import pytest

from combforge.campaign import (
    FEASIBILITY,
    GAP,
    IDENTITY,
    CampaignReport,
    DeskBoundError,
    check_desk_bounds,
    reversal_trial,
    run_campaign,
)
from combforge.channels import random_hermitian, random_pure_state
from combforge.cli import UsageError, main, parse_round_dims
from combforge.entropy import tripartite_layout
from combforge.io import dump, load, matrix_to_json, strategy_from_json, vector_to_json
from combforge.rng import trial_rng
from combforge.strategies import RoundStructure


def lines(capsys):
    return [json.loads(s) for s in capsys.readouterr().out.splitlines() if s.strip()]


def test_parse_round_dims():
    r = parse_round_dims("2:3, 1:2")
    assert r.x_dims == (2, 1) and r.y_dims == (3, 2)
    assert r.layout().labels == ("Y1", "Y2", "X1", "X2")
    for bad in ["2", "2:0", "a:b:c"]:
        with pytest.raises((UsageError, ValueError)):
            parse_round_dims(bad)


def test_simulate_random(capsys):
    assert main(["simulate", "--seed", "3"]) == 0
    rec = lines(capsys)[-1]
    assert rec["passed"] and rec["difference"] <= 1e-10
    assert 0 <= rec["probability"] <= 1 + 1e-12


def test_desk_bounds(capsys):
    assert main(["simulate", "--dims", "4:4"]) == 2
    assert "allow-large" in capsys.readouterr().err
    assert main(["simulate", "--dims", "4:2", "--allow-large"]) == 0
    with pytest.raises(DeskBoundError):
        check_desk_bounds(4, [2])
    check_desk_bounds(3, [3, 3])


def test_usage_errors(capsys, tmp_path):
    assert main(["solve", str(tmp_path / "missing.json")]) == 2
    assert main(["simulate", "--dims", "2"]) == 2
    with pytest.raises(SystemExit):
        main(["corollary", "--trials", "0"])
    capsys.readouterr()


def test_solve(capsys, tmp_path):
    r = RoundStructure.from_dims([2], [2])
    h = random_hermitian(r.layout(), np.random.default_rng(0))
    obj = matrix_to_json(h)
    obj["rounds"] = r.to_list()
    hp, out = tmp_path / "h.json", tmp_path / "opt.json"
    dump(obj, hp)
    assert main(["solve", str(hp), "--out", str(out)]) == 0
    rec = lines(capsys)[-1]
    assert rec["status"] == "optimal" and abs(rec["value"] - rec["dual_value"]) <= 1e-6 * max(1, abs(rec["value"]))
    saved = load(out)
    x = strategy_from_json(saved["optimizer"])
    assert abs(np.vdot(h.data, x.op.data).real - rec["value"]) < 1e-6


def test_solve_iteration_limit(capsys, tmp_path):
    r = RoundStructure.from_dims([2], [2])
    obj = matrix_to_json(random_hermitian(r.layout(), np.random.default_rng(1)))
    dump(obj, tmp_path / "h.json")
    assert main(["solve", str(tmp_path / "h.json"), "--dims", "2:2", "--sdp-max-iter", "1"]) == GAP
    assert lines(capsys)[-1]["status"] == "max_iter"


def test_reverse_writes_files(capsys, tmp_path):
    out = tmp_path / "rev.json"
    assert main(["reverse", "--dims", "2:2,2:2", "--seed", "5", "--out", str(out)]) == 0
    rec = lines(capsys)[-1]
    assert rec["reversed_value"] >= rec["forward_value"] - 1e-8
    saved = load(out)
    rev = strategy_from_json(load(saved["reversed_strategy"]))
    assert rev.rounds == parse_round_dims("2:2,2:2").reversed()


def test_reverse_from_files(capsys, tmp_path):
    r = RoundStructure.from_dims([2], [2])
    u = random_pure_state(r.layout(), np.random.default_rng(2))
    dump(vector_to_json(u, r.layout()), tmp_path / "u.json")
    assert main(["reverse", "--dims", "2:2", "--u", str(tmp_path / "u.json"), "--mode", "match"]) == 0
    rec = lines(capsys)[-1]
    assert abs(rec["reversed_value"] - rec["forward_value"]) <= 1e-8


def test_reverse_match_dimension_failure(capsys):
    assert main(["reverse", "--dims", "2:3", "--mode", "match"]) == IDENTITY
    assert lines(capsys)[-1]["status"] == "error"


def test_corollary_campaign(capsys, tmp_path):
    out = tmp_path / "c.jsonl"
    assert main(["corollary", "--trials", "2", "--n", "1", "--max-dim", "2", "--out", str(out)]) == 0
    recs = lines(capsys)
    assert recs[0]["type"] == "header" and recs[-1]["type"] == "summary"
    assert recs[-1]["trials"] == 2 and recs[-1]["failures"] == 0
    assert len(out.read_text().splitlines()) == 4


def test_entropy_random_and_state(capsys, tmp_path):
    assert main(["entropy", "--trials", "1"]) == 0
    assert lines(capsys)[-1]["failures"] == 0
    lay = tripartite_layout(2, 2, 2)
    u = random_pure_state(lay, np.random.default_rng(3))
    dump(vector_to_json(u, lay), tmp_path / "s.json")
    assert main(["entropy", "--state", str(tmp_path / "s.json"), "--cut", lay.labels[1]]) == 0
    rec = lines(capsys)[-1]
    assert rec["target"] == lay.labels[1] and rec["identity_residual"] <= 1e-4
    assert main(["entropy", "--state", str(tmp_path / "s.json"), "--cut", "nope"]) == 2


def test_counterexample_found(capsys):
    assert main(["counterexample", "--trials", "50"]) == 0
    recs = lines(capsys)
    found = [r for r in recs if r.get("found")]
    assert len(found) == 1 and found[0]["difference"] > 1e-2 and "objective" in found[0]


def test_text_format(capsys):
    assert main(["simulate", "--format", "text"]) == 0
    assert "passed=True" in capsys.readouterr().out


def test_trial_streams_independent():
    a = trial_rng(7, 3).standard_normal(5)
    assert np.array_equal(a, trial_rng(7, 3).standard_normal(5))
    assert not np.array_equal(a, trial_rng(7, 4).standard_normal(5))
    assert not np.array_equal(a, trial_rng(8, 3).standard_normal(5))
    assert np.array_equal(trial_rng(-1, 0).standard_normal(3), trial_rng(2**64 - 1, 0).standard_normal(3))


def test_campaign_order_independent():
    fwd = run_campaign("r", 11, 3, lambda s, t: reversal_trial(s, t))
    single = reversal_trial(11, 2)
    assert fwd.records[2]["forward"] == single["forward"]
    assert fwd.exit_code == 0


def test_report_exit_code_bits():
    rep = CampaignReport("x", 0, [{"passed": True}, {"passed": False, "failure": GAP},
                                  {"passed": False, "failure": FEASIBILITY}])
    assert rep.exit_code == GAP | FEASIBILITY
    assert rep.summary()["failures"] == 2
    assert CampaignReport("x", 0, [{"passed": True}]).exit_code == 0


def test_corollary_scalar_case(capsys):
    assert main(["corollary", "--trials", "1", "--dims", "1:1"]) == 0
    rec = lines(capsys)[1]
    assert abs(rec["forward"] - 1) < 1e-8 and abs(rec["reversed"] - 1) < 1e-8


def test_corollary_fifty_trials_seed_7(capsys):
    assert main(["corollary", "--trials", "50", "--dims", "2:2,2:2", "--seed", "7"]) == 0
    recs = lines(capsys)
    assert recs[-1]["trials"] == 50 and recs[-1]["failures"] == 0
    assert max(r["difference"] for r in recs[1:-1]) <= 1e-5


def test_report_deterministic(capsys, tmp_path):
    outs = []
    for name in ["a.jsonl", "b.jsonl"]:
        path = tmp_path / name
        assert main(["corollary", "--trials", "3", "--seed", "11", "--max-dim", "2", "--out", str(path)]) == 0
        outs.append(path.read_text().splitlines())
    capsys.readouterr()
    heads = [json.loads(o[0]) for o in outs]
    for h in heads:
        h.pop("timestamp")
    assert heads[0] == heads[1] and heads[0]["seed"] == 11
    assert outs[0][1:] == outs[1][1:]
