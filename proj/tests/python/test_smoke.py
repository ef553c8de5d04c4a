import csv
import json
import math

import numpy as np
import pytest

import demoreg


def test_regularized_planning_matches_closed_form_on_one_step():
    p = np.ones((1, 1, 2, 1))
    r = np.array([[[1.0, 0.0]]])
    mdp = demoreg.TabularMdp(p, r)
    ref = demoreg.Policy.uniform(1, 1, 2)
    V, Q, pi = demoreg.regularized_value_iteration(mdp, ref, 1.0)
    assert V.shape == (2, 1)
    assert Q.shape == (1, 1, 2)
    assert V[0, 0] == pytest.approx(math.log(0.5 * math.e + 0.5), abs=1e-12)
    assert pi.prob[0, 0, 0] == pytest.approx(math.e / (math.e + 1), abs=1e-12)


def test_value_iteration_dominates_expert_and_bc():
    mdp = demoreg.random_tabular(4, 2, 3, seed=5)
    V, _, greedy = demoreg.value_iteration(mdp)
    expert = demoreg.expert_policy(mdp, 0.1)
    bc = demoreg.behavior_clone(mdp, expert, 1000, seed=1)
    assert V[0, 0] == pytest.approx(demoreg.policy_evaluation(mdp, greedy)[0, 0])
    assert demoreg.policy_evaluation(mdp, expert)[0, 0] <= V[0, 0] + 1e-12
    kl = demoreg.kl_trajectory(mdp, expert, bc)
    assert 0.0 <= kl <= demoreg.bc_tabular_kl_bound(4, 2, 3, 1000, 0.1)


def test_bpi_and_pipeline_run():
    mdp = demoreg.river_swim(3, 3)
    ref = demoreg.Policy.uniform(3, 3, 2)
    res = demoreg.ucbvi_ent_plus(mdp, ref, 2.0, 1.0, 0.1, seed=0)
    assert res["stopped"]
    assert res["episodes"] == res["samples"] + 1
    expert = demoreg.expert_policy(mdp, 0.05)
    out = demoreg.demonstration_regularized_rl(mdp, expert, 500, eps=1.0, seed=2, diagnostic=True)
    assert out["suboptimality"] <= out["composite_bound"] + 1e-9
    assert demoreg.select_lambda(0.1, 0.01) == pytest.approx(10.0)
    assert demoreg.select_lambda(0.3, 0.1, 8) == 8.0


def test_sweep_and_summary(tmp_path):
    config = {
        "instance": {"generator": "river", "S": 3, "H": 3},
        "algorithm": "bpi",
        "grid": {"lambda": [1.0], "eps": [1.0]},
        "seeds": [0, 1, 2],
    }
    assert demoreg.run_sweep(json.dumps(config), str(tmp_path)) == 3
    with open(tmp_path / "results.csv") as f:
        rows = list(csv.DictReader(f))
    assert [r["seed"] for r in rows] == ["0", "1", "2"]
    with pytest.raises(demoreg.ConfigError):
        demoreg.scaling_summary(str(tmp_path / "results.csv"))


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        demoreg.TabularMdp(np.full((1, 1, 2, 1), 0.5), np.zeros((1, 1, 2)))
    with pytest.raises(demoreg.ConfigError):
        demoreg.run_sweep("{not json", "/tmp")
    with pytest.raises(demoreg.DomainError):
        demoreg.select_lambda(0.0, 1.0)
