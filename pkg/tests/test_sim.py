import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aldaglearn.sim import (
    CSV_COLUMNS,
    CSV_SCHEMA,
    SimConfig,
    SimModel,
    kendall_tau,
    random_staged_tree,
    read_results_csv,
    results_to_csv,
    run_grid,
    sample_dataset,
    timings_to_csv,
)
from aldaglearn.stagedtree import LevelStaging, StagedTree, fit, log_likelihood, route


def exact_joint(model):
    """Probability of every configuration by chaining stage distributions."""
    tree = model.tree
    out = {}
    for x in itertools.product(*(range(c) for c in tree.cards)):
        stages = route(tree, x)
        prob = 1.0
        for pos, lev in enumerate(tree.levels):
            prob *= model.probs[pos][stages[pos], x[lev.variable]]
        out[x] = prob
    return out


def test_single_stage_when_t_is_one():
    model = random_staged_tree(SimConfig(5, 2, 1, 10), np.random.default_rng(0))
    assert all(lev.n_stages == 1 for lev in model.tree.levels)


def test_stage_counts_follow_config():
    model = random_staged_tree(SimConfig(4, 2, 3, 10), np.random.default_rng(1))
    levels = model.tree.levels
    assert [len(lev.context_vars) for lev in levels] == [0, 1, 2, 2]
    assert len(levels[3].stage_of) == 4 and levels[3].n_stages == 3
    assert levels[1].n_stages == 2
    assert model.tree.order == (0, 1, 2, 3)


def test_generation_is_deterministic():
    cfg = SimConfig(5, 2, 3, 10)
    a = random_staged_tree(cfg, np.random.default_rng(42))
    b = random_staged_tree(cfg, np.random.default_rng(42))
    assert a.same_as(b)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 3), st.integers(1, 5))
def test_stagings_are_surjective(seed, p, k, t):
    model = random_staged_tree(SimConfig(p, k, t, 1), np.random.default_rng(seed))
    for i, (lev, probs) in enumerate(zip(model.tree.levels, model.probs)):
        assert len(lev.context_vars) == min(k, i)
        assert set(lev.stage_of) == set(range(lev.n_stages))
        assert lev.n_stages == min(t, len(lev.stage_of))
        assert np.allclose(probs.sum(axis=1), 1.0)


def test_point_mass_rows_identical():
    tree = StagedTree((0, 1), (2, 3), (LevelStaging(0, (), (0,), 1), LevelStaging(1, (0,), (0, 0), 1)))
    model = SimModel(tree, (np.array([[0.0, 1.0]]), np.array([[0.0, 0.0, 1.0]])))
    data = sample_dataset(model, 50, np.random.default_rng(0))
    assert (data.codes == [1, 2]).all()


def test_zero_rows():
    model = random_staged_tree(SimConfig(3, 1, 2, 0), np.random.default_rng(0))
    data = sample_dataset(model, 0, np.random.default_rng(0))
    assert data.n_rows == 0 and data.is_empty


def test_marginals_match_exact_forward_sum():
    cfg = SimConfig(4, 2, 3, 10_000, cards=(2, 3, 2, 2))
    model = random_staged_tree(cfg, np.random.default_rng(7))
    data = sample_dataset(model, 10_000, np.random.default_rng(8))
    joint = exact_joint(model)
    assert sum(joint.values()) == pytest.approx(1.0)
    for v in range(4):
        truth = np.zeros(cfg.cards[v])
        for x, prob in joint.items():
            truth[x[v]] += prob
        emp = np.bincount(data.codes[:, v], minlength=cfg.cards[v]) / 10_000
        assert 0.5 * np.abs(emp - truth).sum() < 0.05


def test_loglik_within_three_sigma():
    cfg = SimConfig(4, 2, 2, 10_000)
    model = random_staged_tree(cfg, np.random.default_rng(3))
    n = 10_000
    data = sample_dataset(model, n, np.random.default_rng(4))
    joint = exact_joint(model)
    logs = np.array([math.log(q) for q in joint.values() if q > 0])
    probs = np.array([q for q in joint.values() if q > 0])
    mean = float((probs * logs).sum())
    var = float((probs * (logs - mean) ** 2).sum())
    fitted = log_likelihood(fit(model.tree, data))
    # refitting can only raise the likelihood, by about half the parameter count
    slack = 3 * math.sqrt(n * var)
    assert n * mean - slack <= fitted <= n * mean + slack + model.tree.n_params()


def test_kendall_examples():
    assert kendall_tau((0, 1, 2), (0, 1, 2)) == 0
    assert kendall_tau((0, 1, 2), (2, 1, 0)) == 3
    assert kendall_tau((1, 0, 3, 2), (0, 1, 2, 3)) == 2
    with pytest.raises(ValueError):
        kendall_tau((0, 1), (0, 1, 2))


@settings(max_examples=50, deadline=None)
@given(st.permutations(range(6)), st.permutations(range(6)), st.permutations(range(6)))
def test_kendall_is_metric(a, b, c):
    assert kendall_tau(a, b) == kendall_tau(b, a)
    assert kendall_tau(a, c) <= kendall_tau(a, b) + kendall_tau(b, c)
    assert 0 <= kendall_tau(a, b) <= 15


def test_grid_row_count_and_csv():
    rows = run_grid([SimConfig(3, 1, 2, 200, reps=2, seed=1)], ["dag", "lv", "cmi"])
    assert len(rows) == 6
    assert all(r["status"] == "ok" for r in rows)
    text = results_to_csv(rows)
    assert text.startswith(f"# schema: {CSV_SCHEMA}\n")
    parsed = read_results_csv(text)
    assert list(parsed[0]) == list(CSV_COLUMNS)
    assert "wall_time" not in text.splitlines()[1]
    assert len(timings_to_csv(rows).splitlines()) == 7
    for r in rows:
        assert 0 <= r["kendall_tau"] <= 3


def test_grid_true_order_tracks_shuffle():
    # with t=1 the true structure is empty; orders still shuffle consistently
    rows = run_grid([SimConfig(4, 1, 1, 2000, reps=3, seed=5)], ["cmi"])
    for r in rows:
        assert sorted(r["true_order"]) == [0, 1, 2, 3]
        assert r["n_edges_total"] + r["n_edges_nontotal"] <= 1


def test_grid_deterministic_across_workers():
    grid = [SimConfig(3, 1, 2, 150, reps=2, seed=9), SimConfig(3, 2, 2, 150, reps=1, seed=9)]
    est = ["dag", "lv", "cmi", "all"]
    a = results_to_csv(run_grid(grid, est))
    b = results_to_csv(run_grid(grid, est))
    c = results_to_csv(run_grid(grid, est, jobs=2))
    assert a == b == c


def test_grid_failures_are_recorded():
    rows = run_grid([SimConfig(8, 1, 2, 50, reps=1)], ["all", "cmi"])
    assert rows[0]["status"] == "failed:TooManyOrdersError"
    assert rows[1]["status"] == "ok"


def test_grid_rejects_bad_input():
    with pytest.raises(ValueError):
        run_grid([], ["cmi"])
    with pytest.raises(ValueError):
        run_grid([SimConfig(2, 1, 1, 10, reps=1)], ["nope"])
    with pytest.raises(ValueError):
        SimConfig(0, 1, 1, 10)
