import json
import math

import numpy as np
import pytest

from fdrml.errors import DegenerateTargets, LengthMismatch, TooFewRows
from fdrml.evaluate import (
    LEARNING_CURVE_COLUMNS,
    CvPlan,
    Dataset,
    cv_evaluate,
    learning_curve,
    metrics,
    shuffle_split,
    write_learning_curve_csv,
)
from fdrml.tune import Choice, IntRange, LogUniform, SearchSpace, Uniform, default_space, tune


def test_metrics_perfect():
    m = metrics([0.1, 0.5, 0.9], [0.1, 0.5, 0.9])
    assert (m.mae, m.rmse, m.max_abs, m.r2, m.ev) == (0, 0, 0, 1, 1)


def test_metrics_mean_prediction_r2_zero():
    y = np.array([0.1, 0.4, 0.7])
    assert metrics(y, np.full(3, y.mean())).r2 == pytest.approx(0, abs=1e-15)


def test_metrics_degenerate():
    m = metrics([0.5, 0.5], [0.4, 0.6])
    assert math.isnan(m.r2) and math.isnan(m.ev)
    with pytest.raises(DegenerateTargets):
        metrics([0.5, 0.5], [0.4, 0.6], strict=True)
    with pytest.raises(LengthMismatch):
        metrics([1, 2], [1])


def test_shuffle_split_shapes_and_determinism():
    tr, te = shuffle_split(10, 0.5, seed=3, fold=0)
    assert len(tr) == len(te) == 5
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(10))
    tr2, _ = shuffle_split(10, 0.5, seed=3, fold=0)
    assert np.array_equal(tr, tr2)
    assert not np.array_equal(tr, shuffle_split(10, 0.5, seed=3, fold=1)[0])
    with pytest.raises(TooFewRows):
        shuffle_split(10, 0.1, 0, 0)
    with pytest.raises(TooFewRows):
        shuffle_split(3, 0.9, 0, 0)


def _data(n=60, d=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.clip(0.5 + 0.2 * X[:, 0] - 0.1 * X[:, 1] + 0.02 * rng.normal(size=n), 0, 1)
    return Dataset(X, y)


def test_cv_partition_and_unlimited_tree():
    data = _data()
    res = cv_evaluate(data, "tree", {}, CvPlan(folds=4, train_fraction=0.5, seed=1))
    assert len(res.folds) == 4
    for f in res.folds:
        assert set(f.train_idx).isdisjoint(f.test_idx)
        assert len(f.train_idx) + len(f.test_idx) == len(data)
        assert f.train.r2 == pytest.approx(1.0, abs=1e-12)


def test_cv_plan_validation():
    with pytest.raises(ValueError):
        CvPlan(folds=1)
    with pytest.raises(ValueError):
        CvPlan(train_fraction=1.0)


def test_learning_curve_rows(tmp_path):
    data = _data()
    sizes = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    rows = learning_curve(data, "tree", {}, sizes, CvPlan(folds=3, seed=2))
    assert len(rows) == 9
    assert all(r["train std"] >= 0 and r["test std"] >= 0 and r["fit time std"] >= 0 for r in rows)
    assert all(r["train mean"] == pytest.approx(1.0, abs=1e-12) for r in rows)
    write_learning_curve_csv(rows, tmp_path / "lc.csv")
    assert (tmp_path / "lc.csv").read_text().splitlines()[0].split(",") == LEARNING_CURVE_COLUMNS
    with pytest.raises(ValueError):
        learning_curve(data, "tree", {}, [1.2], CvPlan())


def test_kernel_ridge_fit_time_grows():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(800, 6))
    data = Dataset(X, rng.random(800))
    rows = learning_curve(data, "kernel_ridge", {"kernel": "rbf", "alpha": 1.0, "gamma": 0.1},
                          [0.1, 0.5, 0.9], CvPlan(folds=3))
    t = [r["fit time mean"] for r in rows]
    assert t[0] <= t[1] <= t[2]


def test_param_types():
    rng = np.random.default_rng(0)
    lu = LogUniform(1e-3, 10)
    assert all(lu.contains(lu.sample(rng)) for _ in range(50))
    assert all(lu.contains(v) for v in lu.grid(5.0, 5, 4.0))
    u = Uniform(-1, 1)
    assert u.grid(0.5, 3, 2.0) == [0.25, 0.625, 1.0]
    assert len(u.grid(0.0, 3, 2.0)) == 3
    ir = IntRange(2, 64, extra=(0,))
    assert 0 in ir.values() and 1 not in ir.values()
    assert ir.grid(0, 3, 2.0) == [0]
    assert ir.grid(8, 3, 2.0) == [4, 8, 16]
    assert all(ir.contains(v) for v in ir.grid(8, 5, 2.0))
    with pytest.raises(ValueError):
        LogUniform(0, 1)
    with pytest.raises(ValueError):
        SearchSpace({}, random_budget=0)


def test_tune_single_choice():
    data = _data()
    space = SearchSpace({"k": Choice((3,)), "metric": Choice(("manhattan",))}, random_budget=2)
    res = tune(data, "knn", space, CvPlan(folds=2))
    assert res.best_hp == {"k": 3, "metric": "manhattan"}


def test_tune_deterministic_and_in_space(tmp_path):
    data = _data()
    space = default_space("svr", "rbf", random_budget=4, grid_points_per_param=2)
    a = tune(data, "svr", space, CvPlan(folds=2, seed=1), seed=7)
    b = tune(data, "svr", space, CvPlan(folds=2, seed=1), seed=7)
    assert a.best_hp == b.best_hp
    assert [t.hp for t in a.trials] == [t.hp for t in b.trials]
    assert [t.fold_scores for t in a.trials] == [t.fold_scores for t in b.trials]
    assert space.contains(a.best_hp)
    for t in a.trials:
        assert space.contains(t.hp)
    a.write_log(tmp_path / "log.jsonl")
    lines = (tmp_path / "log.jsonl").read_text().splitlines()
    assert len(lines) == len(a.trials) == 4 + 2 ** 3
    rec = json.loads(lines[0])
    assert {"hp", "fold_scores", "mean", "fit_time_s", "predict_time_s"} <= set(rec)


def test_tune_failed_trials_score_minus_inf():
    data = _data(n=12)
    # k up to 25 exceeds the 6 training rows on some trials
    space = SearchSpace({"k": IntRange(1, 25), "metric": Choice(("manhattan",))}, random_budget=10)
    res = tune(data, "knn", space, CvPlan(folds=2), seed=0)
    failed = [t for t in res.trials if t.error]
    assert failed and all(t.mean == -math.inf for t in failed)
    assert res.best_hp["k"] <= 6


def test_tune_recovers_knn_scale():
    # ground truth: a 3-NN manhattan regressor on a fixed reference cloud
    rng = np.random.default_rng(11)
    ref = rng.normal(size=(40, 2))
    ref_y = rng.random(40)
    X = rng.normal(size=(200, 2))
    from oracles import knn_scan
    y = knn_scan(ref, ref_y, X, 3, "manhattan")
    space = SearchSpace({"k": IntRange(1, 20), "metric": Choice(("manhattan", "euclidean"))},
                        random_budget=15, grid_points_per_param=5)
    res = tune(Dataset(X, y), "knn", space, CvPlan(folds=3, seed=0), seed=2)
    assert 1 <= res.best_hp["k"] <= 6


def test_tune_time_budget_truncates():
    data = _data()
    space = default_space("svr", "polynomial", random_budget=50, grid_points_per_param=5)
    res = tune(data, "svr", space, CvPlan(folds=2), seed=0, time_budget_s=0.05)
    assert res.truncated
    stage2 = [t for t in res.trials if t.stage == 2]
    assert len(stage2) >= 3 ** 3  # grids never shrink below 3 points
