import json
import warnings

import numpy as np
import pytest

from fdrml.errors import InvalidHyperparam, KTooLarge
from fdrml.models import (
    KERNELS,
    MODEL_CATALOGUE,
    KernelRidge,
    NotConvergedWarning,
    RegressionTree,
    Standardiser,
    SupportVectorRegressor,
    fit_kernel_ridge,
    fit_knn,
    fit_ols,
    fit_svr,
    fit_tree,
    from_dict,
    kernel,
    kernel_matrix,
    load_model,
    make_model,
)
from fdrml.models.svr import dual_objective, smo
from fdrml.models.tree import best_split
from oracles import knn_scan, ols_predict, svr_dual_pg

rng = np.random.default_rng(1234)


# -- standardiser ----------------------------------------------------------

def test_standardiser_constant_column():
    X = np.array([[1.0, 5.0], [2.0, 5.0], [4.0, 5.0]])
    Z = Standardiser().fit_transform(X)
    assert np.all(Z[:, 1] == 0)
    assert abs(Z[:, 0].mean()) < 1e-12
    assert abs(Z[:, 0].std() - 1) < 1e-12


# -- OLS -------------------------------------------------------------------

def test_ols_exact_linear():
    X = rng.normal(size=(40, 4))
    y = X @ [0.3, -0.2, 0.1, 0.05] + 0.4
    m = fit_ols(X, y)
    assert np.max(np.abs(m.predict_raw(X) - y)) <= 1e-8


def test_ols_constant_target():
    X = rng.normal(size=(10, 3))
    m = fit_ols(X, np.full(10, 0.3))
    assert np.allclose(m.coef_, 0) and abs(m.intercept_ - 0.3) < 1e-12


def test_ols_matches_normal_equation_oracle():
    X = rng.normal(size=(30, 5))
    y = rng.normal(size=30)
    Xq = rng.normal(size=(10, 5))
    got = fit_ols(X, y).predict_raw(Xq)
    assert np.max(np.abs(got - ols_predict(X, y, Xq))) <= 1e-6


def test_ols_collinear_is_finite():
    x = rng.normal(size=(20, 1))
    X = np.hstack([x, 2 * x, np.ones((20, 1))])
    y = x[:, 0] * 0.1 + 0.5
    m = fit_ols(X, y)
    assert np.all(np.isfinite(m.coef_))
    assert np.max(np.abs(m.predict_raw(X) - y)) < 1e-6


# -- k-NN ------------------------------------------------------------------

def test_knn_k1_nearest_target():
    X = np.array([[0.0], [1.0], [3.0]])
    y = np.array([0.1, 0.5, 0.9])
    m = fit_knn(X, y, k=1)
    assert m.predict_raw([[2.9]])[0] == 0.9


def test_knn_zero_distance_rule():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [1.0, 1.0]])
    y = np.array([0.1, 0.4, 0.9, 0.6])
    m = fit_knn(X, y, k=3)
    assert m.predict_raw([[1.0, 1.0]])[0] == pytest.approx(0.5, abs=0)


def test_knn_hand_set_oracle():
    X = rng.integers(0, 5, size=(10, 2)).astype(float)
    y = rng.random(10)
    m = fit_knn(X, y, k=3, metric="manhattan")
    Q = rng.integers(0, 5, size=(6, 2)).astype(float)
    Zq = m.standardiser.transform(Q)
    assert np.array_equal(m.predict_raw(Q), knn_scan(m.X_, m.y_, Zq, 3, "manhattan"))


def test_knn_errors():
    with pytest.raises(KTooLarge):
        fit_knn(np.zeros((2, 1)), np.zeros(2), k=3)
    with pytest.raises(InvalidHyperparam):
        make_model("knn", k=0)
    with pytest.raises(InvalidHyperparam):
        make_model("knn", metric="cosine")


def test_knn_permutation_invariant_distinct():
    X = rng.normal(size=(30, 3))
    y = rng.random(30)
    Q = rng.normal(size=(5, 3))
    perm = rng.permutation(30)
    a = fit_knn(X, y, k=4, metric="euclidean").predict_raw(Q)
    b = fit_knn(X[perm], y[perm], k=4, metric="euclidean").predict_raw(Q)
    assert np.allclose(a, b, rtol=0, atol=1e-12)


# -- tree ------------------------------------------------------------------

def test_tree_step_split_at_midpoint():
    x = np.array([0.05, 0.15, 0.3, 0.45, 0.55, 0.7, 0.8, 0.95])[:, None]
    y = (x[:, 0] > 0.5).astype(float)
    _, j, t = best_split(x, y, 1)
    assert j == 0 and t == pytest.approx(0.5)
    # oracle: enumerate every midpoint, pick the lowest child SSE
    xs = np.sort(x[:, 0])
    best = None
    for a, b in zip(xs[:-1], xs[1:]):
        mid = 0.5 * (a + b)
        left, right = y[x[:, 0] <= mid], y[x[:, 0] > mid]
        sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
        if best is None or sse < best[0]:
            best = (sse, mid)
    assert t == pytest.approx(best[1])
    m = fit_tree(x, y, max_leaf_nodes=2)
    assert m.n_leaves == 2
    assert np.array_equal(m.predict_raw(x), y)


def test_tree_unlimited_is_pure():
    X = rng.normal(size=(60, 3))
    y = rng.random(60)
    m = fit_tree(X, y)
    assert np.max(np.abs(m.predict_raw(X) - y)) <= 1e-12


def test_tree_single_leaf_mean():
    X = rng.normal(size=(25, 2))
    y = rng.random(25)
    m = fit_tree(X, y, max_leaf_nodes=1)
    assert np.all(np.abs(m.predict_raw(X) - y.mean()) <= 1e-12)


def test_tree_limits_respected():
    X = rng.normal(size=(200, 3))
    y = np.sin(X[:, 0]) + 0.1 * X[:, 1]
    assert fit_tree(X, y, max_leaf_nodes=7).n_leaves <= 7
    assert fit_tree(X, y, max_depth=2).n_leaves <= 4
    leaf = fit_tree(X, y, min_samples_leaf=30)
    Z = leaf.standardiser.transform(X)
    assert np.bincount(leaf.apply(Z)).min(initial=30) >= 0
    counts = np.unique(leaf.apply(Z), return_counts=True)[1]
    assert counts.min() >= 30


def test_tree_bad_limits():
    with pytest.raises(InvalidHyperparam):
        RegressionTree(max_depth=-1)


# -- kernels ---------------------------------------------------------------

def test_kernel_values():
    x = np.array([1.0, 1.0])
    assert kernel("rbf", gamma=0.7)(x, x) == 1.0
    assert kernel("linear")([1, 0], [0, 1]) == 0.0
    assert kernel("polynomial", gamma=1, degree=2, coef0=0)(x, x) == 4.0


@pytest.mark.parametrize("kind", KERNELS)
def test_kernel_symmetry_and_scalar_agreement(kind):
    A = rng.normal(size=(8, 3))
    K = kernel_matrix(kind, A, A, gamma=0.3, degree=3, coef0=0.5)
    assert np.max(np.abs(K - K.T)) <= 1e-12
    k = kernel(kind, gamma=0.3, degree=3, coef0=0.5)
    assert K[2, 5] == pytest.approx(k(A[2], A[5]), abs=1e-12)


def test_kernel_bad_hyperparams():
    with pytest.raises(InvalidHyperparam):
        kernel("rbf", gamma=0)
    with pytest.raises(InvalidHyperparam):
        kernel("polynomial", gamma=1, degree=0)


# -- kernel ridge ------------------------------------------------------------

def test_kernel_ridge_residual_identity():
    X = rng.normal(size=(40, 4))
    y = rng.random(40)
    for kind in KERNELS:
        m = fit_kernel_ridge(X, y, kernel=kind, alpha=0.5, gamma=0.2, degree=2, coef0=0.3)
        K = m._kernel(m.X_fit_, m.X_fit_)
        resid = (K + 0.5 * np.eye(40)) @ m.dual_coef_ - (y - m.intercept_)
        assert np.max(np.abs(resid)) <= 1e-8


def test_kernel_ridge_shrinks_with_alpha():
    X = rng.normal(size=(30, 3))
    y = rng.random(30)
    norms = [np.linalg.norm(fit_kernel_ridge(X, y, kernel="rbf", alpha=a, gamma=0.5).dual_coef_)
             for a in (0.1, 1, 10, 100, 1e4)]
    assert all(a > b for a, b in zip(norms, norms[1:]))


def test_kernel_ridge_rejects_alpha():
    with pytest.raises(InvalidHyperparam):
        KernelRidge(alpha=0)


# -- SVR -------------------------------------------------------------------

def test_svr_flat_tube():
    X = rng.normal(size=(15, 2))
    m = fit_svr(X, np.full(15, 0.4), kernel="rbf", C=1, epsilon=0.1)
    assert np.all(m.beta_full_ == 0)
    assert m.predict_raw(X) == pytest.approx(np.full(15, 0.4))


@pytest.mark.parametrize("kind", KERNELS)
def test_svr_kkt(kind):
    X = rng.normal(size=(40, 3))
    y = 0.5 + 0.2 * np.tanh(X[:, 0]) + 0.05 * rng.normal(size=40)
    C, eps = 2.0, 0.05
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConvergedWarning)
        m = fit_svr(X, y, kernel=kind, C=C, epsilon=eps, gamma=0.3, degree=2, coef0=0.1)
    if not m.converged_:
        pytest.skip("SMO hit its update cap")
    r = np.abs(y - m.predict_raw(X))
    beta = m.beta_full_
    assert np.all(beta[r < eps - 1e-3] == 0)
    assert np.all(r[np.isclose(np.abs(beta), C, rtol=0, atol=1e-12)] >= eps - 1e-3)
    assert abs(beta.sum()) < 1e-9


def test_svr_matches_pg_oracle_small():
    X = rng.normal(size=(20, 2))
    y = X @ [0.4, -0.3] + 0.1 * rng.normal(size=20)
    K = X @ X.T
    beta, *_ = smo(K, y, 1.0, 0.1)
    assert abs(dual_objective(beta, K, y, 0.1) - svr_dual_pg(K, y, 1.0, 0.1, iters=20000)) <= 1e-3


def test_svr_objective_monotone():
    X = rng.normal(size=(50, 3))
    y = rng.random(50)
    m = SupportVectorRegressor(kernel="rbf", C=5, epsilon=0.02, gamma=0.5, track_objective=True).fit(X, y)
    h = np.array(m.objective_history_)
    assert len(h) > 1
    assert np.all(np.diff(h) >= -1e-12)


def test_svr_cap_warns_and_flags():
    X = rng.normal(size=(30, 3))
    y = rng.random(30)
    K = X @ X.T
    beta, b, ok, viol, updates, _ = smo(K, y, 100.0, 0.0, max_updates=3)
    assert not ok and updates == 3 and viol > 1e-3
    with pytest.warns(NotConvergedWarning):
        m = SupportVectorRegressor(kernel="linear", C=1e3, epsilon=0.0, tol=1e-15).fit(X, y)
    assert not m.converged_


def test_svr_bad_hyperparams():
    with pytest.raises(InvalidHyperparam):
        SupportVectorRegressor(C=0)
    with pytest.raises(InvalidHyperparam):
        SupportVectorRegressor(epsilon=-0.1)


# -- shared behaviour -----------------------------------------------------

@pytest.mark.parametrize("name,label,kind,fixed", MODEL_CATALOGUE)
def test_predictions_clipped_and_serialisable(name, label, kind, fixed, tmp_path):
    X = rng.normal(size=(30, 4))
    y = np.clip(0.5 + X[:, 0], 0, 1)
    m = make_model(kind, **fixed).fit(X, y)
    Q = rng.normal(size=(12, 4)) * 5
    p = m.predict(Q)
    assert np.all((p >= 0) & (p <= 1))
    assert np.array_equal(p, np.clip(m.predict_raw(Q), 0, 1))
    m.save(tmp_path / "m.json")
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["schema_version"] == 1 and doc["kind"] == kind
    again = load_model(tmp_path / "m.json")
    assert np.array_equal(again.predict_raw(Q), m.predict_raw(Q))
    assert m.predict_time_s >= 0 and m.fit_time_s >= 0


def test_clip_examples():
    m = fit_ols(np.array([[0.0], [1.0]]), np.array([-0.2, 1.3]))
    assert m.predict([[0.0], [1.0], [0.5]]).tolist() == [0.0, 1.0, pytest.approx(0.55)]


def test_from_dict_rejects_schema():
    m = fit_ols(np.eye(3), np.arange(3.0))
    doc = m.to_dict()
    doc["schema_version"] = 99
    with pytest.raises(Exception):
        from_dict(doc)
