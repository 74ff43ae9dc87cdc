"""CART regression tree (MSE criterion, best-first growth)."""
from __future__ import annotations

import heapq

import numpy as np

from ..errors import InvalidHyperparam
from .base import Regressor

PURE_MSE = 1e-12


def best_split(Z, y, min_leaf: int):
    """Lowest total child SSE over all features and midpoint thresholds.

    Returns ``(sse, feature, threshold)`` or ``None``. Ties keep the lower
    feature index, then the lower threshold.
    """
    n, d = Z.shape
    best = None
    lo = max(min_leaf, 1)
    for j in range(d):
        order = np.argsort(Z[:, j], kind="stable")
        xs = Z[order, j]
        ys = y[order]
        s1 = np.cumsum(ys)
        s2 = np.cumsum(ys * ys)
        nl = np.arange(1, n)
        nr = n - nl
        sse_l = s2[:-1] - s1[:-1] ** 2 / nl
        sse_r = (s2[-1] - s2[:-1]) - (s1[-1] - s1[:-1]) ** 2 / nr
        total = sse_l + sse_r
        ok = (xs[:-1] < xs[1:]) & (nl >= lo) & (nr >= lo)
        if not ok.any():
            continue
        cand = np.flatnonzero(ok)
        i = cand[np.argmin(total[cand])]
        if best is None or total[i] < best[0]:
            t = 0.5 * (xs[i] + xs[i + 1])
            if not xs[i] <= t < xs[i + 1]:
                t = xs[i]
            best = (float(total[i]), j, float(t))
    return best


class RegressionTree(Regressor):
    """Limits of 0 mean unlimited."""

    kind = "tree"

    def __init__(self, max_depth: int = 0, max_leaf_nodes: int = 0, min_samples_leaf: int = 0):
        super().__init__(max_depth=int(max_depth), max_leaf_nodes=int(max_leaf_nodes),
                         min_samples_leaf=int(min_samples_leaf))

    def _check_hyperparams(self):
        for k, v in self.hyperparams.items():
            if v < 0:
                raise InvalidHyperparam(f"{k} must be >= 0")

    def _fit(self, Z, y):
        hp = self.hyperparams
        max_depth, max_leaves, msl = hp["max_depth"], hp["max_leaf_nodes"], hp["min_samples_leaf"]
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(rows):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(y[rows].mean()))
            return len(value) - 1

        def candidate(node, rows, depth):
            """Heap entry for a splittable node, or None if it must stay a leaf."""
            yr = y[rows]
            if len(rows) < max(2, 2 * msl) or np.var(yr) <= PURE_MSE:
                return None
            if max_depth and depth >= max_depth:
                return None
            split = best_split(Z[rows], yr, msl)
            if split is None:
                return None
            sse, j, t = split
            parent_sse = float(np.sum((yr - yr.mean()) ** 2))
            return (-(parent_sse - sse), node, rows, depth, j, t)

        root = new_node(np.arange(len(y)))
        heap = []
        c = candidate(root, np.arange(len(y)), 0)
        if c:
            heap.append(c)
        leaves = 1
        while heap:
            if max_leaves and leaves >= max_leaves:
                break
            _, node, rows, depth, j, t = heapq.heappop(heap)
            go_left = Z[rows, j] <= t
            lrows, rrows = rows[go_left], rows[~go_left]
            feature[node], threshold[node] = j, t
            li, ri = new_node(lrows), new_node(rrows)
            left[node], right[node] = li, ri
            leaves += 1
            for child, crow in ((li, lrows), (ri, rrows)):
                c = candidate(child, crow, depth + 1)
                if c:
                    heapq.heappush(heap, c)

        self.feature_ = np.array(feature, dtype=int)
        self.threshold_ = np.array(threshold, dtype=float)
        self.left_ = np.array(left, dtype=int)
        self.right_ = np.array(right, dtype=int)
        self.value_ = np.array(value, dtype=float)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature_ < 0))

    def apply(self, Z) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(len(Z), dtype=int)
        while True:
            inner = self.feature_[node] >= 0
            if not inner.any():
                return node
            rows = np.flatnonzero(inner)
            nd = node[rows]
            go_left = Z[rows, self.feature_[nd]] <= self.threshold_[nd]
            node[rows] = np.where(go_left, self.left_[nd], self.right_[nd])

    def _predict(self, Z):
        return self.value_[self.apply(Z)]

    def _params(self):
        return {
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "value": self.value_.tolist(),
        }

    def _load_params(self, p):
        self.feature_ = np.asarray(p["feature"], dtype=int)
        self.threshold_ = np.asarray(p["threshold"], dtype=float)
        self.left_ = np.asarray(p["left"], dtype=int)
        self.right_ = np.asarray(p["right"], dtype=int)
        self.value_ = np.asarray(p["value"], dtype=float)


def fit_tree(X, y, max_depth=0, max_leaf_nodes=0, min_samples_leaf=0) -> RegressionTree:
    return RegressionTree(max_depth, max_leaf_nodes, min_samples_leaf).fit(X, y)
