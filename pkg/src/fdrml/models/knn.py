"""Inverse-distance weighted k-nearest-neighbour regression (brute force)."""
from __future__ import annotations

import numpy as np

from ..errors import InvalidHyperparam, KTooLarge
from .base import Regressor

METRICS = ("manhattan", "euclidean")


def pairwise_distances(A, B, metric: str) -> np.ndarray:
    """Distances ``[len(A), len(B)]``, summed column by column left to right."""
    D = np.zeros((len(A), len(B)))
    for j in range(A.shape[1]):
        diff = A[:, j, None] - B[None, :, j]
        if metric == "manhattan":
            D += np.abs(diff)
        else:
            D += diff * diff
    if metric == "euclidean":
        np.sqrt(D, out=D)
    return D


class KNeighbors(Regressor):
    kind = "knn"

    def __init__(self, k: int = 3, metric: str = "manhattan"):
        super().__init__(k=int(k), metric=metric)

    def _check_hyperparams(self):
        if self.hyperparams["k"] < 1:
            raise InvalidHyperparam("k must be >= 1")
        if self.hyperparams["metric"] not in METRICS:
            raise InvalidHyperparam(f"metric must be one of {METRICS}")

    def _fit(self, Z, y):
        if self.hyperparams["k"] > len(y):
            raise KTooLarge(f"k={self.hyperparams['k']} exceeds {len(y)} training rows")
        self.X_ = Z
        self.y_ = y

    def neighbors(self, Z) -> tuple[np.ndarray, np.ndarray]:
        """Indices and distances of the k nearest rows; ties go to the lower index."""
        k = self.hyperparams["k"]
        D = pairwise_distances(Z, self.X_, self.hyperparams["metric"])
        idx = np.argsort(D, axis=1, kind="stable")[:, :k]
        return idx, np.take_along_axis(D, idx, axis=1)

    def _predict(self, Z):
        idx, dist = self.neighbors(Z)
        ys = self.y_[idx]
        if idx.shape[1] == 1:
            # (y/d)/(1/d) is not exact in floating point
            return ys[:, 0].copy()
        num = np.zeros(len(Z))
        den = np.zeros(len(Z))
        zsum = np.zeros(len(Z))
        zcnt = np.zeros(len(Z))
        exact = dist == 0
        for r in range(idx.shape[1]):
            ok = ~exact[:, r]
            num[ok] += ys[ok, r] / dist[ok, r]
            den[ok] += 1.0 / dist[ok, r]
            zsum[~ok] += ys[~ok, r]
            zcnt[~ok] += 1
        has_zero = zcnt > 0
        out = np.empty(len(Z))
        out[has_zero] = zsum[has_zero] / zcnt[has_zero]
        out[~has_zero] = num[~has_zero] / den[~has_zero]
        return out

    def _params(self):
        return {"X": self.X_.tolist(), "y": self.y_.tolist()}

    def _load_params(self, p):
        self.X_ = np.asarray(p["X"], dtype=float)
        self.y_ = np.asarray(p["y"], dtype=float)


def fit_knn(X, y, k=3, metric="manhattan") -> KNeighbors:
    return KNeighbors(k, metric).fit(X, y)
