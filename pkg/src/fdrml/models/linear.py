"""Ordinary least squares via the normal equations."""
from __future__ import annotations

import numpy as np
from scipy import linalg

from .base import Regressor

JITTER = 1e-12


class LeastSquares(Regressor):
    kind = "ols"

    def _fit(self, Z, y):
        zbar = Z.mean(axis=0)
        ybar = y.mean()
        Zc = Z - zbar
        G = Zc.T @ Zc
        rhs = Zc.T @ (y - ybar)
        d = G.shape[0]
        if d == 0:
            w = np.zeros(0)
        else:
            eig = np.linalg.eigvalsh(G)
            top = max(eig[-1], 1.0)
            if eig[0] <= 1e-10 * top:
                # singular Gram (constant or collinear features): a tiny ridge
                # picks the minimum-norm solution
                G = G + JITTER * top * np.eye(d)
            w = linalg.cho_solve(linalg.cho_factor(G), rhs)
        self.coef_ = w
        self.intercept_ = float(ybar - zbar @ w)

    def _predict(self, Z):
        return Z @ self.coef_ + self.intercept_

    def _params(self):
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_}

    def _load_params(self, p):
        self.coef_ = np.asarray(p["coef"], dtype=float)
        self.intercept_ = float(p["intercept"])


def fit_ols(X, y) -> LeastSquares:
    return LeastSquares().fit(X, y)
