"""Kernel ridge regression solved in the dual."""
from __future__ import annotations

import numpy as np
from scipy import linalg

from ..errors import InvalidHyperparam, SingularSystem
from .base import Regressor
from .kernels import check_kernel, kernel_matrix


class KernelRidge(Regressor):
    """Dual ridge fit on mean-centred targets; ``intercept_`` is the training mean."""

    kind = "kernel_ridge"

    def __init__(self, kernel: str = "linear", alpha: float = 1.0, gamma: float = 1.0,
                 degree: int = 2, coef0: float = 0.0):
        super().__init__(kernel=kernel, alpha=float(alpha), gamma=float(gamma),
                         degree=int(degree), coef0=float(coef0))

    def _check_hyperparams(self):
        hp = self.hyperparams
        if not hp["alpha"] > 0:
            raise InvalidHyperparam(f"alpha must be > 0, got {hp['alpha']}")
        check_kernel(hp["kernel"], hp["gamma"], hp["degree"])

    def _kernel(self, A, B):
        hp = self.hyperparams
        return kernel_matrix(hp["kernel"], A, B, hp["gamma"], hp["degree"], hp["coef0"])

    def _fit(self, Z, y):
        K = self._kernel(Z, Z)
        A = K + self.hyperparams["alpha"] * np.eye(len(y))
        try:
            factor = linalg.cho_factor(A)
            solve = lambda b: linalg.cho_solve(factor, b)  # noqa: E731
        except linalg.LinAlgError:
            # indefinite kernels (sigmoid) break Cholesky; fall back to LDL^T
            def solve(b):
                try:
                    return linalg.solve(A, b, assume_a="sym")
                except linalg.LinAlgError as exc:
                    raise SingularSystem(str(exc)) from exc
        self.intercept_ = float(y.mean())
        t = y - self.intercept_
        c = solve(t)
        c = c + solve(t - A @ c)  # one step of iterative refinement
        self.dual_coef_ = c
        self.X_fit_ = Z
        self.coef_ = None
        if self.hyperparams["kernel"] == "linear":
            # Z'c equals this primal weight vector, but at small alpha c carries a
            # huge null-space component that cancels badly at predict time
            G = Z.T @ Z + self.hyperparams["alpha"] * np.eye(Z.shape[1])
            self.coef_ = linalg.solve(G, Z.T @ t, assume_a="sym")

    def _predict(self, Z):
        if self.coef_ is not None:
            return Z @ self.coef_ + self.intercept_
        return self._kernel(Z, self.X_fit_) @ self.dual_coef_ + self.intercept_

    def _params(self):
        return {"dual_coef": self.dual_coef_.tolist(), "X_fit": self.X_fit_.tolist(),
                "intercept": self.intercept_,
                "coef": None if self.coef_ is None else self.coef_.tolist()}

    def _load_params(self, p):
        self.dual_coef_ = np.asarray(p["dual_coef"], dtype=float)
        self.X_fit_ = np.asarray(p["X_fit"], dtype=float)
        self.intercept_ = float(p["intercept"])
        self.coef_ = None if p.get("coef") is None else np.asarray(p["coef"], dtype=float)


def fit_kernel_ridge(X, y, **hp) -> KernelRidge:
    return KernelRidge(**hp).fit(X, y)
