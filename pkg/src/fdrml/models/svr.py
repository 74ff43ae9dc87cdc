"""Epsilon-insensitive support vector regression trained by SMO.

The dual is written in ``beta_i = alpha_i - alpha_i*`` with ``|beta_i| <= C``
and ``sum(beta) = 0``; it maximises

    W(beta) = y.beta - 0.5 beta'K beta - eps * |beta|_1

Each step moves one coefficient up and another down by the same amount,
picking the most violating coefficient, pairing it by second-order gain,
and solving the one-dimensional piecewise-quadratic subproblem exactly.
"""
from __future__ import annotations

import warnings

import numpy as np
from numba import njit

from ..errors import InvalidHyperparam
from .base import Regressor
from .kernels import check_kernel, kernel_matrix

KKT_TOL = 1e-3


class NotConvergedWarning(UserWarning):
    pass


def dual_objective(beta, K, y, epsilon) -> float:
    return float(y @ beta - 0.5 * beta @ K @ beta - epsilon * np.abs(beta).sum())


@njit(cache=True)
def _pair_gain(t, bi, bj, gdiff, eta, eps):
    return t * gdiff - 0.5 * eta * t * t - eps * (abs(bi + t) - abs(bi) + abs(bj - t) - abs(bj))


@njit(cache=True)
def _sgn(x):
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


@njit(cache=True)
def _best_step(bi, bj, gi, gj, eta, C, eps):
    """Exact maximiser of the pair gain over the feasible step interval."""
    lo = max(-C - bi, bj - C)
    hi = min(C - bi, bj + C)
    gdiff = gi - gj
    pts = np.empty(5)
    m = 0
    for p in (lo, hi, 0.0, -bi, bj):
        if lo <= p <= hi:
            pts[m] = p
            m += 1
    pts = np.sort(pts[:m])
    best_t = 0.0
    best_g = 0.0
    for k in range(m):
        g = _pair_gain(pts[k], bi, bj, gdiff, eta, eps)
        if g > best_g:
            best_t, best_g = pts[k], g
    if eta > 0:
        for k in range(m - 1):
            a, b = pts[k], pts[k + 1]
            mid = 0.5 * (a + b)
            t = (gdiff - eps * (_sgn(bi + mid) - _sgn(bj - mid))) / eta
            t = min(max(t, a), b)
            g = _pair_gain(t, bi, bj, gdiff, eta, eps)
            if g > best_g:
                best_t, best_g = t, g
    return best_t


@njit(cache=True)
def _smo_loop(K, y, C, eps, tol, cap, track):
    n = len(y)
    beta = np.zeros(n)
    g = y.copy()  # y - K beta
    history = np.zeros(cap + 1 if track else 1)
    updates = 0
    converged = False
    viol = np.inf
    while True:
        # U: gain per unit moving a coefficient up; L: cost per unit moving it down
        i = -1
        umax = -np.inf
        lmin = np.inf
        for m in range(n):
            if beta[m] < C:
                u = g[m] - eps if beta[m] >= 0 else g[m] + eps
                if u > umax:
                    umax, i = u, m
            if beta[m] > -C:
                l = g[m] + eps if beta[m] <= 0 else g[m] - eps
                if l < lmin:
                    lmin = l
        viol = umax - lmin
        if viol <= tol:
            converged = True
            break
        if updates >= cap:
            break
        # second-order choice of the partner: largest predicted gain b^2 / eta
        j = -1
        best = -np.inf
        for m in range(n):
            if beta[m] > -C:
                l = g[m] + eps if beta[m] <= 0 else g[m] - eps
                b = umax - l
                if b > 0:
                    eta = max(K[i, i] + K[m, m] - 2.0 * K[i, m], 1e-12)
                    sc = b * b / eta
                    if sc > best:
                        best, j = sc, m
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        t = _best_step(beta[i], beta[j], g[i], g[j], eta, C, eps)
        if t == 0.0:
            break  # numerically stuck
        beta[i] += t
        beta[j] -= t
        for m in (i, j):
            if abs(beta[m] - C) <= 1e-12 * C:
                beta[m] = C
            elif abs(beta[m] + C) <= 1e-12 * C:
                beta[m] = -C
        for m in range(n):
            g[m] -= t * (K[m, i] - K[m, j])
        updates += 1
        if track:
            obj = 0.0
            for m in range(n):
                obj += 0.5 * beta[m] * (y[m] + g[m]) - eps * abs(beta[m])
            history[updates] = obj
    return beta, converged, viol, updates, history[: updates + 1]


def _violators(beta, g, C, eps):
    up = beta < C
    down = beta > -C
    U = g - eps * np.where(beta >= 0, 1.0, -1.0)
    L = g + eps * np.where(beta <= 0, 1.0, -1.0)
    return U, L, up, down


def smo(K, y, C, epsilon, tol=KKT_TOL, max_updates=None, track=False):
    """Solve the dual. Returns ``(beta, bias, converged, violation, updates, history)``."""
    n = len(y)
    y = np.ascontiguousarray(y, dtype=float)
    K = np.ascontiguousarray(K, dtype=float)
    cap = 10 * n * n if max_updates is None else int(max_updates)
    beta, converged, viol, updates, hist = _smo_loop(K, y, float(C), float(epsilon), float(tol), cap, track)

    g = y - K @ beta
    U, L, up, down = _violators(beta, g, C, epsilon)
    free = (beta != 0) & (np.abs(beta) < C)
    if free.any():
        b = float(np.mean(np.where(beta[free] > 0, g[free] - epsilon, g[free] + epsilon)))
    else:
        hi = np.max(U[up]) if up.any() else np.min(L[down])
        lo = np.min(L[down]) if down.any() else hi
        b = 0.5 * (hi + lo)
    return beta, b, bool(converged), float(viol), int(updates), (hist.tolist() if track else None)


class SupportVectorRegressor(Regressor):
    kind = "svr"

    def __init__(self, kernel: str = "rbf", C: float = 1.0, epsilon: float = 0.1, gamma: float = 1.0,
                 degree: int = 3, coef0: float = 0.0, tol: float = KKT_TOL, track_objective: bool = False):
        super().__init__(kernel=kernel, C=float(C), epsilon=float(epsilon), gamma=float(gamma),
                         degree=int(degree), coef0=float(coef0))
        self.tol = tol
        self.track_objective = track_objective

    def _check_hyperparams(self):
        hp = self.hyperparams
        if not hp["C"] > 0:
            raise InvalidHyperparam(f"C must be > 0, got {hp['C']}")
        if not hp["epsilon"] >= 0:
            raise InvalidHyperparam(f"epsilon must be >= 0, got {hp['epsilon']}")
        check_kernel(hp["kernel"], hp["gamma"], hp["degree"])

    def _kernel(self, A, B):
        hp = self.hyperparams
        return kernel_matrix(hp["kernel"], A, B, hp["gamma"], hp["degree"], hp["coef0"])

    def _fit(self, Z, y):
        hp = self.hyperparams
        K = self._kernel(Z, Z)
        beta, b, ok, viol, updates, hist = smo(K, y, hp["C"], hp["epsilon"], self.tol,
                                               track=self.track_objective)
        self.converged_ = ok
        self.kkt_violation_ = viol
        self.n_updates_ = updates
        self.objective_history_ = hist
        self.beta_full_ = beta
        self.dual_objective_ = dual_objective(beta, K, y, hp["epsilon"])
        if not ok:
            warnings.warn(f"SMO stopped after {updates} updates with KKT violation {viol:.3g}",
                          NotConvergedWarning, stacklevel=3)
        sv = beta != 0
        self.support_ = np.flatnonzero(sv)
        self.dual_coef_ = beta[sv]
        self.support_rows_ = Z[sv]
        self.intercept_ = b

    def _predict(self, Z):
        if len(self.dual_coef_) == 0:
            return np.full(len(Z), self.intercept_)
        return self._kernel(Z, self.support_rows_) @ self.dual_coef_ + self.intercept_

    def _params(self):
        return {
            "dual_coef": self.dual_coef_.tolist(),
            "support_rows": self.support_rows_.tolist(),
            "intercept": self.intercept_,
            "converged": self.converged_,
        }

    def _load_params(self, p):
        self.dual_coef_ = np.asarray(p["dual_coef"], dtype=float)
        rows = np.asarray(p["support_rows"], dtype=float)
        self.support_rows_ = rows.reshape(len(self.dual_coef_), -1) if rows.size else rows.reshape(0, 0)
        self.intercept_ = float(p["intercept"])
        self.converged_ = bool(p["converged"])


def fit_svr(X, y, **hp) -> SupportVectorRegressor:
    return SupportVectorRegressor(**hp).fit(X, y)
