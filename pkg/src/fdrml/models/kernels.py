"""Kernel functions shared by kernel ridge and SVR."""
from __future__ import annotations

import numpy as np

from ..errors import InvalidHyperparam

KERNELS = ("linear", "polynomial", "rbf", "sigmoid")


def check_kernel(kind: str, gamma: float, degree: int) -> None:
    if kind not in KERNELS:
        raise InvalidHyperparam(f"kernel must be one of {KERNELS}, not {kind!r}")
    if kind != "linear" and not gamma > 0:
        raise InvalidHyperparam(f"gamma must be > 0, got {gamma}")
    if kind == "polynomial" and degree < 1:
        raise InvalidHyperparam(f"degree must be >= 1, got {degree}")


def kernel_matrix(kind: str, A, B, gamma: float = 1.0, degree: int = 3, coef0: float = 0.0) -> np.ndarray:
    """Gram matrix ``K[i, j] = k(A[i], B[j])``."""
    check_kernel(kind, gamma, degree)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if kind == "rbf":
        sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
        np.maximum(sq, 0.0, out=sq)
        if A is B:
            np.fill_diagonal(sq, 0.0)
        return np.exp(-gamma * sq)
    dot = A @ B.T
    if kind == "linear":
        return dot
    if kind == "polynomial":
        return (gamma * dot + coef0) ** int(degree)
    return np.tanh(gamma * dot + coef0)


def kernel(kind: str, gamma: float = 1.0, degree: int = 3, coef0: float = 0.0):
    """Scalar kernel ``k(x, z)``."""
    check_kernel(kind, gamma, degree)

    def k(x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        if kind == "rbf":
            diff = x - z
            return float(np.exp(-gamma * (diff @ diff)))
        dot = float(x @ z)
        if kind == "linear":
            return dot
        if kind == "polynomial":
            return (gamma * dot + coef0) ** int(degree)
        return float(np.tanh(gamma * dot + coef0))

    return k
