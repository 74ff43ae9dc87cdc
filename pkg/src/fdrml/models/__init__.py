"""From-scratch regressors for per-flip-flop FDR prediction.

Every model standardises its inputs with statistics from the training rows
and clips predictions to [0, 1].
"""
from .base import Regressor, Standardiser, from_dict, load_model
from .kernel_ridge import KernelRidge, fit_kernel_ridge
from .kernels import KERNELS, kernel, kernel_matrix
from .knn import KNeighbors, fit_knn
from .linear import LeastSquares, fit_ols
from .svr import NotConvergedWarning, SupportVectorRegressor, fit_svr
from .tree import RegressionTree, fit_tree

REGISTRY = {
    cls.kind: cls
    for cls in (LeastSquares, KNeighbors, RegressionTree, KernelRidge, SupportVectorRegressor)
}

# (name, display label, kind, fixed hyperparameters): one report row each
MODEL_CATALOGUE = [
    ("ols", "Linear Least Squares", "ols", {}),
    ("knn", "k-Nearest Neighbors", "knn", {}),
    ("tree", "Decision Tree", "tree", {}),
    ("kridge_linear", "Ridge w/ Linear Kernel", "kernel_ridge", {"kernel": "linear"}),
    ("kridge_poly", "Ridge w/ Polynomial Kernel", "kernel_ridge", {"kernel": "polynomial"}),
    ("kridge_rbf", "Ridge w/ RBF Kernel", "kernel_ridge", {"kernel": "rbf"}),
    ("kridge_sigmoid", "Ridge w/ Sigmoid Kernel", "kernel_ridge", {"kernel": "sigmoid"}),
    ("svr_linear", "SVR w/ Linear Kernel", "svr", {"kernel": "linear"}),
    ("svr_poly", "SVR w/ Polynomial Kernel", "svr", {"kernel": "polynomial"}),
    ("svr_rbf", "SVR w/ RBF Kernel", "svr", {"kernel": "rbf"}),
    ("svr_sigmoid", "SVR w/ Sigmoid Kernel", "svr", {"kernel": "sigmoid"}),
]


def make_model(kind: str, **hyperparams) -> Regressor:
    return REGISTRY[kind](**hyperparams)


__all__ = [
    "KERNELS", "MODEL_CATALOGUE", "REGISTRY", "KNeighbors", "KernelRidge", "LeastSquares",
    "NotConvergedWarning", "RegressionTree", "Regressor", "Standardiser", "SupportVectorRegressor",
    "fit_kernel_ridge", "fit_knn", "fit_ols", "fit_svr", "fit_tree", "from_dict", "kernel",
    "kernel_matrix", "load_model", "make_model",
]
