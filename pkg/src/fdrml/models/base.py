"""Shared machinery for the regressors: standardisation, clipping, timing, JSON I/O."""
from __future__ import annotations

import json
import time

import numpy as np

from ..errors import ModelError

SCHEMA_VERSION = 1


class Standardiser:
    """Zero-mean / unit-variance scaling learned from training rows only.

    Constant columns map to 0.
    """

    def __init__(self, mean=None, scale=None):
        self.mean = None if mean is None else np.asarray(mean, dtype=float)
        self.scale = None if scale is None else np.asarray(scale, dtype=float)

    def fit(self, X) -> "Standardiser":
        X = np.asarray(X, dtype=float)
        self.mean = X.mean(axis=0)
        self.scale = X.std(axis=0)
        # rounding in the mean leaves a tiny nonzero std on constant columns
        self.scale[np.ptp(X, axis=0) == 0] = 0.0
        return self

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        live = self.scale > 0
        Z = np.zeros_like(X)
        Z[:, live] = (X[:, live] - self.mean[live]) / self.scale[live]
        return Z

    def fit_transform(self, X) -> np.ndarray:
        return self.fit(X).transform(X)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}


class Regressor:
    """Base class: subclasses implement ``_fit(Z, y)`` and ``_predict(Z)`` on standardised rows."""

    kind = ""

    def __init__(self, **hyperparams):
        self.hyperparams = dict(hyperparams)
        self.standardiser = Standardiser()
        self.fit_time_s = 0.0
        self.predict_time_s = 0.0
        self._check_hyperparams()

    def _check_hyperparams(self):
        pass

    def fit(self, X, y) -> "Regressor":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
            raise ModelError(f"bad training shapes X{X.shape} y{y.shape}")
        start = time.perf_counter()
        Z = self.standardiser.fit_transform(X)
        self._fit(Z, y)
        self.fit_time_s = time.perf_counter() - start
        return self

    def predict_raw(self, X) -> np.ndarray:
        """Predictions before clipping to [0, 1]."""
        Z = self.standardiser.transform(np.atleast_2d(np.asarray(X, dtype=float)))
        return self._predict(Z)

    def predict(self, X) -> np.ndarray:
        start = time.perf_counter()
        out = np.clip(self.predict_raw(X), 0.0, 1.0)
        self.predict_time_s = time.perf_counter() - start
        return out

    # serialisation -------------------------------------------------------

    def _params(self) -> dict:
        raise NotImplementedError

    def _load_params(self, params: dict) -> None:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "hyperparams": self.hyperparams,
            "standardiser": self.standardiser.to_dict(),
            "params": self._params(),
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def _arr(x):
    return np.asarray(x, dtype=float)


def from_dict(doc: dict) -> Regressor:
    from . import REGISTRY

    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ModelError(f"unsupported model schema version {doc.get('schema_version')!r}")
    try:
        cls = REGISTRY[doc["kind"]]
    except KeyError:
        raise ModelError(f"unknown model kind {doc.get('kind')!r}") from None
    model = cls(**doc["hyperparams"])
    st = doc["standardiser"]
    model.standardiser = Standardiser(_arr(st["mean"]), _arr(st["scale"]))
    model._load_params(doc["params"])
    return model


def load_model(path) -> Regressor:
    with open(path, encoding="utf-8") as fh:
        return from_dict(json.load(fh))
