"""Regression metrics, Monte-Carlo cross-validation and learning curves."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTargets, LengthMismatch, TooFewRows
from .models import make_model


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise LengthMismatch(f"X{self.X.shape} does not match y{self.y.shape}")
        if len(self.y) == 0:
            raise TooFewRows("empty dataset")
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.y)):
            raise ValueError("dataset contains missing or non-finite entries")
        if not self.ids:
            self.ids = [str(i) for i in range(len(self.y))]

    def __len__(self):
        return len(self.y)

    def subset(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows], [self.ids[i] for i in rows])


@dataclass
class MetricReport:
    mae: float
    max_abs: float
    rmse: float
    ev: float
    r2: float
    fit_time_s: float = 0.0
    predict_time_s: float = 0.0


def metrics(y_true, y_pred, strict: bool = False) -> MetricReport:
    """MAE, max error, RMSE, explained variance and R^2.

    EV and R^2 are undefined for constant ``y_true``: they come back as NaN,
    or raise :class:`DegenerateTargets` when ``strict``.
    """
    y = np.asarray(y_true, dtype=float).ravel()
    p = np.asarray(y_pred, dtype=float).ravel()
    if len(y) != len(p):
        raise LengthMismatch(f"{len(y)} targets vs {len(p)} predictions")
    if len(y) == 0:
        raise LengthMismatch("no samples")
    e = y - p
    ae = np.abs(e)
    var_y = np.var(y)
    if var_y > 0:
        ev = 1.0 - np.var(e) / var_y
        r2 = 1.0 - np.sum(e * e) / np.sum((y - y.mean()) ** 2)
    elif strict:
        raise DegenerateTargets("constant targets: EV and R^2 are undefined")
    else:
        ev = r2 = math.nan
    return MetricReport(
        mae=float(ae.mean()),
        max_abs=float(ae.max()),
        rmse=float(math.sqrt(np.mean(e * e))),
        ev=float(ev),
        r2=float(r2),
    )


@dataclass
class CvPlan:
    folds: int = 10
    train_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")


def shuffle_split(n: int, train_fraction: float, seed: int, fold: int) -> tuple[np.ndarray, np.ndarray]:
    """Train rows = first ceil(n*t) of a permutation seeded by ``(seed, fold)``."""
    n_train = math.ceil(n * train_fraction)
    if n_train < 2:
        raise TooFewRows(f"{n} rows at train fraction {train_fraction} leave {n_train} training rows")
    if n_train >= n:
        raise TooFewRows(f"{n} rows at train fraction {train_fraction} leave no test rows")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(fold,)))
    perm = rng.permutation(n)
    return perm[:n_train], perm[n_train:]


@dataclass
class FoldResult:
    train_idx: np.ndarray
    test_idx: np.ndarray
    train: MetricReport
    test: MetricReport


@dataclass
class CvResult:
    folds: list[FoldResult]

    def _vals(self, part, attr):
        return np.array([getattr(getattr(f, part), attr) for f in self.folds])

    def mean(self, part="test", attr="r2") -> float:
        return float(np.mean(self._vals(part, attr)))

    def std(self, part="test", attr="r2") -> float:
        return float(np.std(self._vals(part, attr)))

    def scores(self, part="test", attr="r2") -> list[float]:
        return self._vals(part, attr).tolist()


def fit_and_score(train: Dataset, test: Dataset, kind: str, hp: dict):
    model = make_model(kind, **hp).fit(train.X, train.y)
    tr = metrics(train.y, model.predict(train.X))
    pred = model.predict(test.X)
    te = metrics(test.y, pred)
    tr.fit_time_s = te.fit_time_s = model.fit_time_s
    te.predict_time_s = model.predict_time_s
    return model, tr, te, pred


def cv_evaluate(data: Dataset, kind: str, hp: dict, plan: CvPlan) -> CvResult:
    """Monte-Carlo CV: ``plan.folds`` independent shuffled splits."""
    folds = []
    for k in range(plan.folds):
        tr_idx, te_idx = shuffle_split(len(data), plan.train_fraction, plan.seed, k)
        _, tr, te, _ = fit_and_score(data.subset(tr_idx), data.subset(te_idx), kind, hp)
        folds.append(FoldResult(tr_idx, te_idx, tr, te))
    return CvResult(folds)


LEARNING_CURVE_COLUMNS = [
    "train size", "train mean", "train std", "test mean", "test std", "fit time mean", "fit time std",
]


def learning_curve(data: Dataset, kind: str, hp: dict, train_sizes, plan: CvPlan) -> list[dict]:
    """R^2 and fit time across training fractions, one row per fraction."""
    rows = []
    for t in train_sizes:
        if not 0 < t < 1:
            raise ValueError(f"train size {t} outside (0, 1)")
        res = cv_evaluate(data, kind, hp, CvPlan(plan.folds, t, plan.seed))
        rows.append({
            "train size": float(t),
            "train mean": res.mean("train"),
            "train std": res.std("train"),
            "test mean": res.mean("test"),
            "test std": res.std("test"),
            "fit time mean": res.mean("test", "fit_time_s"),
            "fit time std": res.std("test", "fit_time_s"),
        })
    return rows


def write_learning_curve_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEARNING_CURVE_COLUMNS)
        for r in rows:
            w.writerow([repr(float(r[c])) for c in LEARNING_CURVE_COLUMNS])
