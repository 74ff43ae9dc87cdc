"""Hyperparameter search: random sampling, then a grid around the best sample."""
from __future__ import annotations

import itertools
import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FdrError
from .evaluate import CvPlan, Dataset, cv_evaluate


@dataclass(frozen=True)
class LogUniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValueError(f"log-uniform needs 0 < lo < hi, got [{self.lo}, {self.hi}]")

    def sample(self, rng):
        return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))

    def grid(self, best, points, span):
        lo, hi = max(self.lo, best / span), min(self.hi, best * span)
        return np.geomspace(lo, hi, points).tolist() if hi > lo else [best]

    def contains(self, v):
        return self.lo <= v <= self.hi


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    def sample(self, rng):
        return float(rng.uniform(self.lo, self.hi))

    def grid(self, best, points, span):
        if best != 0:
            a, b = sorted((best / span, best * span))
        else:
            half = (self.hi - self.lo) / (2 * span)
            a, b = best - half, best + half
        a, b = max(self.lo, a), min(self.hi, b)
        return np.linspace(a, b, points).tolist() if b > a else [best]

    def contains(self, v):
        return self.lo <= v <= self.hi


@dataclass(frozen=True)
class IntRange:
    """Integers in ``[lo, hi]`` plus optional special values (e.g. 0 = unlimited)."""

    lo: int
    hi: int
    extra: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"int range needs lo <= hi, got [{self.lo}, {self.hi}]")

    def values(self):
        return sorted(set(self.extra) | set(range(self.lo, self.hi + 1)))

    def sample(self, rng):
        vals = self.values()
        return int(vals[rng.integers(len(vals))])

    def grid(self, best, points, span):
        if best in self.extra and not self.lo <= best <= self.hi:
            return [best]
        lo, hi = max(self.lo, best / span), min(self.hi, best * span)
        if hi <= lo:
            return [best]
        vals = np.unique(np.clip(np.rint(np.geomspace(lo, hi, points)), self.lo, self.hi).astype(int))
        return [int(v) for v in vals]

    def contains(self, v):
        return v in self.extra or self.lo <= v <= self.hi


@dataclass(frozen=True)
class Choice:
    options: tuple

    def sample(self, rng):
        return self.options[int(rng.integers(len(self.options)))]

    def grid(self, best, points, span):
        return [best]

    def contains(self, v):
        return v in self.options


@dataclass
class SearchSpace:
    params: dict
    random_budget: int = 20
    grid_points_per_param: int = 3
    grid_span_factor: float = 2.0

    def __post_init__(self):
        if self.random_budget < 1 or self.grid_points_per_param < 1:
            raise ValueError("search budgets must be >= 1")
        if self.grid_span_factor <= 1:
            raise ValueError("grid_span_factor must be > 1")

    def sample(self, rng) -> dict:
        return {name: self.params[name].sample(rng) for name in sorted(self.params)}

    def contains(self, hp: dict) -> bool:
        return all(self.params[k].contains(v) for k, v in hp.items() if k in self.params)


_TREE_LIMIT = IntRange(2, 64, extra=(0,))
_COMMON = {
    "gamma": LogUniform(1e-6, 1e3),
    "degree": IntRange(1, 6),
    "coef0": Uniform(-1.0, 1.0),
}


def default_space(kind: str, kernel: str | None = None, **budgets) -> SearchSpace:
    """Declared default search space for a model family (and fixed kernel)."""
    if kind == "ols":
        params = {}
    elif kind == "knn":
        params = {"k": IntRange(1, 25), "metric": Choice(("manhattan", "euclidean"))}
    elif kind == "tree":
        params = {"max_depth": _TREE_LIMIT, "max_leaf_nodes": _TREE_LIMIT, "min_samples_leaf": _TREE_LIMIT}
    elif kind in ("kernel_ridge", "svr"):
        params = {"C": LogUniform(1e-6, 1e3), "epsilon": Uniform(0.0, 0.2)} if kind == "svr" else {
            "alpha": LogUniform(1e-6, 1e3)}
        kernel = kernel or "rbf"
        params["kernel"] = Choice((kernel,))
        if kernel != "linear":
            params["gamma"] = _COMMON["gamma"]
        if kernel == "polynomial":
            params["degree"] = _COMMON["degree"]
        if kernel in ("polynomial", "sigmoid"):
            params["coef0"] = _COMMON["coef0"]
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return SearchSpace(params, **budgets)


@dataclass
class Trial:
    index: int
    stage: int
    hp: dict
    fold_scores: list = field(default_factory=list)
    mean: float = -math.inf
    fit_time_s: float = 0.0
    predict_time_s: float = 0.0
    error: str | None = None

    def to_json(self) -> str:
        return json.dumps({
            "trial": self.index,
            "stage": self.stage,
            "hp": self.hp,
            "fold_scores": self.fold_scores,
            "mean": self.mean if math.isfinite(self.mean) else None,
            "error": self.error,
            "fit_time_s": self.fit_time_s,
            "predict_time_s": self.predict_time_s,
        }, sort_keys=True)


@dataclass
class TuneResult:
    best_hp: dict
    best_score: float
    trials: list[Trial]
    elapsed_s: float
    truncated: bool = False

    def write_log(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for t in self.trials:
                fh.write(t.to_json() + "\n")


def _score(data, kind, hp, plan, index, stage) -> Trial:
    trial = Trial(index, stage, hp)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = cv_evaluate(data, kind, hp, plan)
    except (FdrError, np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        trial.error = f"{type(exc).__name__}: {exc}"
        return trial
    scores = res.scores("test", "r2")
    trial.fold_scores = [s if math.isfinite(s) else None for s in scores]
    mean = float(np.mean(scores))
    trial.mean = mean if math.isfinite(mean) else -math.inf
    trial.fit_time_s = res.mean("test", "fit_time_s")
    trial.predict_time_s = res.mean("test", "predict_time_s")
    return trial


def tune(data: Dataset, kind: str, space: SearchSpace, plan: CvPlan, seed: int = 0,
         time_budget_s: float | None = None) -> TuneResult:
    """Random search over ``space``, then a cartesian grid around the best sample.

    Trials are scored by mean test R^2 over the CV folds; the highest wins,
    earlier trials winning exact ties.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    trials: list[Trial] = []
    truncated = False

    if not space.params:
        trials.append(_score(data, kind, {}, plan, 0, 1))
    else:
        for _ in range(space.random_budget):
            if time_budget_s is not None and trials and time.perf_counter() - start > 0.5 * time_budget_s:
                truncated = True
                break
            trials.append(_score(data, kind, space.sample(rng), plan, len(trials), 1))

        best = _best(trials)
        numeric = [k for k in sorted(space.params) if not isinstance(space.params[k], Choice)]
        if numeric:
            points = space.grid_points_per_param
            if time_budget_s is not None:
                per_trial = (time.perf_counter() - start) / max(len(trials), 1)
                remaining = time_budget_s - (time.perf_counter() - start)
                while points > 3 and per_trial * points ** len(numeric) > remaining:
                    points -= 1
                    truncated = True
            axes = [space.params[k].grid(best.hp[k], points, space.grid_span_factor) for k in numeric]
            for combo in itertools.product(*axes):
                hp = dict(best.hp)
                hp.update(zip(numeric, combo))
                trials.append(_score(data, kind, hp, plan, len(trials), 2))

    best = _best(trials)
    return TuneResult(dict(best.hp), best.mean, trials, time.perf_counter() - start, truncated)


def _best(trials: list[Trial]) -> Trial:
    best = trials[0]
    for t in trials[1:]:
        if t.mean > best.mean:
            best = t
    return best
