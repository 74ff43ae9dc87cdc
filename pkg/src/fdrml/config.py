"""Run configuration: TOML file, defaults, validation and effective-config output."""
from __future__ import annotations

import copy
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .campaign import DEFAULT_INJECTIONS_PER_FF, CheckerConfig
from .errors import ConfigError
from .models import MODEL_CATALOGUE
from .tune import Choice, IntRange, LogUniform, SearchSpace, Uniform, default_space

MODEL_NAMES = [m[0] for m in MODEL_CATALOGUE]
CATALOGUE = {m[0]: m for m in MODEL_CATALOGUE}

DEFAULTS = {
    "seed": 0,
    "paths": {"netlist": "", "stimulus": "", "out_dir": "out"},
    "checker": {"payload": [], "valid": ""},
    "campaign": {"injections_per_ff": DEFAULT_INJECTIONS_PER_FF, "ffs": [], "workers": 1},
    "cv": {"folds": 10, "train_fraction": 0.5},
    "train": {"target": "output", "train_fraction": 0.5},
    "tune": {"random_budget": 20, "grid_points_per_param": 3, "grid_span_factor": 2.0,
             "time_budget_s": 1800.0},
    "models": {"names": list(MODEL_NAMES)},
    "learning_curve": {"sizes": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], "models": []},
}

# sections whose seed falls back to the global one
SEEDED = ("campaign", "cv", "train", "tune")


def _merge(base: dict, over: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(out.get(k), dict) and isinstance(v, dict):
            out[k] = _merge(out[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


class RunConfig:
    """Resolved configuration. ``base_dir`` anchors relative paths."""

    def __init__(self, data: dict, base_dir: Path):
        self.data = data
        self.base_dir = Path(base_dir)

    # -- construction --------------------------------------------------

    @classmethod
    def load(cls, path, out: str | None = None, seed: int | None = None) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            raw = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw, path.parent, out=out, seed=seed)

    @classmethod
    def from_dict(cls, raw: dict, base_dir, out: str | None = None, seed: int | None = None) -> "RunConfig":
        data = _merge(DEFAULTS, raw)
        if seed is not None:
            data["seed"] = int(seed)
            for sec in SEEDED:
                data[sec].pop("seed", None)
        for sec in SEEDED:
            data[sec].setdefault("seed", data["seed"])
        if out is not None:
            data["paths"]["out_dir"] = str(out)
        if not data["learning_curve"]["models"]:
            data["learning_curve"]["models"] = list(data["models"]["names"])
        cfg = cls(data, Path(base_dir))
        cfg._validate()
        return cfg

    def _validate(self):
        d = self.data
        for sec in SEEDED:
            s = d[sec]["seed"]
            if not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < 2 ** 64:
                raise ConfigError(f"{sec}.seed must be an unsigned 64-bit integer, got {s!r}")
        if d["train"]["target"] not in ("output", "application"):
            raise ConfigError("train.target must be 'output' or 'application'")
        for name in [*d["models"]["names"], *d["learning_curve"]["models"]]:
            if name not in CATALOGUE:
                raise ConfigError(f"unknown model {name!r}; choose from {MODEL_NAMES}")
        if d["campaign"]["injections_per_ff"] < 1:
            raise ConfigError("campaign.injections_per_ff must be >= 1")
        if d["cv"]["folds"] < 2:
            raise ConfigError("cv.folds must be >= 2")
        for key in ("train", "cv"):
            t = d[key]["train_fraction"]
            if not 0 < t < 1:
                raise ConfigError(f"{key}.train_fraction must lie in (0, 1), got {t}")
        for t in d["learning_curve"]["sizes"]:
            if not 0 < t < 1:
                raise ConfigError(f"learning_curve.sizes entries must lie in (0, 1), got {t}")
        for name in d["models"]["names"]:
            self.search_space(name)  # raises on malformed overrides

    # -- accessors ------------------------------------------------------

    def __getitem__(self, key):
        return self.data[key]

    def path(self, key: str, must_exist: bool = True) -> Path:
        raw = self.data["paths"].get(key) or ""
        if not raw:
            raise ConfigError(f"paths.{key} is not set")
        p = Path(raw)
        if not p.is_absolute():
            p = self.base_dir / p
        if must_exist and not p.exists():
            raise ConfigError(f"paths.{key}: {p} does not exist")
        return p

    @property
    def out_dir(self) -> Path:
        p = self.path("out_dir", must_exist=False)
        p.mkdir(parents=True, exist_ok=True)
        return p

    @property
    def checker(self) -> CheckerConfig:
        c = self.data["checker"]
        if not c["payload"] or not c["valid"]:
            raise ConfigError("checker.payload and checker.valid must be set")
        return CheckerConfig(tuple(c["payload"]), c["valid"])

    def model_entry(self, name: str):
        """``(label, kind, fixed hyperparameters)`` for a catalogue model."""
        _, label, kind, fixed = CATALOGUE[name]
        return label, kind, dict(fixed)

    def model_hp(self, name: str) -> dict:
        """Hyperparameters for runs without tuning: catalogue kernel plus ``[models.<name>.hp]``."""
        _, _, fixed = self.model_entry(name)
        fixed.update(self.data["models"].get(name, {}).get("hp", {}))
        return fixed

    def search_space(self, name: str) -> SearchSpace:
        _, kind, fixed = self.model_entry(name)
        t = self.data["tune"]
        space = default_space(kind, fixed.get("kernel"), random_budget=t["random_budget"],
                              grid_points_per_param=t["grid_points_per_param"],
                              grid_span_factor=t["grid_span_factor"])
        for pname, spec in self.data["models"].get(name, {}).get("space", {}).items():
            space.params[pname] = _param_from_spec(f"models.{name}.space.{pname}", spec)
        return space

    def write_effective(self, path) -> None:
        with open(path, "wb") as fh:
            tomli_w.dump(self.data, fh)


def _param_from_spec(where: str, spec):
    if not isinstance(spec, dict) or len(spec) not in (1, 2):
        raise ConfigError(f"{where}: expected one of {{log|uniform|int|choice = [...]}}")
    try:
        if "log" in spec:
            return LogUniform(*map(float, spec["log"]))
        if "uniform" in spec:
            return Uniform(*map(float, spec["uniform"]))
        if "int" in spec:
            lo, hi = spec["int"]
            return IntRange(int(lo), int(hi), tuple(spec.get("extra", ())))
        if "choice" in spec:
            return Choice(tuple(spec["choice"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown parameter spec {spec!r}")


def demo_config_text(netlist: str, stimulus: str, checker: CheckerConfig, seed: int) -> str:
    """Config written next to a generated demo circuit."""
    data = {
        "seed": seed,
        "paths": {"netlist": netlist, "stimulus": stimulus, "out_dir": "out"},
        "checker": {"payload": list(checker.payload_signals), "valid": checker.valid_signal},
        "campaign": {"injections_per_ff": DEFAULT_INJECTIONS_PER_FF},
        "cv": {"folds": 10, "train_fraction": 0.5},
        "train": {"target": "output", "train_fraction": 0.5},
        "tune": {"random_budget": 20, "grid_points_per_param": 3, "grid_span_factor": 2.0},
    }
    return tomli_w.dumps(data)
