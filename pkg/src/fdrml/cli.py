"""Command-line entry point: ``fdrml <command> --config run.toml``.

Exit status: 0 on success, 1 on domain errors (bad netlist, failed run, ...),
2 on configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .campaign import plan_campaign, read_fdr_csv, run_campaign, write_fdr_csv
from .config import RunConfig, demo_config_text
from .demo import generate_demo
from .errors import ConfigError, FdrError, NetlistSyntaxError, StimulusSyntaxError, TooFewRows, TooFewTest
from .evaluate import CvPlan, Dataset, learning_curve, metrics, write_learning_curve_csv
from .features import extract_features_timed, feature_matrix, write_features_csv
from .models import make_model
from .netlist import read_netlist
from .sim import read_stimulus, simulate, write_activity_csv, write_trace_csv
from .tune import tune

log = logging.getLogger("fdrml")

REPORT_COLUMNS = ["model", "label", "mae", "max", "rmse", "ev", "r2", "trials",
                  "training_time_s", "fit_time_s", "predict_time_s"]


def _load_circuit(cfg: RunConfig):
    npath, spath = cfg.path("netlist"), cfg.path("stimulus")
    try:
        net = read_netlist(npath)
    except NetlistSyntaxError as exc:
        raise FdrError(f"{npath}:{exc.line}: {exc.reason}") from exc
    except FdrError as exc:
        raise FdrError(f"{npath}: {exc}") from exc
    try:
        stim = read_stimulus(spath)
    except StimulusSyntaxError as exc:
        raise FdrError(f"{spath}: {exc}") from exc
    return net, stim


def _emit_config(cfg: RunConfig) -> Path:
    out = cfg.out_dir
    cfg.write_effective(out / "effective-config.toml")
    return out


def cmd_golden(cfg: RunConfig) -> None:
    net, stim = _load_circuit(cfg)
    out = _emit_config(cfg)
    trace, stats = simulate(net, stim)
    write_trace_csv(trace, out / "golden.csv")
    write_activity_csv(stats, out / "activity.csv")
    print(f"golden: {stim.total_cycles} cycles, {len(trace.outputs)} outputs, "
          f"{len(stats.ff_names)} flip-flops -> {out}")


def cmd_campaign(cfg: RunConfig) -> None:
    net, stim = _load_circuit(cfg)
    out = _emit_config(cfg)
    c = cfg["campaign"]
    plan = plan_campaign(net, stim, c["injections_per_ff"], c["seed"], c["ffs"] or None)
    result = run_campaign(net, stim, plan, cfg.checker, workers=c["workers"])
    write_fdr_csv(result.records, out / "fdr.csv")
    summary = {"total_runs": result.total_runs, "injections_per_ff": plan.injections_per_ff,
               "seed": plan.seed, "flip_flops": len(plan.target_ffs),
               "wall_clock_s": result.wall_clock_s}
    (out / "campaign.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(f"campaign: {result.total_runs} runs over {len(plan.target_ffs)} flip-flops "
          f"in {_fmt_secs(result.wall_clock_s)}")


def _features(cfg: RunConfig, net, stim, out: Path):
    _, stats = simulate(net, stim)
    feats, secs = extract_features_timed(net, stats)
    write_features_csv(feats, out / "features.csv")
    return feats, secs


def cmd_features(cfg: RunConfig) -> None:
    net, stim = _load_circuit(cfg)
    out = _emit_config(cfg)
    feats, secs = _features(cfg, net, stim, out)
    print(f"features: {len(feats)} flip-flops in {secs:.3f} s")


def _dataset(cfg: RunConfig, net, stim, out: Path, target: str) -> Dataset:
    fdr_path = out / "fdr.csv"
    if not fdr_path.exists():
        raise FdrError(f"{fdr_path} not found; run the campaign command first")
    records = read_fdr_csv(fdr_path)
    feats, _ = _features(cfg, net, stim, out)
    names = [ff for ff in net.ff_names if ff in records]
    if not names:
        raise FdrError("no flip-flop in fdr.csv matches the netlist")
    X = feature_matrix(feats, names)
    attr = "fdr_output" if target == "output" else "fdr_application"
    y = np.array([getattr(records[n], attr) for n in names])
    return Dataset(X, y, names)


def _split(n: int, fraction: float, seed: int):
    n_train = math.ceil(n * fraction)
    if n_train >= n:
        raise TooFewTest(f"train fraction {fraction} of {n} flip-flops leaves none for testing")
    if n_train < 2:
        raise TooFewRows(f"train fraction {fraction} of {n} flip-flops leaves {n_train} for training")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xF1,)))
    perm = rng.permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def cmd_train_predict(cfg: RunConfig, target: str | None = None, train_fraction: float | None = None) -> None:
    net, stim = _load_circuit(cfg)
    out = _emit_config(cfg)
    target = target or cfg["train"]["target"]
    fraction = cfg["train"]["train_fraction"] if train_fraction is None else train_fraction
    data = _dataset(cfg, net, stim, out, target)
    tr_idx, te_idx = _split(len(data), fraction, cfg["train"]["seed"])
    train, test = data.subset(tr_idx), data.subset(te_idx)
    plan = CvPlan(cfg["cv"]["folds"], cfg["cv"]["train_fraction"], cfg["cv"]["seed"])
    names = cfg["models"]["names"]
    budget = cfg["tune"]["time_budget_s"] / max(len(names), 1)

    (out / "models").mkdir(exist_ok=True)
    (out / "tuning").mkdir(exist_ok=True)
    rows, preds, tuned = [], {}, {}
    for name in names:
        label, kind, _ = cfg.model_entry(name)
        space = cfg.search_space(name)
        res = tune(train, kind, space, plan, seed=cfg["tune"]["seed"], time_budget_s=budget)
        res.write_log(out / "tuning" / f"{name}.jsonl")
        if res.truncated:
            # wall-clock cuts make the trial list depend on machine speed
            log.warning("%s: tuning budget of %.0f s truncated the search", name, budget)
        if not math.isfinite(res.best_score):
            raise FdrError(f"{name}: every tuning trial failed (see tuning/{name}.jsonl)")
        model = make_model(kind, **res.best_hp).fit(train.X, train.y)
        pred = model.predict(test.X)
        m = metrics(test.y, pred)
        model.save(out / "models" / f"{name}.json")
        tuned[name] = res.best_hp
        preds[name] = pred
        n_trials = len(res.trials) if space.params else 0
        rows.append([name, label, m.mae, m.max_abs, m.rmse, m.ev, m.r2, n_trials,
                     res.elapsed_s, model.fit_time_s, model.predict_time_s])
        log.info("%s: r2=%.3f after %d trials", name, m.r2, n_trials)

    with open(out / "report.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow([r[0], r[1], *(repr(float(v)) for v in r[2:7]), r[7], *(repr(float(v)) for v in r[8:])])
    with open(out / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ff_name", f"fdr_{target}", *names])
        for i, ff in enumerate(test.ids):
            w.writerow([ff, repr(float(test.y[i])), *(repr(float(preds[n][i])) for n in names)])
    (out / "tuned_hp.json").write_text(json.dumps(tuned, indent=1, sort_keys=True) + "\n")
    (out / "split.json").write_text(json.dumps(
        {"target": target, "train_fraction": fraction, "train": train.ids, "test": test.ids}, indent=1) + "\n")
    _print_table(rows, target, len(train), len(test))


def _print_table(rows, target, n_train, n_test):
    print(f"FDR prediction ({target} failures), {n_train} training / {n_test} held-out flip-flops")
    head = f"{'model':<28}{'MAE':>8}{'MAX':>8}{'RMSE':>8}{'EV':>8}{'R2':>8}{'trials':>8}{'train/s':>9}{'fit/s':>8}{'pred/s':>8}"
    print(head)
    print("-" * len(head))
    for r in rows:
        print(f"{r[1]:<28}{r[2]:>8.3f}{r[3]:>8.3f}{r[4]:>8.3f}{r[5]:>8.3f}{r[6]:>8.3f}"
              f"{(r[7] or '-'):>8}{r[8]:>9.2f}{r[9]:>8.4f}{r[10]:>8.4f}")


def cmd_learning_curve(cfg: RunConfig, target: str | None = None) -> None:
    net, stim = _load_circuit(cfg)
    out = _emit_config(cfg)
    target = target or cfg["train"]["target"]
    data = _dataset(cfg, net, stim, out, target)
    tuned_path = out / "tuned_hp.json"
    tuned = json.loads(tuned_path.read_text()) if tuned_path.exists() else {}
    plan = CvPlan(cfg["cv"]["folds"], cfg["cv"]["train_fraction"], cfg["cv"]["seed"])
    (out / "learning_curve").mkdir(exist_ok=True)
    for name in cfg["learning_curve"]["models"]:
        _, kind, _ = cfg.model_entry(name)
        hp = tuned.get(name) or cfg.model_hp(name)
        rows = learning_curve(data, kind, hp, cfg["learning_curve"]["sizes"], plan)
        write_learning_curve_csv(rows, out / "learning_curve" / f"{name}.csv")
        print(f"learning curve {name}: test R2 " + " ".join(f"{r['test mean']:.2f}" for r in rows))


def cmd_gen_demo(out: Path, seed: int, width: int, stages: int, cycles: int) -> None:
    out.mkdir(parents=True, exist_ok=True)
    demo = generate_demo(seed, width, stages, cycles)
    (out / "demo.net").write_text(demo.netlist, encoding="utf-8")
    (out / "demo.stim").write_text(demo.stimulus, encoding="utf-8")
    (out / "demo.toml").write_text(demo_config_text("demo.net", "demo.stim", demo.checker, seed),
                                   encoding="utf-8")
    n_ff = demo.netlist.count("\ndff ")
    print(f"gen-demo: {n_ff} flip-flops -> {out / 'demo.net'}, {out / 'demo.stim'}, {out / 'demo.toml'}")


def _fmt_secs(s: float) -> str:
    h, rem = divmod(s, 3600)
    m, sec = divmod(rem, 60)
    return f"{int(h)}h {int(m)}m {sec:.1f}s" if h else (f"{int(m)}m {sec:.1f}s" if m else f"{sec:.2f} s")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fdrml",
        description="Predict per-flip-flop functional de-rating from fault injection and circuit features.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="run configuration (TOML)")
        sp.add_argument("--out", help="output directory (overrides paths.out_dir)")
        sp.add_argument("--seed", type=int, help="global seed (overrides every section seed)")

    helps = {
        "golden": "fault-free simulation: golden.csv and activity.csv",
        "campaign": "fault-injection campaign: fdr.csv and campaign.json",
        "features": "per-flip-flop feature matrix: features.csv",
    }
    for name, text in helps.items():
        common(sub.add_parser(name, help=text))
    tp = sub.add_parser("train-predict", help="tune, train and score every configured model on held-out flip-flops")
    common(tp)
    tp.add_argument("--target", choices=["output", "application"], help="failure class to predict")
    tp.add_argument("--train-fraction", type=float, help="share of flip-flops used for training")
    lc = sub.add_parser("learning-curve", help="cross-validated score and fit time versus training size")
    common(lc)
    lc.add_argument("--target", choices=["output", "application"], help="failure class to predict")
    gd = sub.add_parser("gen-demo", help="write a demo netlist, stimulus and config")
    common(gd, config_required=False)
    gd.add_argument("--width", type=int, default=12)
    gd.add_argument("--stages", type=int, default=8)
    gd.add_argument("--cycles", type=int, default=160)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        if args.command == "gen-demo":
            cmd_gen_demo(Path(args.out or "."), 1 if args.seed is None else args.seed,
                         args.width, args.stages, args.cycles)
        else:
            cfg = RunConfig.load(args.config, out=args.out, seed=args.seed)
            if args.command == "golden":
                cmd_golden(cfg)
            elif args.command == "campaign":
                cmd_campaign(cfg)
            elif args.command == "features":
                cmd_features(cfg)
            elif args.command == "train-predict":
                if args.train_fraction is not None and not 0 < args.train_fraction < 1:
                    raise ConfigError("--train-fraction must lie in (0, 1)")
                cmd_train_predict(cfg, args.target, args.train_fraction)
            elif args.command == "learning-curve":
                cmd_learning_curve(cfg, args.target)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FdrError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
