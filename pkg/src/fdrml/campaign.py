"""Statistical single-bit-flip fault-injection campaign and FDR aggregation."""
from __future__ import annotations

import csv
import enum
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CampaignError,
    DimensionMismatch,
    EmptyActiveWindow,
    RunFailed,
    SimulationError,
)
from .netlist import Netlist
from .sim import Simulator, Stimulus, Trace, simulate, unpack_runs

log = logging.getLogger(__name__)

DEFAULT_INJECTIONS_PER_FF = 170
BATCH_WIDTH = 512


@dataclass
class CampaignPlan:
    injections_per_ff: int
    seed: int
    target_ffs: list[str]
    injection_cycles: dict[str, list[int]]

    @property
    def total_runs(self) -> int:
        return sum(len(c) for c in self.injection_cycles.values())

    def schedule(self) -> list[tuple[str, int]]:
        return [(ff, c) for ff in self.target_ffs for c in self.injection_cycles[ff]]

    @classmethod
    def exhaustive(cls, net: Netlist, stim: Stimulus, ffs=None) -> "CampaignPlan":
        """One injection per flip-flop per active-window cycle."""
        t0, t1 = stim.active_window
        targets = list(ffs) if ffs is not None else net.ff_names
        cycles = list(range(t0, t1 + 1))
        return cls(len(cycles), 0, targets, {ff: list(cycles) for ff in targets})


@dataclass(frozen=True)
class CheckerConfig:
    payload_signals: tuple[str, ...]
    valid_signal: str

    def validate(self, outputs) -> None:
        outs = set(outputs)
        missing = [s for s in (*self.payload_signals, self.valid_signal) if s not in outs]
        if missing:
            raise CampaignError(f"checker signals are not primary outputs: {missing}")


class Failure(enum.Flag):
    NONE = 0
    OUTPUT = enum.auto()
    APPLICATION = enum.auto()


@dataclass
class FdrRecord:
    ff_name: str
    runs: int = 0
    output_failures: int = 0
    application_failures: int = 0

    @property
    def fdr_output(self) -> float:
        return self.output_failures / self.runs if self.runs else 0.0

    @property
    def fdr_application(self) -> float:
        return self.application_failures / self.runs if self.runs else 0.0


@dataclass
class CampaignResult:
    records: dict[str, FdrRecord]
    total_runs: int
    wall_clock_s: float = field(compare=False, default=0.0)


def plan_campaign(net: Netlist, stim: Stimulus, injections_per_ff: int = DEFAULT_INJECTIONS_PER_FF,
                  seed: int = 0, ffs=None) -> CampaignPlan:
    """Draw injection cycles uniformly (with replacement) from the active window.

    Flip-flop ``i`` (declaration index) gets its own stream keyed by
    ``(seed, i)``, so a flip-flop's cycles do not depend on which other
    flip-flops are targeted.
    """
    if injections_per_ff < 1:
        raise CampaignError("injections_per_ff must be >= 1")
    t0, t1 = stim.active_window
    if t1 < t0:
        raise EmptyActiveWindow(f"active window [{t0}, {t1}] is empty")
    all_ffs = net.ff_names
    targets = list(ffs) if ffs is not None else list(all_ffs)
    pos = {name: i for i, name in enumerate(all_ffs)}
    cycles = {}
    for ff in targets:
        net.flip_flop(ff)
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(pos[ff],))
        rng = np.random.default_rng(ss)
        cycles[ff] = rng.integers(t0, t1 + 1, size=injections_per_ff).tolist()
    return CampaignPlan(injections_per_ff, seed, targets, cycles)


def _accepted_words(bits: np.ndarray, payload_cols, valid_col) -> np.ndarray:
    return bits[bits[:, valid_col] == 1][:, payload_cols]


def classify_run(golden: Trace, faulty: Trace, checker: CheckerConfig, injection_cycle: int) -> Failure:
    """Compare a faulty output trace against the golden one.

    Output failure: any output bit differs at or after the injection cycle.
    Application failure: the sequence of payload words sampled on cycles with
    the valid strobe high differs (covers both corrupted and missing words).
    """
    g, f = np.asarray(golden.bits), np.asarray(faulty.bits)
    if g.shape != f.shape or golden.outputs != faulty.outputs:
        raise DimensionMismatch(f"golden {g.shape} vs faulty {f.shape}")
    result = Failure.NONE
    if np.any(g[injection_cycle:] != f[injection_cycle:]):
        result |= Failure.OUTPUT
        col = {n: i for i, n in enumerate(golden.outputs)}
        pcols = [col[s] for s in checker.payload_signals]
        vcol = col[checker.valid_signal]
        gw = _accepted_words(g, pcols, vcol)
        fw = _accepted_words(f, pcols, vcol)
        if gw.shape != fw.shape or np.any(gw != fw):
            result |= Failure.APPLICATION
    return result


def _run_batch(sim: Simulator, stim: Stimulus, golden: Trace, checker: CheckerConfig,
               batch: list[tuple[str, int]]) -> list[Failure]:
    try:
        outs, _ = sim.run(stim, batch)
    except SimulationError as exc:
        ff, cycle = batch[0]
        raise RunFailed(ff, cycle, exc) from exc
    runs = unpack_runs(outs, len(batch))
    result = []
    diff = np.any(runs != golden.bits.astype(bool)[None], axis=2)  # [run, cycle]
    for r, (ff, cycle) in enumerate(batch):
        if not diff[r, cycle:].any():
            result.append(Failure.NONE)
        else:
            result.append(classify_run(golden, Trace(golden.outputs, runs[r].astype(np.uint8)), checker, cycle))
    return result


def _worker(args):
    net, stim, golden, checker, batch = args
    return _run_batch(Simulator(net), stim, golden, checker, batch)


def run_campaign(net: Netlist, stim: Stimulus, plan: CampaignPlan, checker: CheckerConfig,
                 workers: int = 1, batch_width: int = BATCH_WIDTH) -> CampaignResult:
    """Execute every scheduled injection and aggregate per-flip-flop counts."""
    checker.validate(net.primary_outputs)
    for ff in plan.target_ffs:
        net.flip_flop(ff)
    start = time.perf_counter()
    sim = Simulator(net)
    golden, _ = simulate(net, stim, simulator=sim)
    schedule = plan.schedule()
    batches = [schedule[i:i + batch_width] for i in range(0, len(schedule), batch_width)]

    if workers > 1 and len(batches) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, [(net, stim, golden, checker, b) for b in batches]))
    else:
        results = [_run_batch(sim, stim, golden, checker, b) for b in batches]

    records = {ff: FdrRecord(ff) for ff in plan.target_ffs}
    for batch, classes in zip(batches, results):
        for (ff, _), cls in zip(batch, classes):
            rec = records[ff]
            rec.runs += 1
            if cls & Failure.OUTPUT:
                rec.output_failures += 1
            if cls & Failure.APPLICATION:
                rec.application_failures += 1
    elapsed = time.perf_counter() - start
    log.info("campaign: %d runs in %.2f s", len(schedule), elapsed)
    return CampaignResult(records, len(schedule), elapsed)


FDR_COLUMNS = ["ff_name", "runs", "output_failures", "application_failures", "fdr_output", "fdr_application"]


def write_fdr_csv(records: dict[str, FdrRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FDR_COLUMNS)
        for r in records.values():
            w.writerow([r.ff_name, r.runs, r.output_failures, r.application_failures,
                        repr(r.fdr_output), repr(r.fdr_application)])


def read_fdr_csv(path) -> dict[str, FdrRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return {
        r["ff_name"]: FdrRecord(r["ff_name"], int(r["runs"]), int(r["output_failures"]),
                                int(r["application_failures"]))
        for r in rows
    }
