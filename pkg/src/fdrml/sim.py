"""Two-valued cycle-based logic simulation.

Every net value is held as a Python int used as a bit vector: bit ``r`` is
the value of that net in run ``r``. A fault-free run is the width-1 case, and
a fault campaign packs many faulty runs into one pass over the cycles.

Per cycle: apply stimulus, settle combinational logic in topological order,
sample primary outputs, clock every DFF, then apply any scheduled bit-flips.
"""
from __future__ import annotations

import csv
import operator
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    FaultCycleOutOfRange,
    StimulusReferencesUnknownNet,
    StimulusSyntaxError,
    UnknownFlipFlop,
    ZeroCycles,
)
from .netlist import CellKind, Netlist, topo_order


@dataclass
class Stimulus:
    total_cycles: int
    assignments: dict[int, dict[str, int]] = field(default_factory=dict)
    active_window: tuple[int, int] = (0, 0)

    def __post_init__(self):
        t0, t1 = self.active_window
        if self.total_cycles < 1:
            raise ZeroCycles("stimulus must span at least one cycle")
        if not 0 <= t0 <= t1 < self.total_cycles:
            raise StimulusSyntaxError(0, f"active window {self.active_window} outside [0, {self.total_cycles})")
        for c in self.assignments:
            if not 0 <= c < self.total_cycles:
                raise StimulusSyntaxError(0, f"assignment at cycle {c} outside [0, {self.total_cycles})")


def parse_stimulus(text: str) -> Stimulus:
    total = None
    window = None
    assigns: dict[int, dict[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            if toks[0] == "cycles" and len(toks) == 2:
                total = int(toks[1])
            elif toks[0] == "active" and len(toks) == 3:
                window = (int(toks[1]), int(toks[2]))
            elif toks[0].startswith("@"):
                cycle = int(toks[0][1:])
                slot = assigns.setdefault(cycle, {})
                for tok in toks[1:]:
                    net, _, val = tok.rpartition("=")
                    if not net or val not in ("0", "1"):
                        raise StimulusSyntaxError(lineno, f"bad assignment {tok!r}")
                    slot[net] = int(val)
            else:
                raise StimulusSyntaxError(lineno, f"unrecognised line {line!r}")
        except ValueError:
            raise StimulusSyntaxError(lineno, f"bad integer in {line!r}") from None
    if total is None:
        raise StimulusSyntaxError(1, "missing 'cycles <N>'")
    if window is None:
        window = (0, total - 1)
    try:
        return Stimulus(total, assigns, window)
    except StimulusSyntaxError as exc:
        raise StimulusSyntaxError(1, str(exc)) from None


def read_stimulus(path) -> Stimulus:
    with open(path, encoding="utf-8") as fh:
        return parse_stimulus(fh.read())


def format_stimulus(stim: Stimulus) -> str:
    lines = [f"cycles {stim.total_cycles}", f"active {stim.active_window[0]} {stim.active_window[1]}"]
    for c in sorted(stim.assignments):
        vals = stim.assignments[c]
        if vals:
            lines.append(f"@{c} " + " ".join(f"{n}={v}" for n, v in vals.items()))
    return "\n".join(lines) + "\n"


@dataclass
class ActivityStats:
    ff_names: list[str]
    total_cycles: int
    toggle_count: np.ndarray  # int, per FF
    ones: np.ndarray  # cycles with Q=1, per FF

    @property
    def time_at_1(self) -> np.ndarray:
        return self.ones / self.total_cycles

    @property
    def time_at_0(self) -> np.ndarray:
        return 1.0 - self.time_at_1

    def for_ff(self, name: str) -> tuple[int, float, float]:
        i = self.ff_names.index(name)
        return int(self.toggle_count[i]), float(self.time_at_0[i]), float(self.time_at_1[i])


def activity_fractions(stats: ActivityStats, total_cycles: int) -> dict[str, tuple[int, float, float]]:
    """Per flip-flop ``(toggles, fraction at 0, fraction at 1)``."""
    if total_cycles <= 0:
        raise ZeroCycles("cannot form activity fractions over zero cycles")
    out = {}
    for i, name in enumerate(stats.ff_names):
        f1 = float(stats.ones[i]) / total_cycles
        out[name] = (int(stats.toggle_count[i]), 1.0 - f1, f1)
    return out


# ---------------------------------------------------------------------------
# compiled engine

_EXPR = {
    CellKind.BUF: "{0}",
    CellKind.NOT: "{0} ^ M",
    CellKind.AND2: "{0} & {1}",
    CellKind.AND3: "{0} & {1} & {2}",
    CellKind.OR2: "{0} | {1}",
    CellKind.OR3: "{0} | {1} | {2}",
    CellKind.NAND2: "({0} & {1}) ^ M",
    CellKind.NOR2: "({0} | {1}) ^ M",
    CellKind.XOR2: "{0} ^ {1}",
    CellKind.XNOR2: "{0} ^ {1} ^ M",
    CellKind.MUX2: "({1} & ({0} ^ M)) | ({2} & {0})",
}


class Simulator:
    """A netlist compiled for repeated simulation.

    Immutable after construction, so one instance may serve many runs.
    """

    def __init__(self, net: Netlist):
        self.net = net
        self.index = {n: i for i, n in enumerate(sorted(net.nets))}
        idx = self.index
        self.ff_names = net.ff_names
        self.ff_pos = {name: i for i, name in enumerate(self.ff_names)}
        ffs = net.flip_flops
        self.q_idx = [idx[c.output_net] for c in ffs]
        self.d_idx = [idx[c.input_nets[0]] for c in ffs]
        self.po_idx = [idx[n] for n in net.primary_outputs]
        self.pi_set = set(net.primary_inputs)

        body = []
        for name in topo_order(net):
            c = net.cell_by_name[name]
            args = [f"v[{idx[n]}]" for n in c.input_nets]
            body.append(f"    v[{idx[c.output_net]}] = " + _EXPR[c.kind].format(*args))
        src = "def _settle(v, M):\n" + ("\n".join(body) if body else "    pass") + "\n"
        ns: dict = {}
        exec(compile(src, f"<netlist {net.name}>", "exec"), ns)
        self._settle = ns["_settle"]

        self._get_po = _getter(self.po_idx)
        self._get_d = _getter(self.d_idx)
        self._get_q = _getter(self.q_idx)

    def _input_schedule(self, stim: Stimulus) -> dict[int, list[tuple[int, int]]]:
        sched = {}
        for c, vals in stim.assignments.items():
            row = []
            for n, val in vals.items():
                if n not in self.pi_set:
                    raise StimulusReferencesUnknownNet(n)
                row.append((self.index[n], val))
            sched[c] = row
        return sched

    def run(self, stim: Stimulus, faults: Sequence[tuple[str, int]] = (), record_q: bool = False):
        """Simulate ``len(faults)`` runs at once (one fault-free run if empty).

        Returns ``(outputs, q_states)``: per cycle, a tuple of bit-vector ints
        for the primary outputs and (if requested) the DFF states.
        """
        width = max(1, len(faults))
        M = (1 << width) - 1
        T = stim.total_cycles
        flips: dict[int, dict[int, int]] = {}
        for r, (ff, cycle) in enumerate(faults):
            if ff not in self.ff_pos:
                raise UnknownFlipFlop(ff)
            if not 0 <= cycle < T:
                raise FaultCycleOutOfRange(cycle, T)
            slot = flips.setdefault(cycle, {})
            qi = self.q_idx[self.ff_pos[ff]]
            slot[qi] = slot.get(qi, 0) | (1 << r)
        sched = self._input_schedule(stim)

        v = [0] * len(self.index)
        q_idx = self.q_idx
        settle, get_po, get_d, get_q = self._settle, self._get_po, self._get_d, self._get_q
        outs = []
        qs = [] if record_q else None
        for c in range(T):
            for i, val in sched.get(c, ()):
                v[i] = M if val else 0
            settle(v, M)
            outs.append(get_po(v))
            if record_q:
                qs.append(get_q(v))
            for i, val in zip(q_idx, get_d(v)):
                v[i] = val
            if c in flips:
                for i, mask in flips[c].items():
                    v[i] ^= mask
        return outs, qs


def _getter(indices):
    # itemgetter returns a bare value (not a tuple) for a single index
    if not indices:
        return lambda v: ()
    if len(indices) == 1:
        i = indices[0]
        return lambda v: (v[i],)
    return operator.itemgetter(*indices)


def unpack_runs(rows: list[tuple[int, ...]], width: int) -> np.ndarray:
    """Bit-vector rows (per cycle, per signal) -> bool array ``[run, cycle, signal]``."""
    T = len(rows)
    P = len(rows[0]) if rows else 0
    nbytes = (width + 7) // 8
    buf = bytearray()
    for row in rows:
        for val in row:
            buf += val.to_bytes(nbytes, "little")
    arr = np.frombuffer(bytes(buf), dtype=np.uint8).reshape(T, P, nbytes)
    bits = np.unpackbits(arr, axis=2, bitorder="little")[:, :, :width]
    return np.ascontiguousarray(bits.transpose(2, 0, 1)).astype(bool)


@dataclass
class Trace:
    """Primary-output trace: ``bits[cycle, output]`` sampled before each clock edge."""

    outputs: list[str]
    bits: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, Trace)
            and self.outputs == other.outputs
            and np.array_equal(self.bits, other.bits)
        )


def simulate(net: Netlist, stim: Stimulus, fault: tuple[str, int] | None = None,
             simulator: Simulator | None = None) -> tuple[Trace, ActivityStats]:
    """Run one simulation, optionally flipping ``fault = (ff, cycle)``."""
    sim = simulator or Simulator(net)
    outs, qs = sim.run(stim, [fault] if fault is not None else (), record_q=True)
    T = stim.total_cycles
    bits = np.array(outs, dtype=np.uint8).reshape(T, len(sim.po_idx))
    q = np.array(qs, dtype=np.int64).reshape(T, len(sim.q_idx))
    toggles = np.count_nonzero(np.diff(q, axis=0), axis=0) if T > 1 else np.zeros(q.shape[1], dtype=np.int64)
    stats = ActivityStats(list(sim.ff_names), T, toggles.astype(np.int64), q.sum(axis=0).astype(np.int64))
    return Trace(list(net.primary_outputs), bits), stats


def write_trace_csv(trace: Trace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace.outputs)
        w.writerows(trace.bits.tolist())


def read_trace_csv(path) -> Trace:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    bits = np.array([[int(x) for x in r] for r in body], dtype=np.uint8).reshape(len(body), len(header))
    return Trace(header, bits)


def write_activity_csv(stats: ActivityStats, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ff_name", "toggle_count", "time_at_0", "time_at_1"])
        for name, (tog, f0, f1) in activity_fractions(stats, stats.total_cycles).items():
            w.writerow([name, tog, repr(f0), repr(f1)])
