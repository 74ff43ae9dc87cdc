"""Generator for a strobed packet-pipeline demo circuit and its stimulus.

Structure (``W`` = payload width, ``S`` = input stages)::

    din[W], din_valid, mode
      -> stg0..stg{S-1}[W]   input shift stages with seeded XOR/AND mixing
      -> vld0..vld{S-1}       valid strobe pipeline
      -> payload[W]           captured when the strobe reaches the end
      -> dout[W], dout_valid  payload outputs gated by the output strobe
    csum[W]   checksum ring (rotate + XOR) -> crc parity status output
    cnt[4]    packet counter -> pkt_msb status output
    err       sticky error flag -> error status output
    dbg[W]    debug shadow registers with no path to any output
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .campaign import CheckerConfig


@dataclass
class DemoCircuit:
    netlist: str
    stimulus: str
    checker: CheckerConfig


class _Builder:
    def __init__(self, name, rng):
        self.name = name
        self.rng = rng
        self.inputs, self.outputs, self.wires = [], [], []
        self.lines = []
        self._n = 0

    def drive(self):
        return int(self.rng.choice([1, 1, 2, 4]))

    def wire(self, hint):
        self._n += 1
        w = f"n{self._n}_{hint}"
        self.wires.append(w)
        return w

    def cell(self, kind, out, *ins):
        self._n += 1
        self.lines.append(f"cell u{self._n} {kind} {self.drive()} {out} {' '.join(ins)}")
        return out

    def gate(self, kind, hint, *ins):
        return self.cell(kind, self.wire(hint), *ins)

    def dff(self, inst, q, d):
        self.lines.append(f"dff {inst} {self.drive()} {q} {d}")

    def text(self):
        out = [f"module {self.name}", "input " + " ".join(self.inputs), "output " + " ".join(self.outputs)]
        for i in range(0, len(self.wires), 16):
            out.append("wire " + " ".join(self.wires[i:i + 16]))
        out += self.lines
        out.append("endmodule")
        return "\n".join(out) + "\n"


def generate_demo(seed: int = 1, width: int = 12, stages: int = 8, cycles: int = 160) -> DemoCircuit:
    """Deterministic demo netlist, stimulus and checker for ``seed``."""
    if width < 2 or stages < 2 or cycles < 40:
        raise ValueError("demo needs width >= 2, stages >= 2, cycles >= 40")
    rng = np.random.default_rng(seed)
    W, S = width, stages
    b = _Builder("packet_pipe", rng)
    din = [f"din[{i}]" for i in range(W)]
    b.inputs = [*din, "din_valid", "mode"]
    dout = [f"dout[{i}]" for i in range(W)]
    b.outputs = [*dout, "dout_valid", "crc", "pkt_msb", "error"]

    def q(inst):
        net = f"q_{inst}"
        b.wires.append(net)
        return net

    # input stages
    prev = din
    for s in range(S):
        cur = [q(f"stg{s}[{i}]") for i in range(W)]
        for i in range(W):
            if s == 0:
                d = prev[i]
            else:
                k = int(rng.integers(1, W))
                mixed = b.gate("XOR2", "mix", prev[i], prev[(i + k) % W])
                d = b.gate("MUX2", "sel", "mode", prev[i], mixed)
                if rng.random() < 0.25:
                    # partial masking: some bits only pass in one mode
                    d = b.gate(str(rng.choice(["AND2", "OR2"])), "mask", d, prev[(i + 1) % W])
            b.dff(f"stg{s}[{i}]", cur[i], d)
        prev = cur
    last = prev

    vld_prev = "din_valid"
    for s in range(S):
        v = q(f"vld{s}")
        b.dff(f"vld{s}", v, vld_prev)
        vld_prev = v
    vld_last = vld_prev

    # payload capture and output strobe
    oval = q("oval")
    b.dff("oval", oval, vld_last)
    for i in range(W):
        p = q(f"payload[{i}]")
        d = b.gate("MUX2", "cap", vld_last, p, last[i])
        b.dff(f"payload[{i}]", p, d)
        b.cell("AND2", dout[i], p, oval)
    b.cell("BUF", "dout_valid", oval)

    # checksum ring
    cs = [q(f"csum[{i}]") for i in range(W)]
    for i in range(W):
        upd = b.gate("XOR2", "cs", cs[(i + 1) % W], last[i])
        b.dff(f"csum[{i}]", cs[i], b.gate("MUX2", "csh", vld_last, cs[i], upd))
    level = cs
    while len(level) > 2:
        nxt = [b.gate("XOR2", "par", level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    b.cell("XOR2", "crc", *level) if len(level) == 2 else b.cell("BUF", "crc", level[0])

    # packet counter (ripple increment on the output strobe)
    cnt = [q(f"cnt[{j}]") for j in range(4)]
    carry = oval
    for j in range(4):
        b.dff(f"cnt[{j}]", cnt[j], b.gate("XOR2", "inc", cnt[j], carry))
        carry = b.gate("AND2", "cy", cnt[j], carry)
    b.cell("BUF", "pkt_msb", cnt[3])

    # sticky error flag
    err = q("err")
    trig = b.gate("AND3", "trig", vld_last, "mode", last[0])
    b.dff("err", err, b.gate("OR2", "sticky", err, trig))
    b.cell("BUF", "error", err)

    # debug shadow registers: never observed
    mid = S // 2
    for i in range(W):
        dq = q(f"dbg[{i}]")
        src = f"q_stg{mid}[{i}]"
        b.dff(f"dbg[{i}]", dq, b.gate("XOR2", "dbg", dq, src))

    return DemoCircuit(b.text(), _demo_stimulus(rng, W, cycles), CheckerConfig(tuple(dout), "dout_valid"))


def _demo_stimulus(rng, width, cycles) -> str:
    lines = [f"cycles {cycles}", f"active 10 {cycles - 41}"]
    valid_left, gap_left, mode = 0, int(rng.integers(2, 6)), 0
    for c in range(cycles):
        if valid_left == 0 and gap_left == 0:
            valid_left = int(rng.integers(4, 9))
        if valid_left:
            valid_left -= 1
            v = 1
            if valid_left == 0:
                gap_left = int(rng.integers(2, 7))
        else:
            gap_left -= 1
            v = 0
        if rng.random() < 0.05:
            mode ^= 1
        bits = rng.integers(0, 2, size=width)
        vals = " ".join(f"din[{i}]={bits[i]}" for i in range(width))
        lines.append(f"@{c} {vals} din_valid={v} mode={mode}")
    return "\n".join(lines) + "\n"


def fixture_text(name: str) -> str:
    """Contents of a bundled fixture file (``mini.net``, ``mini.stim``)."""
    return resources.files("fdrml").joinpath("data").joinpath(name).read_text(encoding="utf-8")


MINI_CHECKER = CheckerConfig(("dout",), "dout_valid")
