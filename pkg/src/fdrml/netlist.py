"""Gate-level netlist: parser, validated circuit graph and traversal helpers.

File format (one module per file, ``#`` starts a comment)::

    module <name>
    input  <net> [<net> ...]
    output <net> [<net> ...]
    wire   <net> [<net> ...]
    cell <inst> <KIND> <drive:int> <out_net> <in_net> [...]
    dff  <inst> <drive:int> <q_net> <d_net>
    endmodule

MUX2 inputs are ``sel a b``: the output is ``a`` when ``sel`` is 0.
"""
from __future__ import annotations

import enum
import graphlib
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .errors import (
    ArityMismatch,
    CombinationalLoop,
    MultipleDrivers,
    NetlistSyntaxError,
    UndrivenNet,
    UnknownFlipFlop,
)


class CellKind(enum.Enum):
    BUF = "BUF"
    NOT = "NOT"
    AND2 = "AND2"
    AND3 = "AND3"
    OR2 = "OR2"
    OR3 = "OR3"
    NAND2 = "NAND2"
    NOR2 = "NOR2"
    XOR2 = "XOR2"
    XNOR2 = "XNOR2"
    MUX2 = "MUX2"
    DFF = "DFF"

    @property
    def arity(self) -> int:
        return _ARITY[self]


_ARITY = {
    CellKind.BUF: 1, CellKind.NOT: 1, CellKind.AND2: 2, CellKind.AND3: 3,
    CellKind.OR2: 2, CellKind.OR3: 3, CellKind.NAND2: 2, CellKind.NOR2: 2,
    CellKind.XOR2: 2, CellKind.XNOR2: 2, CellKind.MUX2: 3, CellKind.DFF: 1,
}


@dataclass(frozen=True)
class Cell:
    instance_name: str
    kind: CellKind
    drive_strength: int
    output_net: str
    input_nets: tuple[str, ...]

    @property
    def is_dff(self) -> bool:
        return self.kind is CellKind.DFF


@dataclass(frozen=True)
class Netlist:
    name: str
    primary_inputs: tuple[str, ...]
    primary_outputs: tuple[str, ...]
    nets: frozenset[str]
    cells: tuple[Cell, ...]

    # derived lookups, excluded from equality
    cell_by_name: dict = field(init=False, compare=False, repr=False)
    driver: dict = field(init=False, compare=False, repr=False)
    readers: dict = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        by_name = {c.instance_name: c for c in self.cells}
        driver = {}
        readers = defaultdict(list)
        for c in self.cells:
            driver[c.output_net] = c
            for n in c.input_nets:
                readers[n].append(c)
        object.__setattr__(self, "cell_by_name", by_name)
        object.__setattr__(self, "driver", driver)
        object.__setattr__(self, "readers", dict(readers))

    @property
    def flip_flops(self) -> tuple[Cell, ...]:
        """DFF cells in declaration order."""
        return tuple(c for c in self.cells if c.is_dff)

    @property
    def ff_names(self) -> list[str]:
        return [c.instance_name for c in self.cells if c.is_dff]

    @property
    def comb_cells(self) -> tuple[Cell, ...]:
        return tuple(c for c in self.cells if not c.is_dff)

    def flip_flop(self, name: str) -> Cell:
        c = self.cell_by_name.get(name)
        if c is None or not c.is_dff:
            raise UnknownFlipFlop(name)
        return c


# ---------------------------------------------------------------------------
# parsing

def _check_ident(tok: str, lineno: int, what: str) -> str:
    if not tok or any(ch in tok for ch in "#="):
        raise NetlistSyntaxError(lineno, f"bad {what} {tok!r}")
    return tok


def _parse_drive(tok: str, lineno: int) -> int:
    try:
        drive = int(tok)
    except ValueError:
        raise NetlistSyntaxError(lineno, f"drive strength {tok!r} is not an integer") from None
    if drive < 1:
        raise NetlistSyntaxError(lineno, f"drive strength must be >= 1, got {drive}")
    return drive


def parse_netlist(text: str) -> Netlist:
    """Parse netlist text and validate every structural invariant."""
    name = None
    ended = False
    inputs: list[str] = []
    outputs: list[str] = []
    declared: dict[str, int] = {}  # net -> line of declaration
    cells: list[Cell] = []
    cell_lines: dict[str, int] = {}

    def declare(net, lineno, kind):
        _check_ident(net, lineno, "net name")
        if net in declared:
            # a primary input may also be listed as a primary output
            if not (kind == "output" and net in inputs and net not in outputs):
                raise NetlistSyntaxError(lineno, f"net {net!r} declared twice")
            return
        declared[net] = lineno

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        kw = toks[0]
        if ended:
            raise NetlistSyntaxError(lineno, "content after endmodule")
        if name is None and kw != "module":
            raise NetlistSyntaxError(lineno, "expected 'module <name>'")
        if kw == "module":
            if name is not None:
                raise NetlistSyntaxError(lineno, "only one module per file")
            if len(toks) != 2:
                raise NetlistSyntaxError(lineno, "expected 'module <name>'")
            name = _check_ident(toks[1], lineno, "module name")
        elif kw in ("input", "output", "wire"):
            if len(toks) < 2:
                raise NetlistSyntaxError(lineno, f"'{kw}' needs at least one net")
            for net in toks[1:]:
                declare(net, lineno, kw)
                if kw == "input":
                    inputs.append(net)
                elif kw == "output":
                    outputs.append(net)
        elif kw in ("cell", "dff"):
            if kw == "cell":
                if len(toks) < 5:
                    raise NetlistSyntaxError(lineno, "expected 'cell <inst> <KIND> <drive> <out> <in>...'")
                inst, kind_tok, drive_tok, out, ins = toks[1], toks[2], toks[3], toks[4], toks[5:]
                try:
                    kind = CellKind[kind_tok]
                except KeyError:
                    raise NetlistSyntaxError(lineno, f"unknown cell kind {kind_tok!r}") from None
                if kind is CellKind.DFF:
                    raise NetlistSyntaxError(lineno, "flip-flops are declared with 'dff'")
            else:
                if len(toks) != 5:
                    raise NetlistSyntaxError(lineno, "expected 'dff <inst> <drive> <q> <d>'")
                inst, drive_tok, out, ins = toks[1], toks[2], toks[3], toks[4:]
                kind = CellKind.DFF
            _check_ident(inst, lineno, "instance name")
            if inst in cell_lines:
                raise NetlistSyntaxError(lineno, f"instance {inst!r} defined twice")
            drive = _parse_drive(drive_tok, lineno)
            if len(ins) != kind.arity:
                raise ArityMismatch(inst, kind.arity, len(ins))
            for net in (out, *ins):
                if net not in declared:
                    raise NetlistSyntaxError(lineno, f"net {net!r} is not declared")
            cells.append(Cell(inst, kind, drive, out, tuple(ins)))
            cell_lines[inst] = lineno
        elif kw == "endmodule":
            if len(toks) != 1:
                raise NetlistSyntaxError(lineno, "unexpected tokens after endmodule")
            ended = True
        else:
            raise NetlistSyntaxError(lineno, f"unknown keyword {kw!r}")

    if name is None:
        raise NetlistSyntaxError(1, "empty netlist")
    if not ended:
        raise NetlistSyntaxError(len(text.splitlines()) or 1, "missing endmodule")

    _check_drivers(inputs, declared, cells)
    net = Netlist(
        name=name,
        primary_inputs=tuple(inputs),
        primary_outputs=tuple(outputs),
        nets=frozenset(declared),
        cells=tuple(cells),
    )
    topo_order(net)  # raises CombinationalLoop
    return net


def _check_drivers(inputs, declared, cells):
    driven = set(inputs)
    for c in cells:
        if c.output_net in driven:
            raise MultipleDrivers(c.output_net)
        driven.add(c.output_net)
    for net in declared:
        if net not in driven:
            raise UndrivenNet(net)


def unparse(net: Netlist) -> str:
    """Emit netlist text; ``parse_netlist(unparse(n)) == n``."""
    lines = [f"module {net.name}"]
    if net.primary_inputs:
        lines.append("input " + " ".join(net.primary_inputs))
    if net.primary_outputs:
        lines.append("output " + " ".join(net.primary_outputs))
    ports = set(net.primary_inputs) | set(net.primary_outputs)
    wires = sorted(net.nets - ports)
    if wires:
        lines.append("wire " + " ".join(wires))
    for c in net.cells:
        if c.is_dff:
            lines.append(f"dff {c.instance_name} {c.drive_strength} {c.output_net} {c.input_nets[0]}")
        else:
            lines.append(
                f"cell {c.instance_name} {c.kind.name} {c.drive_strength} {c.output_net} "
                + " ".join(c.input_nets)
            )
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def read_netlist(path) -> Netlist:
    with open(path, encoding="utf-8") as fh:
        return parse_netlist(fh.read())


# ---------------------------------------------------------------------------
# traversal

def topo_order(net: Netlist) -> list[str]:
    """Combinational cell names ordered so every cell follows its drivers."""
    ts = graphlib.TopologicalSorter()
    for c in net.comb_cells:
        preds = []
        for n in c.input_nets:
            d = net.driver.get(n)
            if d is not None and not d.is_dff:
                preds.append(d.instance_name)
        ts.add(c.instance_name, *preds)
    try:
        return list(ts.static_order())
    except graphlib.CycleError as exc:
        raise CombinationalLoop(exc.args[1]) from None


def _is_source(net: Netlist, n: str) -> bool:
    d = net.driver.get(n)
    return d is None or d.is_dff


def _source_name(net: Netlist, n: str) -> str:
    d = net.driver.get(n)
    return n if d is None else d.instance_name


def fanin_cone(net: Netlist, ff: str) -> tuple[set[str], set[str]]:
    """Combinational cells feeding ``ff``'s D input, and the frontier they stop at.

    Sources are named by DFF instance name or primary-input net name.
    """
    d_net = net.flip_flop(ff).input_nets[0]
    cells: set[str] = set()
    sources: set[str] = set()
    stack = [d_net]
    seen = set()
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        if _is_source(net, n):
            sources.add(_source_name(net, n))
            continue
        c = net.driver[n]
        cells.add(c.instance_name)
        stack.extend(c.input_nets)
    return cells, sources


def fanout_cone(net: Netlist, ff: str) -> tuple[set[str], set[str], set[str]]:
    """Forward cone of ``ff``'s Q output through combinational logic.

    Returns ``(cells, sink_ffs, sink_outputs)``.
    """
    q_net = net.flip_flop(ff).output_net
    outputs = set(net.primary_outputs)
    cells: set[str] = set()
    sink_ffs: set[str] = set()
    sink_pos: set[str] = set()
    stack = [q_net]
    seen = set()
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        if n in outputs:
            sink_pos.add(n)
        for c in net.readers.get(n, ()):
            if c.is_dff:
                sink_ffs.add(c.instance_name)
            elif c.instance_name not in cells:
                cells.add(c.instance_name)
                stack.append(c.output_net)
    return cells, sink_ffs, sink_pos


def comb_depth(net: Netlist, ff: str, order: Iterable[str] | None = None) -> int:
    """Longest chain of combinational cells ending at ``ff``'s D input."""
    cells, _ = fanin_cone(net, ff)
    if not cells:
        return 0
    level: dict[str, int] = {}
    for name in order if order is not None else topo_order(net):
        if name not in cells:
            continue
        c = net.cell_by_name[name]
        best = 0
        for n in c.input_nets:
            d = net.driver.get(n)
            if d is not None and not d.is_dff:
                best = max(best, level[d.instance_name])
        level[name] = best + 1
    return level[net.driver[net.flip_flop(ff).input_nets[0]].instance_name]
