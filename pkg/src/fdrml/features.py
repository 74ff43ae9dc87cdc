"""Per-flip-flop feature vectors from circuit structure and signal activity."""
from __future__ import annotations

import csv
import re
import time
from collections import deque
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import MissingActivity
from .netlist import Netlist, comb_depth, fanin_cone, fanout_cone, topo_order
from .sim import ActivityStats

#: Proximity / unreachable marker written to the feature CSV.
UNREACHABLE = 65535

_BUS_RE = re.compile(r"^(.*)\[(\d+)\]$")


@dataclass(frozen=True)
class FeatureVector:
    ff_fanin: int
    ff_fanout: int
    conn_from_ffs: int
    conn_to_ffs: int
    from_pi: bool
    pi_proximity: int
    to_po: bool
    po_proximity: int
    in_bus: bool
    bus_position: int
    bus_length: int
    has_feedback: bool
    feedback_depth: int
    drive_strength: int
    comb_fanin: int
    comb_fanout: int
    comb_depth: int
    toggle_count: int
    time_at_0: float
    time_at_1: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


FEATURE_NAMES = [f.name for f in fields(FeatureVector)]


def bus_detect(ff_names) -> dict[str, tuple[bool, int, int]]:
    """Group ``base[index]`` names; groups of two or more are buses."""
    groups: dict[str, list[str]] = {}
    parsed = {}
    for name in ff_names:
        m = _BUS_RE.match(name)
        if m:
            parsed[name] = int(m.group(2))
            groups.setdefault(m.group(1), []).append(name)
    out = {}
    for name in ff_names:
        if name in parsed:
            members = groups[_BUS_RE.match(name).group(1)]
            if len(members) >= 2:
                out[name] = (True, parsed[name], len(members))
                continue
        out[name] = (False, 0, 1)
    return out


def ff_graph(net: Netlist) -> tuple[dict[str, set[str]], dict[str, set[str]], dict, dict]:
    """Stage-level connectivity.

    Returns ``(preds, succs, pi_adjacent, po_adjacent)``: flip-flop
    predecessor/successor sets, and for each flip-flop the primary inputs in
    its D cone and primary outputs in its Q cone.
    """
    pis = set(net.primary_inputs)
    preds, succs, pi_adj, po_adj = {}, {}, {}, {}
    for ff in net.ff_names:
        _, sources = fanin_cone(net, ff)
        preds[ff] = {s for s in sources if s not in pis}
        pi_adj[ff] = {s for s in sources if s in pis}
        _, sinks, pos = fanout_cone(net, ff)
        succs[ff] = sinks
        po_adj[ff] = pos
    return preds, succs, pi_adj, po_adj


def _multi_source_bfs(start: list[str], step: dict[str, set[str]]) -> dict[str, int]:
    dist = {ff: 0 for ff in start}
    queue = deque(start)
    while queue:
        ff = queue.popleft()
        for nxt in sorted(step[ff]):
            if nxt not in dist:
                dist[nxt] = dist[ff] + 1
                queue.append(nxt)
    return dist


def proximity(net: Netlist, direction: str, graph=None) -> dict[str, int]:
    """Stages between each flip-flop and the nearest primary input or output.

    ``direction`` is ``"to_pi"`` or ``"to_po"``. Combinational adjacency
    counts as 0; each flip-flop boundary crossed adds one. Unreachable
    flip-flops get :data:`UNREACHABLE`.
    """
    preds, succs, pi_adj, po_adj = graph or ff_graph(net)
    if direction == "to_pi":
        # walk forward from PI-adjacent flops: successor is one stage further
        start = [ff for ff in net.ff_names if pi_adj[ff]]
        dist = _multi_source_bfs(start, succs)
    elif direction == "to_po":
        start = [ff for ff in net.ff_names if po_adj[ff]]
        dist = _multi_source_bfs(start, preds)
    else:
        raise ValueError(f"direction must be 'to_pi' or 'to_po', not {direction!r}")
    return {ff: dist.get(ff, UNREACHABLE) for ff in net.ff_names}


def _shortest_cycle(ff: str, succs: dict[str, set[str]]) -> int:
    dist = {ff: 0}
    queue = deque([ff])
    while queue:
        cur = queue.popleft()
        for nxt in sorted(succs[cur]):
            if nxt == ff:
                return dist[cur] + 1
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return 0


def extract_features(net: Netlist, stats: ActivityStats) -> dict[str, FeatureVector]:
    features, _ = extract_features_timed(net, stats)
    return features


def extract_features_timed(net: Netlist, stats: ActivityStats) -> tuple[dict[str, FeatureVector], float]:
    """Feature vectors for every flip-flop, plus the extraction wall-clock."""
    start = time.perf_counter()
    act_index = {name: i for i, name in enumerate(stats.ff_names)}
    for ff in net.ff_names:
        if ff not in act_index:
            raise MissingActivity(ff)
    graph = ff_graph(net)
    preds, succs, pi_adj, po_adj = graph
    pi_prox = proximity(net, "to_pi", graph)
    po_prox = proximity(net, "to_po", graph)
    buses = bus_detect(net.ff_names)
    order = topo_order(net)
    t1 = stats.time_at_1

    out = {}
    for ff in net.ff_names:
        cells_in, sources = fanin_cone(net, ff)
        cells_out, _, _ = fanout_cone(net, ff)
        in_bus, pos, length = buses[ff]
        fb = _shortest_cycle(ff, succs)
        i = act_index[ff]
        frac1 = float(t1[i])
        out[ff] = FeatureVector(
            ff_fanin=len(sources),
            ff_fanout=len(succs[ff]) + len(po_adj[ff]),
            conn_from_ffs=len(preds[ff]),
            conn_to_ffs=len(succs[ff]),
            from_pi=pi_prox[ff] != UNREACHABLE,
            pi_proximity=pi_prox[ff],
            to_po=po_prox[ff] != UNREACHABLE,
            po_proximity=po_prox[ff],
            in_bus=in_bus,
            bus_position=pos,
            bus_length=length,
            has_feedback=fb > 0,
            feedback_depth=fb,
            drive_strength=net.flip_flop(ff).drive_strength,
            comb_fanin=len(cells_in),
            comb_fanout=len(cells_out),
            comb_depth=comb_depth(net, ff, order),
            toggle_count=int(stats.toggle_count[i]),
            time_at_0=1.0 - frac1,
            time_at_1=frac1,
        )
    return out, time.perf_counter() - start


def feature_matrix(features: dict[str, FeatureVector], names=None) -> np.ndarray:
    names = list(features) if names is None else names
    if not names:
        return np.zeros((0, len(FEATURE_NAMES)))
    return np.vstack([features[n].as_array() for n in names])


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def write_features_csv(features: dict[str, FeatureVector], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ff_name", *FEATURE_NAMES])
        for name, fv in features.items():
            w.writerow([name, *(_fmt(v) for v in astuple(fv))])


def read_features_csv(path) -> dict[str, FeatureVector]:
    types = {f.name: f.type for f in fields(FeatureVector)}
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            vals = {}
            for k in FEATURE_NAMES:
                t = types[k]
                if t == "bool":
                    vals[k] = row[k] == "1"
                elif t == "float":
                    vals[k] = float(row[k])
                else:
                    vals[k] = int(row[k])
            out[row["ff_name"]] = FeatureVector(**vals)
    return out
