"""Optimal converter dispatch and curtailment for one fixed topology.

With galvanic switch positions fixed, the lossless model is a transport
problem: infeeds push power through branches (capacity = rating), closed
switches (uncapacitated) and converters (capacity = converter rating, unit
cost) into demands.  A min-cost maximum flow gives, in one pass, the least
curtailment and, among those, the least total converter transfer.

Successive shortest paths with Bellman-Ford; networks here have tens of
nodes, so nothing cleverer is needed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .netmodel import TOL, Network, SwitchState, energized_islands, galvanic_edges, is_dc_hub

_EPS = 1e-12
_INF = float("inf")
_SOURCE, _SINK = "\0source", "\0sink"


@dataclass(frozen=True)
class Dispatch:
    unserved: float
    converter_usage: float
    setpoints: dict[str, float]
    served: dict[str, float]  # demand -> fraction


class _Graph:
    def __init__(self):
        self.adj: dict[str, list[list]] = {}

    def node(self, n):
        self.adj.setdefault(n, [])

    def arc(self, u, v, cap, cost=0.0):
        self.node(u)
        self.node(v)
        fwd = [v, cap, cost, None]
        rev = [u, 0.0, -cost, fwd]
        fwd[3] = rev
        self.adj[u].append(fwd)
        self.adj[v].append(rev)
        return fwd

    def _shortest_path(self):
        dist = {n: _INF for n in self.adj}
        prev: dict[str, list] = {}
        dist[_SOURCE] = 0.0
        queue = deque([_SOURCE])
        queued = {_SOURCE}
        while queue:
            u = queue.popleft()
            queued.discard(u)
            du = dist[u]
            for a in self.adj[u]:
                v, cap, cost = a[0], a[1], a[2]
                if cap > _EPS and du + cost < dist[v] - _EPS:
                    dist[v] = du + cost
                    prev[v] = a
                    if v not in queued:
                        queued.add(v)
                        queue.append(v)
        if dist.get(_SINK, _INF) == _INF:
            return None
        path = []
        v = _SINK
        while v != _SOURCE:
            a = prev[v]
            path.append(a)
            v = a[3][0]
        return path

    def min_cost_max_flow(self):
        while True:
            path = self._shortest_path()
            if path is None:
                return
            push = min(a[1] for a in path)
            for a in path:
                a[1] -= push
                a[3][1] += push


def dispatch(net: Network, state: SwitchState) -> Dispatch:
    """Best set-points and curtailment for the switch positions in ``state``.

    Works on meshed states too (used when radiality is relaxed).  Converters
    may only exchange power between energized islands or through a dead,
    load-free tee-point hub.
    """
    islands = energized_islands(net, state)
    active: set[str] = set()
    for isl in islands:
        if isl.energized or is_dc_hub(net, isl):
            active |= isl.buses
    energized = {b for isl in islands if isl.energized for b in isl.buses}

    g = _Graph()
    g.node(_SOURCE)
    g.node(_SINK)
    for src in net.infeeds():
        if src.capacity > 0:
            g.arc(_SOURCE, src.bus, src.capacity)
    for eid, u, v in galvanic_edges(net, state):
        if u not in energized:
            continue
        br = net.branch.get(eid)
        cap = br.rating if br is not None else _INF
        g.arc(u, v, cap)
        g.arc(v, u, cap)
    conv_arcs = {}
    for dev in net.devices:
        if not dev.has_converter or dev.converter_rating <= 0:
            continue
        if dev.has_switch and state.is_closed(dev.id):
            continue
        if dev.from_bus in active and dev.to_bus in active:
            conv_arcs[dev.id] = (
                g.arc(dev.from_bus, dev.to_bus, dev.converter_rating, 1.0),
                g.arc(dev.to_bus, dev.from_bus, dev.converter_rating, 1.0),
            )
    demand_arcs = {}
    for bus_id in sorted(energized):
        d = net.bus_demand.get(bus_id, 0.0)
        if d > 0:
            demand_arcs[bus_id] = (g.arc(bus_id, _SINK, d), d)

    g.min_cost_max_flow()

    setpoints = {}
    for did, (fwd, bwd) in conv_arcs.items():
        dev = net.device[did]
        p = (dev.converter_rating - fwd[1]) - (dev.converter_rating - bwd[1])
        setpoints[did] = 0.0 if abs(p) <= _EPS else p
    bus_fraction = {}
    for bus_id, (arc, d) in demand_arcs.items():
        bus_fraction[bus_id] = min(1.0, max(0.0, (d - arc[1]) / d))
    served = {}
    unserved = 0.0
    for dem in net.demands:
        f = bus_fraction.get(dem.bus, 1.0 if dem.bus in energized else 0.0)
        if f >= 1.0 - _EPS:
            f = 1.0
        served[dem.id] = f
        unserved += dem.magnitude * (1.0 - f)
    usage = sum(abs(p) for p in setpoints.values())
    return Dispatch(
        unserved=0.0 if unserved < TOL * 1e-3 else unserved,
        converter_usage=usage,
        setpoints=setpoints,
        served=served,
    )
