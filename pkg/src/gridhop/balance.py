"""Lossless nodal power balance on radial islands.

Each branch carries the sum of the net load downstream of it, measured from
the island's grid infeed.  Converter set-points are fixed injections: a
positive set-point is a load at ``from_bus`` and a generator at ``to_bus``.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass

from .netmodel import (
    TOL,
    InvalidState,
    Network,
    NonRadialState,
    SwitchState,
    energized_islands,
    fault_level_violations,
    galvanic_edges,
    is_dc_hub,
    is_radial,
)


@dataclass(frozen=True)
class FlowSolution:
    flows: Mapping[str, float]  # branch / closed switch -> MVA, from_bus -> to_bus
    converter_flows: Mapping[str, float]  # device -> MVA, from_bus -> to_bus
    supply: Mapping[str, float]  # source -> MVA
    served: Mapping[str, float]  # demand -> fraction in [0, 1]

    def served_mva(self, net: Network) -> float:
        return sum(net.demand[d].magnitude * f for d, f in self.served.items())


@dataclass(frozen=True)
class ThermalViolation:
    element: str
    element_type: str  # branch | source | converter
    flow: float
    rating: float

    @property
    def overload(self) -> float:
        return abs(self.flow) - self.rating


@dataclass(frozen=True)
class HeadroomResult:
    source: str
    at_bus: str
    headroom: float
    binding_constraint: str  # source-capacity | branch-rating | fault-level
    binding_element: str


def _converter_injections(net, state, islands, bus_island):
    """Per-bus injections from converters; validates converter usage."""
    load: dict[str, float] = {}
    conv: dict[str, float] = {}
    hub_net: dict[int, float] = {}
    for dev in net.devices:
        if not dev.has_converter:
            continue
        p = state.setpoint(dev.id)
        conv[dev.id] = p
        if p == 0.0:
            continue
        if dev.has_switch and state.is_closed(dev.id):
            raise InvalidState(f"{dev.id}: converter set-point with its switch closed")
        for bus_id, sign in ((dev.from_bus, 1.0), (dev.to_bus, -1.0)):
            k = bus_island[bus_id]
            isl = islands[k]
            if isl.energized:
                load[bus_id] = load.get(bus_id, 0.0) + sign * p
            elif is_dc_hub(net, isl):
                hub_net[k] = hub_net.get(k, 0.0) + sign * p
            else:
                raise InvalidState(f"{dev.id}: converter touches de-energized bus {bus_id}")
    for k, v in hub_net.items():
        if abs(v) > TOL:
            raise InvalidState(f"converter hub {sorted(islands[k].buses)[0]} is unbalanced by {v}")
    return load, conv


def solve_flows(
    net: Network, state: SwitchState, served: Mapping[str, float] | None = None
) -> FlowSolution:
    """Branch flows as sums of downstream net load.

    ``served`` optionally curtails demands (fraction per demand id); demands
    in islands without a grid infeed are always unserved.
    """
    if not is_radial(net, state):
        raise NonRadialState("flows are undefined on a meshed switch state")
    islands = energized_islands(net, state)
    bus_island = {b: k for k, isl in enumerate(islands) for b in isl.buses}

    fractions: dict[str, float] = {}
    load: dict[str, float] = {b: 0.0 for b in net.bus}
    for d in net.demands:
        if islands[bus_island[d.bus]].energized:
            f = 1.0 if served is None else min(1.0, max(0.0, float(served.get(d.id, 1.0))))
        else:
            f = 0.0
        fractions[d.id] = f
        load[d.bus] += d.magnitude * f

    conv_load, conv = _converter_injections(net, state, islands, bus_island)
    for b, v in conv_load.items():
        load[b] += v

    adj: dict[str, list[tuple[str, str, str, str]]] = {b: [] for b in net.bus}
    for eid, u, v in galvanic_edges(net, state):
        adj[u].append((v, eid, u, v))
        adj[v].append((u, eid, u, v))

    flows: dict[str, float] = {eid: 0.0 for eid, _, _ in galvanic_edges(net, state)}
    supply: dict[str, float] = {s.id: 0.0 for s in net.sources}
    for isl in islands:
        if not isl.energized:
            continue
        (root_src,) = isl.infeeds
        root = net.source[root_src].bus
        order, parent = [root], {root: None}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w, eid, a, b in adj[u]:
                if w not in parent:
                    parent[w] = (u, eid, a, b)
                    order.append(w)
                    queue.append(w)
        subtotal = {b: load[b] for b in order}
        for w in reversed(order[1:]):
            u, eid, a, b = parent[w]
            subtotal[u] += subtotal[w]
            flows[eid] = subtotal[w] if b == w else -subtotal[w]
        supply[root_src] = subtotal[root]

    return FlowSolution(flows=flows, converter_flows=conv, supply=supply, served=fractions)


def thermal_violations(net: Network, sol: FlowSolution) -> list[ThermalViolation]:
    """Every branch, source or converter loaded beyond its rating."""
    out = []
    for eid, f in sol.flows.items():
        br = net.branch.get(eid)
        if br is not None and abs(f) > br.rating + TOL:
            out.append(ThermalViolation(eid, "branch", f, br.rating))
    for sid, p in sol.supply.items():
        src = net.source[sid]
        if abs(p) > src.capacity + TOL:
            out.append(ThermalViolation(sid, "source", p, src.capacity))
    for did, p in sol.converter_flows.items():
        dev = net.device[did]
        if abs(p) > dev.converter_rating + TOL:
            out.append(ThermalViolation(did, "converter", p, dev.converter_rating))
    return out


def headroom(
    net: Network,
    state: SwitchState,
    source_id: str,
    at_bus: str | None = None,
    served: Mapping[str, float] | None = None,
) -> HeadroomResult:
    """Largest extra load at ``at_bus`` the source can pick up.

    The delivery path runs from the source bus to ``at_bus`` inside the
    source's island; defaults to the source bus itself.
    """
    src = net.source[source_id]
    if src.kind != "grid-infeed":
        raise ValueError(f"{source_id} is not a grid infeed")
    at_bus = src.bus if at_bus is None else at_bus
    sol = solve_flows(net, state, served)
    islands = energized_islands(net, state)
    isl = next(i for i in islands if src.bus in i.buses)
    if at_bus not in isl.buses:
        raise ValueError(f"{at_bus} is not supplied from {source_id}")

    faulted = [v for v in fault_level_violations(net, state) if v[0] in isl.buses]
    if faulted:
        return HeadroomResult(source_id, at_bus, 0.0, "fault-level", faulted[0][0])

    candidates = [(src.capacity - sol.supply[source_id], "source-capacity", source_id)]

    parent: dict[str, tuple[str, str, str, str] | None] = {src.bus: None}
    queue = deque([src.bus])
    edges = galvanic_edges(net, state)
    while queue:
        u = queue.popleft()
        for eid, a, b in edges:
            if u not in (a, b):
                continue
            w = b if u == a else a
            if w not in parent:
                parent[w] = (u, eid, a, b)
                queue.append(w)
    path = []
    w = at_bus
    while parent[w] is not None:
        u, eid, a, b = parent[w]
        path.append((eid, 1.0 if b == w else -1.0))
        w = u
    for eid, sign in reversed(path):
        br = net.branch.get(eid)
        if br is None:
            continue  # switches carry no thermal rating
        candidates.append((br.rating - sign * sol.flows[eid], "branch-rating", eid))

    slack, kind, element = min(candidates, key=lambda c: c[0])
    return HeadroomResult(source_id, at_bus, max(0.0, slack), kind, element)
