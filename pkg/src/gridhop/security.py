"""N-1 contingency analysis and post-fault reconfiguration search."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, replace

from .dispatch import dispatch
from .netmodel import (
    TOL,
    Network,
    SwitchState,
    fault_level_violations,
)


class Infeasible(RuntimeError):
    """No switch state satisfies radiality and fault-level limits."""


@dataclass(frozen=True)
class Contingency:
    element: str
    element_type: str  # "source" | "branch"

    def __str__(self):
        return f"{self.element_type}:{self.element}"


@dataclass(frozen=True)
class ReconfigurationPlan:
    contingency: Contingency | None
    state: SwitchState
    unserved: float
    converter_usage: Mapping[str, float]
    switch_operations: int
    toggled: tuple[str, ...]
    served: Mapping[str, float]

    @property
    def total_converter_usage(self) -> float:
        return sum(self.converter_usage.values())

    def key(self):
        return (self.unserved, self.total_converter_usage, self.switch_operations)


def enumerate_contingencies(net: Network) -> list[Contingency]:
    """One outage per grid infeed and per in-service incoming circuit."""
    out = [Contingency(s.id, "source") for s in net.infeeds()]
    out += [Contingency(b.id, "branch") for b in net.branches if b.incoming and b.in_service]
    return out


def apply_contingency(net: Network, c: Contingency | None) -> Network:
    """The network as it stands with ``c`` out of service."""
    if c is None:
        return net
    if c.element_type == "source":
        src = net.source[c.element]
        if src.contingency_capacity > 0:
            new = replace(src, capacity=src.contingency_capacity)
            sources = tuple(new if s.id == src.id else s for s in net.sources)
        else:
            sources = tuple(s for s in net.sources if s.id != src.id)
        return replace(net, sources=sources)
    if c.element_type == "branch":
        if c.element not in net.branch:
            raise KeyError(c.element)
        branches = tuple(
            replace(b, in_service=False) if b.id == c.element else b for b in net.branches
        )
        return replace(net, branches=branches)
    raise ValueError(f"unknown contingency type {c.element_type!r}")


def _better(a: tuple, b: tuple | None) -> bool:
    """Lexicographic (unserved, converter usage, switch ops) with tolerance."""
    if b is None:
        return True
    for x, y in zip(a[:2], b[:2]):
        if x < y - TOL:
            return True
        if x > y + TOL:
            return False
    return a[2] < b[2]


class _Components:
    """Union-find carrying infeed count, fault level and tightest limit."""

    __slots__ = ("parent", "infeeds", "fault", "limit")

    def __init__(self, net: Network):
        self.parent = {b: b for b in net.bus}
        self.infeeds = {b: 0 for b in net.bus}
        self.fault = {b: 0.0 for b in net.bus}
        self.limit = {b: net.bus[b].fault_level_limit or math.inf for b in net.bus}
        for s in net.sources:
            if s.kind == "grid-infeed":
                self.infeeds[s.bus] += 1
            self.fault[s.bus] += s.fault_contribution

    def copy(self) -> _Components:
        new = object.__new__(_Components)
        new.parent = dict(self.parent)
        new.infeeds = dict(self.infeeds)
        new.fault = dict(self.fault)
        new.limit = dict(self.limit)
        return new

    def find(self, x):
        while self.parent[x] != x:
            x = self.parent[x]
        return x

    def union(self, a, b):
        """Join; returns the root, or None if a and b were already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return None
        self.parent[rb] = ra
        self.infeeds[ra] += self.infeeds[rb]
        self.fault[ra] += self.fault[rb]
        self.limit[ra] = min(self.limit[ra], self.limit[rb])
        return ra

    def overfaulted(self, root) -> bool:
        return self.infeeds[root] > 0 and self.fault[root] > self.limit[root] + TOL


def _search(
    net: Network,
    contingency: Contingency | None,
    *,
    use_devices: bool = True,
    enforce_radiality: bool = True,
    enforce_fault_level: bool = True,
) -> ReconfigurationPlan:
    if not use_devices:
        net = replace(net, devices=tuple(replace(d, converter_rating=0.0) for d in net.devices))
    devices = sorted(net.devices, key=lambda d: d.id)
    in_service = {b.id: b.in_service for b in net.branches}

    comps = _Components(net)
    for br in net.branches:
        if not br.in_service:
            continue
        root = comps.union(br.from_bus, br.to_bus)
        if enforce_radiality and (root is None or comps.infeeds[root] > 1):
            raise Infeasible("in-service branches alone form a loop or parallel infeeds")
    if enforce_fault_level and any(comps.overfaulted(comps.find(b)) for b in net.bus):
        raise Infeasible("fault level exceeded even with every switch open")

    total_demand = net.total_demand()
    floor = max(0.0, total_demand - sum(s.capacity for s in net.infeeds()))
    best: list = [None, None]  # key, plan

    def choices(dev):
        normal = dev.has_switch and dev.normal_state == "closed"
        if not dev.has_switch or not use_devices:
            return [normal]
        return [normal, not normal]

    def leaf(closed):
        state = SwitchState(closed=dict(closed), in_service=in_service)
        if enforce_fault_level and fault_level_violations(net, state):
            return
        result = dispatch(net, state)
        toggled = tuple(state.toggled(net))
        key = (result.unserved, result.converter_usage, len(toggled))
        if _better(key, best[0]):
            setpoints = {d.id: 0.0 for d in net.devices if d.has_converter}
            setpoints.update(result.setpoints)
            best[0] = key
            best[1] = ReconfigurationPlan(
                contingency=contingency,
                state=replace(state, setpoints=setpoints),
                unserved=result.unserved,
                converter_usage={k: abs(v) for k, v in sorted(setpoints.items())},
                switch_operations=len(toggled),
                toggled=toggled,
                served=result.served,
            )

    def visit(i, closed, comps, ops):
        b = best[0]
        if b is not None and b[0] <= floor + TOL and b[1] <= TOL and b[2] <= ops:
            return
        if i == len(devices):
            leaf(closed)
            return
        dev = devices[i]
        for close in choices(dev):
            step = ops + (close != (dev.has_switch and dev.normal_state == "closed"))
            closed[dev.id] = close
            if not close:
                visit(i + 1, closed, comps, step)
                continue
            nxt = comps.copy()
            root = nxt.union(dev.from_bus, dev.to_bus)
            if enforce_radiality and (root is None or nxt.infeeds[root] > 1):
                continue
            if enforce_fault_level and root is not None and nxt.overfaulted(root):
                continue
            visit(i + 1, closed, nxt, step)
        closed.pop(dev.id, None)

    visit(0, {}, comps, 0)
    if best[1] is None:
        raise Infeasible("no radial switch state respects the fault-level limits")
    return best[1]


def best_reconfiguration(
    net: Network, c: Contingency | None, *, use_devices: bool = True
) -> ReconfigurationPlan:
    """Least-unserved radial post-fault state for contingency ``c``.

    Exhaustive over switch positions with pruning; converter set-points and
    curtailment are optimal for each candidate topology.  Ties go to less
    converter transfer, then fewer switching operations, then the first
    state met in device-id order.  With ``use_devices=False`` every switch
    stays in its normal position and converters stay idle.
    """
    return _search(apply_contingency(net, c), c, use_devices=use_devices)


@dataclass(frozen=True)
class N1Result:
    plans: tuple[ReconfigurationPlan, ...]

    @property
    def shortfall(self) -> float:
        return max((p.unserved for p in self.plans), default=0.0)

    @property
    def worst(self) -> ReconfigurationPlan | None:
        worst = None
        for p in self.plans:
            if worst is None or p.unserved > worst.unserved + TOL:
                worst = p
        return worst


def n1_analysis(net: Network, *, use_devices: bool = True, executor=None) -> N1Result:
    """Best plan for every contingency.

    Contingencies are independent; pass a ``concurrent.futures`` executor
    to evaluate them concurrently.  Plan order follows
    ``enumerate_contingencies``.
    """
    conts = enumerate_contingencies(net)

    def run(c):
        return best_reconfiguration(net, c, use_devices=use_devices)

    mapper = map if executor is None else executor.map
    return N1Result(tuple(mapper(run, conts)))


def capacity_shortfall(
    net: Network, demands: Mapping[str, float] | None = None, *, use_devices: bool = True
) -> float:
    """Worst unserved MVA over all N-1 contingencies; 0 means N-1 secure."""
    if demands:
        net = net.with_demands(demands)
    return n1_analysis(net, use_devices=use_devices).shortfall


@dataclass(frozen=True)
class FirmCapacity:
    scale: float
    capacity: float  # total network demand at ``scale``, MVA
    unbounded: bool = False


def firm_capacity(
    net: Network,
    scaled: Iterable[str] | None = None,
    *,
    tol: float = 1e-7,
    max_scale: float = 1e9,
) -> FirmCapacity:
    """Largest uniform scaling of the demand profile that stays N-1 secure.

    ``scaled`` restricts the scaling to some demand ids; the rest stay
    fixed.  The returned capacity is total network demand at that scale,
    accurate to ``tol`` MVA (secure side).
    """
    ids = sorted(net.demand) if scaled is None else sorted(set(scaled))
    base = sum(net.demand[i].magnitude for i in ids)
    fixed = net.total_demand() - base
    if base <= 0:
        return FirmCapacity(math.inf, math.inf, unbounded=True)

    def secure(scale):
        return capacity_shortfall(net.scaled(scale, ids)) <= TOL

    if not secure(0.0):
        return FirmCapacity(0.0, fixed)
    lo, hi = 0.0, 1.0
    while secure(hi):
        lo, hi = hi, hi * 2
        if hi > max_scale:
            return FirmCapacity(math.inf, math.inf, unbounded=True)
    while (hi - lo) * base > tol:
        mid = 0.5 * (lo + hi)
        if secure(mid):
            lo = mid
        else:
            hi = mid
    return FirmCapacity(lo, fixed + lo * base)
