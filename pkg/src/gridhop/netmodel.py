"""Network graph types and topology predicates.

A network is a set of buses joined by branches (always galvanic when in
service) and switchable devices.  A device is a galvanic switch, a power
converter, or both in parallel:

========  ==============  ================  ====================
kind      galvanic switch  normal state      converter
========  ==============  ================  ====================
``nop``   yes              open              no
``ncp``   yes              closed            no
``hop1``  yes              open              yes
``hop2``  yes              closed            yes
``sop``   no               (always open)     yes
========  ==============  ================  ====================

Converters never join islands and never carry fault current.  A converter
is only usable while its parallel switch is open.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from functools import cached_property
from types import MappingProxyType

TOL = 1e-9

BUS_KINDS = ("substation-busbar", "feeder-node", "tee-point")
SOURCE_KINDS = ("grid-infeed", "dg")
DEVICE_KINDS = ("nop", "ncp", "sop", "hop1", "hop2")
SWITCHED_KINDS = ("nop", "ncp", "hop1", "hop2")
CONVERTER_KINDS = ("sop", "hop1", "hop2")
OPEN, CLOSED = "open", "closed"

# kind -> required normal state of the galvanic switch
_NORMAL_STATE = {"nop": OPEN, "ncp": CLOSED, "hop1": OPEN, "hop2": CLOSED, "sop": OPEN}


class NonRadialState(ValueError):
    """Raised when an operation needs a radial switch state and did not get one."""


class InvalidState(ValueError):
    """Raised when a switch state is inconsistent with the network."""


@dataclass(frozen=True)
class Bus:
    id: str
    kind: str = "feeder-node"
    fault_level_limit: float | None = None


@dataclass(frozen=True)
class Source:
    """An infeed or generator.

    ``capacity`` is the intact rating.  ``contingency_capacity`` is what a
    grid infeed can still deliver with one incoming circuit out of service;
    zero means the whole infeed is lost.  DG is never a radiality root and
    is given no supply credit in the balance.
    """

    id: str
    bus: str
    capacity: float
    fault_contribution: float = 0.0
    kind: str = "grid-infeed"
    contingency_capacity: float = 0.0


@dataclass(frozen=True)
class Branch:
    id: str
    from_bus: str
    to_bus: str
    rating: float
    in_service: bool = True
    incoming: bool = False  # incoming HV circuit, enumerated as a contingency


@dataclass(frozen=True)
class Demand:
    id: str
    bus: str
    magnitude: float


@dataclass(frozen=True)
class Device:
    """A switchable device between two buses.

    Multi-terminal devices are stars of two-terminal legs around a
    ``tee-point`` bus.
    """

    id: str
    from_bus: str
    to_bus: str
    kind: str
    normal_state: str | None = None
    converter_rating: float = 0.0

    def __post_init__(self):
        if self.normal_state is None:
            object.__setattr__(self, "normal_state", _NORMAL_STATE.get(self.kind, OPEN))

    @property
    def has_switch(self) -> bool:
        return self.kind in SWITCHED_KINDS

    @property
    def has_converter(self) -> bool:
        return self.kind in CONVERTER_KINDS


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...] = ()
    sources: tuple[Source, ...] = ()
    branches: tuple[Branch, ...] = ()
    demands: tuple[Demand, ...] = ()
    devices: tuple[Device, ...] = ()
    name: str = ""

    def __post_init__(self):
        for attr in ("buses", "sources", "branches", "demands", "devices"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))

    @cached_property
    def bus(self) -> Mapping[str, Bus]:
        return MappingProxyType({b.id: b for b in self.buses})

    @cached_property
    def source(self) -> Mapping[str, Source]:
        return MappingProxyType({s.id: s for s in self.sources})

    @cached_property
    def branch(self) -> Mapping[str, Branch]:
        return MappingProxyType({b.id: b for b in self.branches})

    @cached_property
    def demand(self) -> Mapping[str, Demand]:
        return MappingProxyType({d.id: d for d in self.demands})

    @cached_property
    def device(self) -> Mapping[str, Device]:
        return MappingProxyType({d.id: d for d in self.devices})

    @cached_property
    def bus_demand(self) -> Mapping[str, float]:
        total: dict[str, float] = {b.id: 0.0 for b in self.buses}
        for d in self.demands:
            total[d.bus] = total.get(d.bus, 0.0) + d.magnitude
        return MappingProxyType(total)

    def infeeds(self) -> list[Source]:
        return [s for s in self.sources if s.kind == "grid-infeed"]

    def total_demand(self) -> float:
        return sum(d.magnitude for d in self.demands)

    # -- derived networks -------------------------------------------------

    def with_demands(self, magnitudes: Mapping[str, float]) -> Network:
        unknown = set(magnitudes) - set(self.demand)
        if unknown:
            raise KeyError(f"unknown demand ids: {sorted(unknown)}")
        demands = tuple(
            replace(d, magnitude=float(magnitudes[d.id])) if d.id in magnitudes else d
            for d in self.demands
        )
        return replace(self, demands=demands)

    def scaled(self, factor: float, only: Iterable[str] | None = None) -> Network:
        ids = set(self.demand) if only is None else set(only)
        return self.with_demands({i: self.demand[i].magnitude * factor for i in ids})

    def with_device(self, device: Device) -> Network:
        """Replace the device with the same id, or add it."""
        if device.id in self.device:
            devices = tuple(device if d.id == device.id else d for d in self.devices)
        else:
            devices = self.devices + (device,)
        return replace(self, devices=devices)

    def without_devices(self, ids: Iterable[str]) -> Network:
        drop = set(ids)
        return replace(self, devices=tuple(d for d in self.devices if d.id not in drop))


@dataclass(frozen=True, eq=True)
class SwitchState:
    """Galvanic switch positions, converter set-points and branch service.

    ``closed`` maps every device id to True when its galvanic switch is
    closed (always False for a SOP).  ``setpoints`` are signed MVA,
    positive from ``from_bus`` to ``to_bus``.
    """

    closed: Mapping[str, bool]
    setpoints: Mapping[str, float] = field(default_factory=dict)
    in_service: Mapping[str, bool] = field(default_factory=dict)

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def normal(cls, net: Network) -> SwitchState:
        return cls(
            closed={d.id: d.has_switch and d.normal_state == CLOSED for d in net.devices},
            setpoints={d.id: 0.0 for d in net.devices if d.has_converter},
            in_service={b.id: b.in_service for b in net.branches},
        )

    def is_closed(self, device_id: str) -> bool:
        return bool(self.closed.get(device_id, False))

    def branch_in_service(self, br: Branch) -> bool:
        return bool(self.in_service.get(br.id, br.in_service))

    def setpoint(self, device_id: str) -> float:
        return float(self.setpoints.get(device_id, 0.0))

    def with_switches(self, **changes: bool) -> SwitchState:
        closed = dict(self.closed)
        closed.update(changes)
        return replace(self, closed=closed)

    def with_setpoints(self, **changes: float) -> SwitchState:
        sp = dict(self.setpoints)
        sp.update(changes)
        return replace(self, setpoints=sp)

    def toggled(self, net: Network) -> list[str]:
        """Devices whose switch differs from its normal state, sorted."""
        return sorted(
            d.id
            for d in net.devices
            if d.has_switch and self.is_closed(d.id) != (d.normal_state == CLOSED)
        )


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    element: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


def validate_network(net: Network) -> ValidationReport:
    """Collect every structural problem in ``net``; never raises."""
    out: list[Violation] = []

    def bad(code, element, msg):
        out.append(Violation(code, element, msg))

    seen: dict[str, str] = {}
    for group, items in (
        ("bus", net.buses),
        ("source", net.sources),
        ("branch", net.branches),
        ("demand", net.demands),
        ("device", net.devices),
    ):
        for item in items:
            key = f"{group}:{item.id}" if group == "bus" else item.id
            if key in seen:
                bad("duplicate-id", item.id, f"id {item.id!r} used more than once")
            seen[key] = group

    buses = set(net.bus)

    def ref(element, bus_id, role):
        if bus_id not in buses:
            bad("dangling-reference", element, f"{role} refers to unknown bus {bus_id!r}")
            return False
        return True

    for b in net.buses:
        if b.kind not in BUS_KINDS:
            bad("bad-kind", b.id, f"unknown bus kind {b.kind!r}")
        if b.fault_level_limit is not None and not b.fault_level_limit > 0:
            bad("nonpositive-limit", b.id, "fault_level_limit must be > 0")
    for s in net.sources:
        ref(s.id, s.bus, "bus")
        if s.kind not in SOURCE_KINDS:
            bad("bad-kind", s.id, f"unknown source kind {s.kind!r}")
        if s.capacity < 0 or s.fault_contribution < 0 or s.contingency_capacity < 0:
            bad("negative-value", s.id, "capacity and fault contribution must be >= 0")
        if s.contingency_capacity > s.capacity + TOL:
            bad("bad-capacity", s.id, "contingency_capacity exceeds capacity")
    for br in net.branches:
        ref(br.id, br.from_bus, "from_bus")
        ref(br.id, br.to_bus, "to_bus")
        if br.from_bus == br.to_bus:
            bad("self-loop", br.id, "from_bus equals to_bus")
        if not br.rating > 0:
            bad("nonpositive-rating", br.id, "rating must be > 0")
    for d in net.demands:
        ref(d.id, d.bus, "bus")
        if d.magnitude < 0:
            bad("negative-value", d.id, "demand magnitude must be >= 0")
    for dev in net.devices:
        ref(dev.id, dev.from_bus, "from_bus")
        ref(dev.id, dev.to_bus, "to_bus")
        if dev.from_bus == dev.to_bus:
            bad("self-loop", dev.id, "from_bus equals to_bus")
        if dev.kind not in DEVICE_KINDS:
            bad("bad-kind", dev.id, f"unknown device kind {dev.kind!r}")
            continue
        if dev.normal_state != _NORMAL_STATE[dev.kind]:
            bad(
                "kind-state-mismatch",
                dev.id,
                f"{dev.kind} must be normally {_NORMAL_STATE[dev.kind]}, got {dev.normal_state}",
            )
        if dev.kind in ("nop", "ncp") and dev.converter_rating != 0:
            bad("kind-rating-mismatch", dev.id, f"{dev.kind} cannot carry a converter rating")
        elif dev.kind == "sop" and not dev.converter_rating > 0:
            bad("kind-rating-mismatch", dev.id, "sop needs converter_rating > 0")
        elif dev.converter_rating < 0:
            bad("negative-value", dev.id, "converter_rating must be >= 0")

    if out:
        # topology checks are meaningless on a broken graph
        return ValidationReport(tuple(out))

    state = SwitchState.normal(net)
    if not is_radial(net, state):
        bad("non-radial", net.name or "network", "normal switch state is not radial")
    for isl in energized_islands(net, state):
        if not isl.energized:
            for bus_id in sorted(isl.buses):
                if net.bus_demand.get(bus_id, 0.0) > 0:
                    bad("de-energized-demand", bus_id, "demand bus not energized in normal state")
    return ValidationReport(tuple(out))


# -- topology -----------------------------------------------------------------


@dataclass(frozen=True)
class Island:
    buses: frozenset[str]
    infeeds: tuple[str, ...]
    edges: tuple[str, ...]

    @property
    def energized(self) -> bool:
        return bool(self.infeeds)


def galvanic_edges(net: Network, state: SwitchState) -> list[tuple[str, str, str]]:
    """(element id, bus, bus) for every in-service branch and closed switch."""
    edges = [(b.id, b.from_bus, b.to_bus) for b in net.branches if state.branch_in_service(b)]
    edges += [
        (d.id, d.from_bus, d.to_bus)
        for d in net.devices
        if d.has_switch and state.is_closed(d.id)
    ]
    return edges


class _DisjointSet:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def energized_islands(net: Network, state: SwitchState) -> list[Island]:
    """Partition buses into galvanic islands, sorted by smallest bus id."""
    ds = _DisjointSet(sorted(net.bus))
    edges = galvanic_edges(net, state)
    for _, u, v in edges:
        ds.union(u, v)
    groups: dict[str, set[str]] = {}
    for b in net.bus:
        groups.setdefault(ds.find(b), set()).add(b)
    infeeds: dict[str, list[str]] = {}
    for s in net.infeeds():
        infeeds.setdefault(ds.find(s.bus), []).append(s.id)
    island_edges: dict[str, list[str]] = {}
    for eid, u, _ in edges:
        island_edges.setdefault(ds.find(u), []).append(eid)
    return [
        Island(
            buses=frozenset(groups[r]),
            infeeds=tuple(sorted(infeeds.get(r, ()))),
            edges=tuple(sorted(island_edges.get(r, ()))),
        )
        for r in sorted(groups, key=lambda r: min(groups[r]))
    ]


def island_of(islands: Iterable[Island], bus_id: str) -> Island:
    for isl in islands:
        if bus_id in isl.buses:
            return isl
    raise KeyError(bus_id)


def is_radial(net: Network, state: SwitchState) -> bool:
    """Every island is acyclic and holds at most one grid infeed."""
    ds = _DisjointSet(sorted(net.bus))
    for _, u, v in galvanic_edges(net, state):
        if not ds.union(u, v):
            return False
    roots: set[str] = set()
    for s in net.infeeds():
        r = ds.find(s.bus)
        if r in roots:
            return False
        roots.add(r)
    return True


def island_fault_level(net: Network, state: SwitchState, island: Island) -> float:
    """Summed fault contribution of every source inside ``island``."""
    return sum(s.fault_contribution for s in net.sources if s.bus in island.buses)


def fault_level_violations(net: Network, state: SwitchState) -> list[tuple[str, float, float]]:
    """(bus, island fault level, limit) for every bus whose limit is exceeded."""
    out = []
    for isl in energized_islands(net, state):
        level = island_fault_level(net, state, isl)
        for bus_id in sorted(isl.buses):
            limit = net.bus[bus_id].fault_level_limit
            if limit is not None and level > limit + TOL:
                out.append((bus_id, level, limit))
    return out


def is_dc_hub(net: Network, island: Island) -> bool:
    """A dead single-bus tee point with no load, usable as a converter hub."""
    if island.energized or len(island.buses) != 1:
        return False
    (bus_id,) = island.buses
    return net.bus[bus_id].kind == "tee-point" and net.bus_demand.get(bus_id, 0.0) == 0.0
