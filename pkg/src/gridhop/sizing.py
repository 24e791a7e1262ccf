"""Converter sizing, HOP/SOP rating comparison and use-case classification."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .netmodel import TOL, Device, Network, fault_level_violations
from .security import (
    Contingency,
    ReconfigurationPlan,
    _search,
    apply_contingency,
    capacity_shortfall,
)


class IncompatiblePlacement(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


class Unclassifiable(RuntimeError):
    pass


# device kinds a new device of the given kind may replace
_REPLACES = {
    "hop1": ("nop", "hop1", "sop"),
    "sop": ("nop", "hop1", "sop"),
    "hop2": ("ncp", "hop2"),
}


@dataclass(frozen=True)
class SizingResult:
    placement: str
    device_kind: str
    required_rating: float
    residual_shortfall: float
    legs: tuple[str, ...] = ()  # device ids rated, for multi-terminal placements

    @property
    def succeeded(self) -> bool:
        return self.residual_shortfall <= TOL


def install(net: Network, placement: str, kind: str, rating: float) -> Network:
    """Network with a ``kind`` converter of ``rating`` at ``placement``.

    ``placement`` is a device id, or a tee-point bus id for a multi-terminal
    SOP built from one SOP leg per device touching that bus.
    """
    if kind not in _REPLACES:
        raise IncompatiblePlacement(f"cannot size a {kind!r}")
    legs = _legs(net, placement, kind)
    for dev in legs:
        net = net.with_device(
            Device(dev.id, dev.from_bus, dev.to_bus, kind, converter_rating=rating)
        )
    return net


def _legs(net: Network, placement: str, kind: str) -> list[Device]:
    if placement in net.device:
        dev = net.device[placement]
        if dev.kind not in _REPLACES[kind]:
            raise IncompatiblePlacement(f"a {kind} cannot replace {placement} ({dev.kind})")
        return [dev]
    bus = net.bus.get(placement)
    if bus is None:
        raise IncompatiblePlacement(f"unknown placement {placement!r}")
    if bus.kind != "tee-point" or kind != "sop":
        raise IncompatiblePlacement("only a sop can be placed at a tee point")
    legs = [d for d in net.devices if placement in (d.from_bus, d.to_bus)]
    if not legs:
        raise IncompatiblePlacement(f"no devices at tee point {placement}")
    for d in legs:
        if d.kind not in _REPLACES["sop"]:
            raise IncompatiblePlacement(f"tee leg {d.id} is a {d.kind}, not an open point")
    return sorted(legs, key=lambda d: d.id)


def size_device(
    net: Network, placement: str, kind: str, *, tol: float = 1e-9
) -> SizingResult:
    """Smallest converter rating at ``placement`` that removes the N-1 shortfall.

    Bisection on the shortfall, which never increases with rating.  When no
    rating is enough the result carries the residual shortfall and the
    rating beyond which it stops improving.
    """
    legs = tuple(d.id for d in _legs(net, placement, kind))

    def shortfall(rating):
        return capacity_shortfall(install(net, placement, kind, rating))

    if shortfall(0.0) <= TOL:
        return SizingResult(placement, kind, 0.0, 0.0, legs)
    hi = max(net.total_demand(), TOL)
    floor = shortfall(hi)
    target = floor + TOL if floor > TOL else TOL
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if shortfall(mid) <= target:
            hi = mid
        else:
            lo = mid
    return SizingResult(placement, kind, hi, floor if floor > TOL else 0.0, legs)


def rating_ratio(h: float, transferred_demand: float) -> float:
    """HOP converter rating over the equivalent SOP rating, h / (h + D)."""
    if h < 0 or transferred_demand < 0:
        raise DegenerateInput("headroom and transferred demand must be >= 0")
    if h + transferred_demand <= 0:
        raise DegenerateInput("headroom and transferred demand are both zero")
    return h / (h + transferred_demand)


@dataclass(frozen=True)
class Option:
    label: str
    placement: str
    kind: str


@dataclass(frozen=True)
class Comparison:
    """Candidate placements sized against a SOP baseline.

    ``transferred`` names the demands the baseline SOP must carry on top of
    the headroom; it enables the h/(h+D) cross-check.
    """

    baseline: str
    options: tuple[Option, ...]
    transferred: tuple[str, ...] = ()


@dataclass(frozen=True)
class OptionRow:
    label: str
    placement: str
    kind: str
    required_rating: float
    residual_shortfall: float
    ratio_to_baseline: float | None
    formula_ratio: float | None = None
    agrees: bool | None = None
    legs: tuple[str, ...] = field(default=())


def compare_options(net: Network, scenario: Comparison, *, tol: float = 1e-9) -> list[OptionRow]:
    sized = {o.label: size_device(net, o.placement, o.kind, tol=tol) for o in scenario.options}
    if scenario.baseline not in sized:
        raise KeyError(f"baseline {scenario.baseline!r} is not among the options")
    base = sized[scenario.baseline].required_rating
    carried = sum(net.demand[d].magnitude for d in scenario.transferred)
    rows = []
    for o in scenario.options:
        r = sized[o.label]
        ratio = r.required_rating / base if base > TOL else None
        formula = agrees = None
        if scenario.transferred and ratio is not None:
            if o.label == scenario.baseline:
                formula = 1.0
            else:
                formula = rating_ratio(r.required_rating, carried)
            agrees = abs(formula - ratio) <= 1e-6
        rows.append(
            OptionRow(
                o.label,
                o.placement,
                o.kind,
                r.required_rating,
                r.residual_shortfall,
                ratio,
                formula,
                agrees,
                r.legs,
            )
        )
    return rows


@dataclass(frozen=True)
class UseCase:
    tag: str  # radiality-lumped-load | fault-level-constrained | multi-terminal-tee
    evidence: tuple[str, ...]


def _improves(a: ReconfigurationPlan, b: ReconfigurationPlan) -> bool:
    if a.unserved < b.unserved - TOL:
        return True
    return abs(a.unserved - b.unserved) <= TOL and (
        a.total_converter_usage < b.total_converter_usage - TOL
    )


# galvanic role of each converter-bearing kind once its converter is removed
_SWITCH_ONLY = {"sop": "nop", "hop1": "nop", "hop2": "ncp"}


def _switch_only(net: Network) -> Network:
    devices = tuple(
        Device(d.id, d.from_bus, d.to_bus, _SWITCH_ONLY.get(d.kind, d.kind))
        for d in net.devices
    )
    return replace(net, devices=devices)


def classify_use_case(
    net: Network, c: Contingency, plan: ReconfigurationPlan
) -> UseCase:
    """Which constraint keeps load from being transferred by switching alone.

    Counterfactual: converters are stripped to their switches, then each
    constraint class is relaxed in turn and the search rerun.  Fault level
    is tried first, then radiality; a radiality case is a tee case when the
    devices that would have to close touch a tee point.
    """
    if plan.unserved <= TOL and plan.total_converter_usage <= TOL:
        raise Unclassifiable("plan needs neither load transfer nor converter support")
    post = _switch_only(apply_contingency(net, c))
    base = _search(post, c)

    relaxed = _search(post, c, enforce_fault_level=False)
    if _improves(relaxed, base):
        buses = tuple(v[0] for v in fault_level_violations(post, relaxed.state))
        return UseCase("fault-level-constrained", buses)

    relaxed = _search(post, c, enforce_radiality=False)
    if _improves(relaxed, base):
        evidence = tuple(
            sorted(d for d, on in relaxed.state.closed.items() if on and not base.state.is_closed(d))
        )
        if not evidence:
            evidence = tuple(
                sorted(
                    d
                    for d in relaxed.state.closed
                    if relaxed.state.is_closed(d) != base.state.is_closed(d)
                )
            )
        tee = {b.id for b in post.buses if b.kind == "tee-point"}
        if any({post.device[d].from_bus, post.device[d].to_bus} & tee for d in evidence):
            return UseCase("multi-terminal-tee", evidence)
        return UseCase("radiality-lumped-load", evidence)

    raise Unclassifiable("relaxing fault level or radiality does not change the outcome")
