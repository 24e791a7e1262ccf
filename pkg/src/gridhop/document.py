"""Network interchange documents (strict JSON, ``schema_version: "1"``)."""

from __future__ import annotations

import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .econ import EconParams
from .netmodel import (
    Branch,
    Bus,
    Demand,
    Device,
    Network,
    Source,
    SwitchState,
    validate_network,
)
from .sizing import Comparison, Option

SCHEMA_VERSION = "1"


class DocumentError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ParseError(DocumentError):
    pass


class SchemaError(DocumentError):
    pass


class DanglingReferenceError(DocumentError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class _Element(_Strict):
    id: str
    provenance: Optional[str] = None
    note: Optional[str] = None


class BusModel(_Element):
    kind: Literal["substation-busbar", "feeder-node", "tee-point"] = "feeder-node"
    fault_level_limit: Optional[float] = None


class SourceModel(_Element):
    bus: str
    capacity: float = Field(ge=0)
    contingency_capacity: float = Field(default=0.0, ge=0)
    fault_contribution: float = Field(default=0.0, ge=0)
    kind: Literal["grid-infeed", "dg"] = "grid-infeed"


class BranchModel(_Element):
    from_bus: str
    to_bus: str
    rating: float
    in_service: bool = True
    incoming: bool = False


class DemandModel(_Element):
    bus: str
    magnitude: float


class DeviceModel(_Element):
    from_bus: str
    to_bus: str
    kind: Literal["nop", "ncp", "sop", "hop1", "hop2"]
    normal_state: Optional[Literal["open", "closed"]] = None
    converter_rating: float = 0.0


class NetworkModel(_Strict):
    buses: list[BusModel]
    sources: list[SourceModel]
    branches: list[BranchModel] = []
    demands: list[DemandModel] = []
    devices: list[DeviceModel] = []


class StateModel(_Strict):
    """Deviations from the normal switch state."""

    closed: list[str] = []
    opened: list[str] = []
    setpoints: dict[str, float] = {}
    out_of_service: list[str] = []


class OptionModel(_Strict):
    label: str
    placement: str
    kind: Literal["sop", "hop1", "hop2"]


class ComparisonModel(_Strict):
    baseline: str
    options: list[OptionModel]
    transferred: list[str] = []
    note: Optional[str] = None


class EconModel(_Strict):
    discount_rate: float = 0.0325
    horizon: int = Field(default=10, ge=0)
    deferral_years: int = Field(default=5, ge=0)
    annual_benefit: Optional[float] = None
    avg_loss_reduction_mw: Optional[float] = None
    energy_price: Optional[float] = None
    currency: str = "$"


class ExpectedModel(_Strict):
    """A golden value: ``args`` run against this file, ``path`` into the JSON report."""

    args: list[str]
    path: str
    value: float | bool | str
    provenance: Optional[str] = None


class NetworkDocument(_Strict):
    schema_version: Literal["1"]
    name: str = ""
    description: Optional[str] = None
    network: NetworkModel
    demand_scenarios: dict[str, dict[str, float]] = {}
    states: dict[str, StateModel] = {}
    comparisons: dict[str, ComparisonModel] = {}
    econ: Optional[EconModel] = None
    expected: list[ExpectedModel] = []

    def to_network(self, scenario: str | None = None) -> Network:
        n = self.network
        net = Network(
            buses=[Bus(b.id, b.kind, b.fault_level_limit) for b in n.buses],
            sources=[
                Source(s.id, s.bus, s.capacity, s.fault_contribution, s.kind, s.contingency_capacity)
                for s in n.sources
            ],
            branches=[
                Branch(b.id, b.from_bus, b.to_bus, b.rating, b.in_service, b.incoming)
                for b in n.branches
            ],
            demands=[Demand(d.id, d.bus, d.magnitude) for d in n.demands],
            devices=[
                Device(d.id, d.from_bus, d.to_bus, d.kind, d.normal_state, d.converter_rating)
                for d in n.devices
            ],
            name=self.name,
        )
        if scenario is not None:
            if scenario not in self.demand_scenarios:
                raise KeyError(f"unknown demand scenario {scenario!r}")
            net = net.with_demands(self.demand_scenarios[scenario])
        return net

    def state(self, net: Network, name: str = "normal") -> SwitchState:
        state = SwitchState.normal(net)
        if name == "normal":
            return state
        if name not in self.states:
            raise KeyError(f"unknown state {name!r}")
        s = self.states[name]
        closed = dict(state.closed)
        closed.update({d: True for d in s.closed})
        closed.update({d: False for d in s.opened})
        in_service = dict(state.in_service)
        in_service.update({b: False for b in s.out_of_service})
        setpoints = dict(state.setpoints)
        setpoints.update(s.setpoints)
        return SwitchState(closed=closed, setpoints=setpoints, in_service=in_service)

    def comparison(self, name: str) -> Comparison:
        c = self.comparisons[name]
        return Comparison(
            baseline=c.baseline,
            options=tuple(Option(o.label, o.placement, o.kind) for o in c.options),
            transferred=tuple(c.transferred),
        )

    def econ_params(self) -> EconParams:
        e = self.econ or EconModel()
        return EconParams(
            discount_rate=e.discount_rate,
            horizon=e.horizon,
            annual_benefit=e.annual_benefit or 0.0,
            deferral_years=e.deferral_years,
            currency=e.currency,
        )


def _loc(loc) -> str:
    return ".".join(str(p) for p in loc) or "<document>"


def parse_network(text: str) -> NetworkDocument:
    """Parse and cross-check a document; raises a DocumentError subclass."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError([f"line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    if not isinstance(raw, dict):
        raise ParseError(["line 1: top level must be an object"])
    try:
        doc = NetworkDocument.model_validate(raw)
    except ValidationError as exc:
        raise SchemaError(
            [f"{_loc(e['loc'])}: {e['msg']}" for e in exc.errors(include_url=False)]
        ) from None
    _check_references(doc)
    return doc


def _check_references(doc: NetworkDocument) -> None:
    errors = []
    net = doc.to_network()
    for v in validate_network(net):
        if v.code == "dangling-reference":
            errors.append(f"network: {v.element}: {v.message}")
    demands = set(net.demand)
    for name, scen in doc.demand_scenarios.items():
        for d in scen:
            if d not in demands:
                errors.append(f"demand_scenarios.{name}: unknown demand {d!r}")
    devices = set(net.device)
    for name, st in doc.states.items():
        for d in [*st.closed, *st.opened, *st.setpoints]:
            if d not in devices:
                errors.append(f"states.{name}: unknown device {d!r}")
        for b in st.out_of_service:
            if b not in net.branch:
                errors.append(f"states.{name}: unknown branch {b!r}")
    for name, comp in doc.comparisons.items():
        labels = {o.label for o in comp.options}
        if comp.baseline not in labels:
            errors.append(f"comparisons.{name}: baseline {comp.baseline!r} is not an option")
        for o in comp.options:
            if o.placement not in devices and o.placement not in net.bus:
                errors.append(f"comparisons.{name}: unknown placement {o.placement!r}")
        for d in comp.transferred:
            if d not in demands:
                errors.append(f"comparisons.{name}: unknown demand {d!r}")
    if errors:
        raise DanglingReferenceError(errors)


def emit_document(doc: NetworkDocument) -> str:
    """Canonical JSON text; ``parse_network(emit_document(d)) == d``."""
    return json.dumps(doc.model_dump(mode="json", exclude_none=True), indent=2) + "\n"


def load_document(path) -> NetworkDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())
