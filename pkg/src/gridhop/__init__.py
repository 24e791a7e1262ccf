"""Capacity planning for distribution networks with hybrid and soft open points."""

from .balance import FlowSolution, headroom, solve_flows, thermal_violations
from .document import (
    DanglingReferenceError,
    DocumentError,
    NetworkDocument,
    ParseError,
    SchemaError,
    emit_document,
    load_document,
    parse_network,
)
from .econ import (
    EconParams,
    InvalidRate,
    annuity_factor,
    deferral_cost_reduction,
    lifetime_operational_benefit,
    loss_reduction_annual_benefit,
)
from .netmodel import (
    Branch,
    Bus,
    Demand,
    Device,
    InvalidState,
    Network,
    NonRadialState,
    Source,
    SwitchState,
    energized_islands,
    fault_level_violations,
    is_radial,
    island_fault_level,
    validate_network,
)
from .security import (
    Contingency,
    Infeasible,
    ReconfigurationPlan,
    best_reconfiguration,
    capacity_shortfall,
    enumerate_contingencies,
    firm_capacity,
    n1_analysis,
)
from .sizing import (
    DegenerateInput,
    IncompatiblePlacement,
    Unclassifiable,
    classify_use_case,
    compare_options,
    rating_ratio,
    size_device,
)

__all__ = [
    "annuity_factor",
    "best_reconfiguration",
    "Branch",
    "Bus",
    "capacity_shortfall",
    "classify_use_case",
    "compare_options",
    "Contingency",
    "DanglingReferenceError",
    "deferral_cost_reduction",
    "DegenerateInput",
    "Demand",
    "Device",
    "DocumentError",
    "EconParams",
    "emit_document",
    "energized_islands",
    "enumerate_contingencies",
    "fault_level_violations",
    "firm_capacity",
    "FlowSolution",
    "headroom",
    "IncompatiblePlacement",
    "Infeasible",
    "InvalidRate",
    "InvalidState",
    "is_radial",
    "island_fault_level",
    "lifetime_operational_benefit",
    "load_document",
    "loss_reduction_annual_benefit",
    "n1_analysis",
    "Network",
    "NetworkDocument",
    "NonRadialState",
    "parse_network",
    "ParseError",
    "rating_ratio",
    "ReconfigurationPlan",
    "SchemaError",
    "size_device",
    "solve_flows",
    "Source",
    "SwitchState",
    "thermal_violations",
    "Unclassifiable",
    "validate_network",
]
