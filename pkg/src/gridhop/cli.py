"""Command-line interface: ``gridhop <command> ...``.

Exit status is 0 on success, 1 when the analysis finds a problem it was
asked to flag (infeasible search, residual shortfall, ``--assert-secure``
failure) and 2 for any input error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import econ
from .balance import solve_flows, thermal_violations
from .document import DocumentError, NetworkDocument, load_document
from .netmodel import TOL, InvalidState, Network, NonRadialState, validate_network
from .report import FORMATS, mva, rating, render
from .security import (
    Infeasible,
    N1Result,
    ReconfigurationPlan,
    firm_capacity,
    n1_analysis,
)
from .sizing import (
    Comparison,
    IncompatiblePlacement,
    Option,
    Unclassifiable,
    classify_use_case,
    compare_options,
    size_device,
)

log = logging.getLogger("gridhop")

FIXTURES = ("haxby.json", "fig2.json", "fig3.json", "fig4.json")
FIXTURE_DIR_ENV = "GRIDHOP_FIXTURE_DIR"

EXIT_OK, EXIT_ANALYSIS, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


# -- report builders ----------------------------------------------------------


def plan_report(net: Network, plan: ReconfigurationPlan) -> dict:
    return {
        "contingency": str(plan.contingency) if plan.contingency else "none",
        "unserved": mva(plan.unserved),
        "converter_usage_total": mva(plan.total_converter_usage),
        "switch_operations": plan.switch_operations,
        "toggled": list(plan.toggled),
        "switches": {
            d.id: "closed" if plan.state.is_closed(d.id) else "open"
            for d in sorted(net.devices, key=lambda d: d.id)
        },
        "setpoints": {k: mva(v) for k, v in sorted(plan.state.setpoints.items())},
        "served": {k: mva(v) for k, v in sorted(plan.served.items())},
    }


def n1_report(
    net: Network,
    result: N1Result,
    frozen: N1Result,
    *,
    scenario: str | None,
    classify: bool = False,
) -> dict:
    plans = []
    for plan in result.plans:
        entry = plan_report(net, plan)
        if classify:
            try:
                uc = classify_use_case(net, plan.contingency, plan)
                entry["use_case"] = {"tag": uc.tag, "evidence": list(uc.evidence)}
            except Unclassifiable as exc:
                entry["use_case"] = {"tag": "none", "evidence": [], "reason": str(exc)}
        plans.append(entry)
    return {
        "command": "n1",
        "network": net.name,
        "scenario": scenario or "base",
        "total_demand": mva(net.total_demand()),
        "shortfall": mva(result.shortfall),
        "shortfall_without_reconfiguration": mva(frozen.shortfall),
        "secure": result.shortfall <= TOL,
        "contingencies": plans,
    }


def flows_report(net: Network, state_name: str, sol) -> dict:
    violations = thermal_violations(net, sol)
    return {
        "command": "flows",
        "network": net.name,
        "state": state_name,
        "flows": {k: mva(v) for k, v in sorted(sol.flows.items())},
        "converter_flows": {k: mva(v) for k, v in sorted(sol.converter_flows.items())},
        "supply": {k: mva(v) for k, v in sorted(sol.supply.items())},
        "served": {k: mva(v) for k, v in sorted(sol.served.items())},
        "thermal_violations": [
            {
                "element": v.element,
                "type": v.element_type,
                "flow": mva(v.flow),
                "rating": mva(v.rating),
                "overload": mva(v.overload),
            }
            for v in violations
        ],
    }


def econ_report(
    *,
    deferral_years: int,
    rate: float,
    horizon: int,
    annual_benefit: float | None,
    loss_mw: float | None,
    price: float | None,
    currency: str,
) -> dict:
    out = {
        "command": "econ",
        "discount_rate": rate,
        "deferral_years": deferral_years,
        "deferral_cost_reduction_pct": econ.deferral_cost_reduction(deferral_years, rate),
    }
    if loss_mw is not None and price is not None:
        energy = econ.annual_loss_energy(loss_mw)
        out["annual_loss_energy_mwh"] = energy
        out["annual_loss_energy_mwh_rounded"] = round(energy)
        annual_benefit = econ.loss_reduction_annual_benefit(loss_mw, price)
    if annual_benefit is not None:
        out["currency"] = currency
        out["horizon"] = horizon
        out["annual_benefit"] = annual_benefit
        out["lifetime_operational_benefit"] = econ.lifetime_operational_benefit(
            annual_benefit, horizon, rate
        )
        out["lifetime_operational_benefit_closed_form"] = annual_benefit * econ.annuity_factor(
            horizon, rate
        )
    return out


# -- commands -------------------------------------------------------------------


def _load(args) -> tuple[NetworkDocument, Network]:
    doc = load_document(args.file)
    try:
        net = doc.to_network(args.scenario)
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from None
    return doc, net


def cmd_validate(args):
    doc, net = _load(args)
    report = validate_network(net)
    tree = {
        "command": "validate",
        "network": net.name,
        "valid": report.ok,
        "violations": [
            {"code": v.code, "element": v.element, "message": v.message} for v in report
        ],
    }
    return (EXIT_OK if report.ok else EXIT_INPUT), tree


def cmd_flows(args):
    doc, net = _load(args)
    try:
        state = doc.state(net, args.state)
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from None
    sol = solve_flows(net, state)
    return EXIT_OK, flows_report(net, args.state, sol)


def cmd_n1(args):
    doc, net = _load(args)
    executor = ThreadPoolExecutor(args.workers) if args.workers > 1 else None
    try:
        result = n1_analysis(net, use_devices=not args.freeze_devices, executor=executor)
        frozen = n1_analysis(net, use_devices=False, executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    tree = n1_report(net, result, frozen, scenario=args.scenario, classify=args.classify)
    code = EXIT_ANALYSIS if args.assert_secure and not tree["secure"] else EXIT_OK
    return code, tree


def cmd_firm_capacity(args):
    doc, net = _load(args)
    scaled = args.scale or None
    if scaled:
        unknown = sorted(set(scaled) - set(net.demand))
        if unknown:
            raise InputError(f"unknown demand ids: {unknown}")
    fc = firm_capacity(net, scaled)
    return EXIT_OK, {
        "command": "firm-capacity",
        "network": net.name,
        "scenario": args.scenario or "base",
        "scaled_demands": sorted(scaled) if scaled else sorted(net.demand),
        "unbounded": fc.unbounded,
        "scale": rating(fc.scale) if not fc.unbounded else fc.scale,
        "firm_capacity": rating(fc.capacity) if not fc.unbounded else fc.capacity,
    }


def cmd_size(args):
    doc, net = _load(args)
    res = size_device(net, args.placement, args.kind)
    tree = {
        "command": "size",
        "network": net.name,
        "scenario": args.scenario or "base",
        "placement": res.placement,
        "kind": res.device_kind,
        "legs": list(res.legs),
        "required_rating": rating(res.required_rating),
        "residual_shortfall": mva(res.residual_shortfall),
    }
    return (EXIT_OK if res.succeeded else EXIT_ANALYSIS), tree


def _parse_option(text: str) -> Option:
    try:
        label, rest = text.split("=", 1)
        placement, kind = rest.rsplit(":", 1)
    except ValueError:
        raise InputError(f"--option expects label=placement:kind, got {text!r}") from None
    return Option(label, placement, kind)


def cmd_compare(args):
    doc, net = _load(args)
    if args.option:
        if not args.baseline:
            raise InputError("--baseline is required with --option")
        scenario = Comparison(
            args.baseline, tuple(_parse_option(o) for o in args.option), tuple(args.transferred)
        )
        name = "ad-hoc"
    else:
        if not doc.comparisons:
            raise InputError("document defines no comparisons; use --option")
        name = args.comparison or sorted(doc.comparisons)[0]
        if name not in doc.comparisons:
            raise InputError(f"unknown comparison {name!r}")
        scenario = doc.comparison(name)
    rows = compare_options(net, scenario)
    tree = {
        "command": "compare",
        "network": net.name,
        "scenario": args.scenario or "base",
        "comparison": name,
        "baseline": scenario.baseline,
        "transferred": list(scenario.transferred),
        "transferred_demand": mva(sum(net.demand[d].magnitude for d in scenario.transferred)),
        "rows": [
            {
                "label": r.label,
                "placement": r.placement,
                "kind": r.kind,
                "required_rating": rating(r.required_rating),
                "residual_shortfall": mva(r.residual_shortfall),
                "ratio_to_baseline": None if r.ratio_to_baseline is None else rating(r.ratio_to_baseline),
                "formula_ratio": None if r.formula_ratio is None else rating(r.formula_ratio),
                "formula_agrees": r.agrees,
            }
            for r in rows
        ],
    }
    ok = all(r.residual_shortfall <= TOL for r in rows)
    return (EXIT_OK if ok else EXIT_ANALYSIS), tree


def cmd_econ(args):
    params = None
    if args.file:
        doc = load_document(args.file)
        params = doc.econ

    def pick(flag, field, default):
        if flag is not None:
            return flag
        return getattr(params, field) if params is not None else default

    rate = pick(args.rate, "discount_rate", 0.0325)
    deferral = pick(args.deferral, "deferral_years", 5)
    horizon = pick(args.horizon, "horizon", 10)
    benefit = pick(args.annual_benefit, "annual_benefit", None)
    loss = pick(args.loss_mw, "avg_loss_reduction_mw", None)
    price = pick(args.price, "energy_price", None)
    currency = params.currency if params is not None else "$"
    try:
        tree = econ_report(
            deferral_years=deferral,
            rate=rate,
            horizon=horizon,
            annual_benefit=benefit,
            loss_mw=loss,
            price=price,
            currency=currency,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return EXIT_OK, tree


def fixture_text(name: str) -> str:
    return resources.files("gridhop").joinpath("fixtures", name).read_text(encoding="utf-8")


def cmd_fixtures(args):
    target = Path(args.dir or os.environ.get(FIXTURE_DIR_ENV) or ".")
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for name in FIXTURES:
        path = target / name
        path.write_text(fixture_text(name), encoding="utf-8")
        written.append(str(path))
    return EXIT_OK, {"command": "fixtures", "directory": str(target), "written": written}


# -- entry points -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="text")
    common.add_argument("--out", help="write the report here instead of stdout")

    net_args = _Parser(add_help=False, parents=[common])
    net_args.add_argument("file", help="network document (JSON)")
    net_args.add_argument("--scenario", help="named demand scenario from the document")

    p = _Parser(prog="gridhop", description="HOP/SOP network capacity planning")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", parents=[net_args], help="check network structure")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("flows", parents=[net_args], help="nodal balance for a switch state")
    s.add_argument("--state", default="normal")
    s.set_defaults(func=cmd_flows)

    s = sub.add_parser("n1", parents=[net_args], help="N-1 contingency analysis")
    s.add_argument("--assert-secure", action="store_true", help="exit 1 on any shortfall")
    s.add_argument("--freeze-devices", action="store_true", help="no switching, converters idle")
    s.add_argument("--classify", action="store_true", help="tag each stressed contingency")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_n1)

    s = sub.add_parser("firm-capacity", parents=[net_args], help="largest secure demand")
    s.add_argument("--scale", nargs="+", metavar="DEMAND", help="scale only these demands")
    s.set_defaults(func=cmd_firm_capacity)

    s = sub.add_parser("size", parents=[net_args], help="size one converter")
    s.add_argument("--placement", required=True, help="device id, or tee-point bus for a sop")
    s.add_argument("--kind", required=True, choices=("sop", "hop1", "hop2"))
    s.set_defaults(func=cmd_size)

    s = sub.add_parser("compare", parents=[net_args], help="size options against a baseline")
    s.add_argument("--comparison", help="named comparison from the document")
    s.add_argument("--option", action="append", help="label=placement:kind (repeatable)")
    s.add_argument("--baseline")
    s.add_argument("--transferred", nargs="*", default=[])
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("econ", parents=[common], help="deferral and operational benefit")
    s.add_argument("--file", help="take defaults from this document's econ section")
    s.add_argument("--deferral", type=int, help="deferral years")
    s.add_argument("--rate", type=float, help="discount rate, e.g. 0.0325")
    s.add_argument("--horizon", type=int, help="benefit horizon in years")
    s.add_argument("--annual-benefit", type=float)
    s.add_argument("--loss-mw", type=float, help="average loss reduction, MW")
    s.add_argument("--price", type=float, help="energy price per MWh")
    s.set_defaults(func=cmd_econ)

    s = sub.add_parser("fixtures", parents=[common], help="write the bundled networks")
    s.add_argument("--dir", help=f"output directory (default ${FIXTURE_DIR_ENV} or .)")
    s.set_defaults(func=cmd_fixtures)
    return p


@dataclass
class Report:
    tree: dict
    format: str = "text"
    out: str | None = None

    @property
    def error(self) -> str | None:
        return self.tree.get("error")

    def render(self) -> str:
        return render(self.tree, self.format)


def run_command(argv: list[str]) -> tuple[int, Report]:
    """Run one command; returns (exit status, report). Never raises."""
    try:
        args = build_parser().parse_args(argv)
    except InputError as exc:
        return EXIT_INPUT, Report({"error": "usage", "messages": [str(exc)]})
    try:
        code, tree = args.func(args)
    except DocumentError as exc:
        code, tree = EXIT_INPUT, {"error": type(exc).__name__, "messages": exc.errors}
    except econ.InvalidRate as exc:
        code, tree = EXIT_INPUT, {"error": "InvalidRate", "messages": [str(exc)]}
    except (InputError, IncompatiblePlacement, NonRadialState, InvalidState, OSError) as exc:
        code, tree = EXIT_INPUT, {"error": type(exc).__name__, "messages": [str(exc)]}
    except Infeasible as exc:
        code, tree = EXIT_ANALYSIS, {"error": "Infeasible", "messages": [str(exc)]}
    return code, Report(tree, args.format, args.out)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(out)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    code, report = run_command(sys.argv[1:] if argv is None else argv)
    if report.error:
        for msg in report.tree["messages"]:
            log.error("%s: %s", report.error, msg)
        if report.format == "text":
            return code
    _emit(report.render(), report.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
