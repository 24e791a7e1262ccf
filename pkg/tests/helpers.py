"""Shared test helpers: bundled fixtures and small hand-built networks."""

from __future__ import annotations

import random
from dataclasses import replace
from functools import lru_cache

from gridhop.cli import FIXTURES, fixture_text
from gridhop.document import NetworkDocument, parse_network
from gridhop.netmodel import Branch, Bus, Demand, Device, Network, Source, SwitchState

FIXTURE_NAMES = tuple(f.removesuffix(".json") for f in FIXTURES)


@lru_cache(maxsize=None)
def doc(name: str) -> NetworkDocument:
    return parse_network(fixture_text(f"{name}.json"))


def net(name: str, scenario: str | None = None) -> Network:
    return doc(name).to_network(scenario)


def random_state(network: Network, rng: random.Random) -> SwitchState:
    return SwitchState(
        closed={d.id: d.has_switch and rng.random() < 0.5 for d in network.devices},
        in_service={b.id: True for b in network.branches},
    )


def two_circuit_substation(circuit: float, demand: float) -> Network:
    """A substation fed by two equal incoming circuits and nothing else."""
    return Network(
        buses=[Bus("HV_1"), Bus("HV_2"), Bus("BB", "substation-busbar")],
        sources=[
            Source("T1", "HV_1", circuit, contingency_capacity=0.0),
            Source("T2", "HV_2", circuit, contingency_capacity=0.0),
        ],
        branches=[],
        demands=[Demand("D", "BB", demand)],
        devices=[
            Device("CB1", "HV_1", "BB", "ncp"),
            Device("CB2", "HV_2", "BB", "nop"),
        ],
        name="two-circuit",
    )


def chain(demands=(2.0, 3.0), rating=10.0, capacity=20.0) -> Network:
    """infeed - b1 - b2 - ... with one demand per bus."""
    buses = [Bus("b0", "substation-busbar")] + [Bus(f"b{i + 1}") for i in range(len(demands))]
    return Network(
        buses=buses,
        sources=[Source("g", "b0", capacity)],
        branches=[Branch(f"l{i + 1}", f"b{i}", f"b{i + 1}", rating) for i in range(len(demands))],
        demands=[Demand(f"d{i + 1}", f"b{i + 1}", m) for i, m in enumerate(demands)],
        devices=[],
    )


def fig2_shaped(rng: random.Random) -> tuple[Network, float, float]:
    """A random two-substation tie like the simple interconnection figure.

    Returns the network, the headroom h substation A is short by after
    losing one circuit, and the transferable demand D behind NCP A.
    """
    firm_a = rng.uniform(5.0, 20.0)
    h = rng.uniform(0.1, 5.0)
    d0 = rng.uniform(0.1, 5.0)
    b0 = rng.uniform(0.0, 2.0)
    d_b = rng.uniform(1.0, 10.0)
    split = rng.uniform(0.2, 0.8)
    lumped = firm_a + h
    firm_b = d_b + b0 + d0 + h + rng.uniform(0.5, 5.0)
    network = Network(
        buses=[
            Bus("SUB_A", "substation-busbar"),
            Bus("A1"),
            Bus("A2"),
            Bus("A0"),
            Bus("B0"),
            Bus("SUB_B", "substation-busbar"),
        ],
        sources=[
            Source("GRID_A", "SUB_A", 2 * firm_a, contingency_capacity=firm_a),
            Source("GRID_B", "SUB_B", 2 * firm_b, contingency_capacity=firm_b),
        ],
        branches=[
            Branch("FDR_A1", "SUB_A", "A1", 2 * lumped),
            Branch("FDR_A2", "SUB_A", "A2", 2 * lumped),
            Branch("C_AB", "SUB_B", "B0", firm_b),
        ],
        demands=[
            Demand("D_A1", "A1", lumped * split),
            Demand("D_A2", "A2", lumped * (1 - split)),
            Demand("D_A0", "A0", d0),
            Demand("D_B0", "B0", b0),
            Demand("D_B", "SUB_B", d_b),
        ],
        devices=[Device("NCP_A", "SUB_A", "A0", "ncp"), Device("NOP", "A0", "B0", "nop")],
        name="fig2-shaped",
    )
    return network, h, d0


def scale_mva(network: Network, k: float) -> Network:
    """Every MVA quantity in the network multiplied by ``k``."""
    return replace(
        network,
        buses=tuple(
            replace(b, fault_level_limit=None if b.fault_level_limit is None else b.fault_level_limit * k)
            for b in network.buses
        ),
        sources=tuple(
            replace(
                s,
                capacity=s.capacity * k,
                contingency_capacity=s.contingency_capacity * k,
                fault_contribution=s.fault_contribution * k,
            )
            for s in network.sources
        ),
        branches=tuple(replace(b, rating=b.rating * k) for b in network.branches),
        demands=tuple(replace(d, magnitude=d.magnitude * k) for d in network.demands),
        devices=tuple(replace(d, converter_rating=d.converter_rating * k) for d in network.devices),
    )
