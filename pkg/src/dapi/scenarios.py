"""Built-in scenarios: a five-unit desk-scale analog of the 14-machine study."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .config import ControllerConfig, LoadEvent, ScenarioConfig
from .convex import BarrierQuadraticObjective, ObjectiveBank
from .graph import WeightedDigraph, complete_graph, line_graph
from .plant import LinearPlant, MachineParams, ring_susceptances

UNIT_NAMES = ("G201", "G301", "G401", "G403", "G503")
# cost weights and base dispatch (p.u.) of the five secondary units
TABLE1_Q = (1.0, 0.8, 1.0, 0.8, 0.1)
TABLE1_U_STAR = (0.9, 0.9, 0.787, 0.787, 0.6539)
TABLE1_GAMMA = 0.001
TABLE1_TAU = 0.2
LIMIT_MARGIN = 0.1
LINE_WEIGHT = 0.1
# machine that absorbs the load step (stand-in for the doubled bus-406 load)
STEP_MACHINE = "G403"


def default_plant(n=5, control_order=None) -> LinearPlant:
    machines = [MachineParams(M=10.0, D=1.0, T_gov=0.5, R_droop=0.05)] * n
    return LinearPlant(machines, ring_susceptances(n, 5.0), control_order=control_order)


def table1_bank(gamma=TABLE1_GAMMA, margin=LIMIT_MARGIN) -> ObjectiveBank:
    return ObjectiveBank(
        BarrierQuadraticObjective(q, us, gamma, us - margin, us + margin)
        for q, us in zip(TABLE1_Q, TABLE1_U_STAR))


def analog_graph(kind="line", m=5) -> WeightedDigraph:
    if kind == "line":
        return line_graph(m, LINE_WEIGHT)
    if kind == "cut":
        # line graph with the middle link 2 -> 3 removed: two components
        a = np.array(line_graph(m, LINE_WEIGHT).adjacency)
        a[1, 2] = 0.0
        return WeightedDigraph(a)
    if kind == "complete":
        return complete_graph(m, LINE_WEIGHT)
    raise ValueError(f"unknown graph kind {kind!r}")


def australian_analog(tau=TABLE1_TAU, graph="line", step_size=0.2, step_time=200.0,
                      t_end=800.0, h=0.01, record_every=10) -> ScenarioConfig:
    """Table-1 objectives on the default plant with a load step at one machine."""
    names = UNIT_NAMES
    loads = np.array(TABLE1_U_STAR)  # balanced at the base dispatch
    delta = np.zeros(len(names))
    delta[names.index(STEP_MACHINE)] = step_size
    events = (LoadEvent(step_time, delta),) if step_size else ()
    return ScenarioConfig(
        plant=default_plant(len(names)),
        machine_names=names,
        loads=loads,
        bank=table1_bank(),
        graph=analog_graph(graph, len(names)),
        node_names=names,
        controller=ControllerConfig(tau),
        events=events,
        t_end=t_end,
        step=h,
        record_every=record_every,
        name=f"aus_analog_{graph}",
    )


def quadratic_analog(tau=TABLE1_TAU, graph="line", **kw) -> ScenarioConfig:
    """Same as ``australian_analog`` with unbounded pure quadratics (a linear closed loop)."""
    cfg = australian_analog(tau=tau, graph=graph, **kw)
    bank = ObjectiveBank(BarrierQuadraticObjective(q, us) for q, us in zip(TABLE1_Q, TABLE1_U_STAR))
    return replace(cfg, bank=bank, name=f"quadratic_{graph}")
