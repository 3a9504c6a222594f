"""JSON scenario files.

Layout::

    {
      "name": "...",
      "plant": {
        "machines": [{"name": "G1", "M": 10, "D": 1, "T_gov": 0.5,
                      "R_droop": 0.05, "controllable": true}, ...],
        "susceptances": [{"i": "G1", "j": "G2", "T": 5.0}, ...],
        "loads": {"G1": 0.9, ...}            # or a list in machine order
      },
      "objectives": {"G1": {"q": 1, "u_star": 0.9, "gamma": 0.001,
                            "lower": 0.8, "upper": 1.0}, ...},
      "graph": {"nodes": ["G1", ...],
                "edges": [{"from": "G1", "to": "G2", "weight": 0.1}, ...]},
      "controller": {"tau": 0.2, "eta0": "from_dispatch"},
      "events": [{"time": 200, "load": {"G4": 0.2}}],
      "t_end": 800, "step": 0.01, "record_every": 10
    }

Graph nodes are the controllable machines; their order fixes the controller
indexing. An edge ``from`` i ``to`` j sets a_ij (node i listens to node j).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .convex import BarrierQuadraticObjective, ObjectiveBank
from .errors import ParseError, SingularNetwork, ValidationError
from .graph import WeightedDigraph
from .plant import LinearPlant, MachineParams


@dataclass(frozen=True)
class LoadEvent:
    time: float
    delta: np.ndarray  # per machine, p.u.


@dataclass(frozen=True)
class ControllerConfig:
    tau: float
    eta0: object = "from_dispatch"  # or an array of length m


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    plant: LinearPlant
    machine_names: tuple
    loads: np.ndarray
    bank: ObjectiveBank
    graph: WeightedDigraph
    node_names: tuple
    controller: ControllerConfig
    events: tuple = ()
    t_end: float = 800.0
    step: float = 0.01
    record_every: int = 1
    output: str | None = None
    name: str = "scenario"
    extra: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.graph.node_count


def _require(obj, key, path):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError(path, f"missing required field '{key}'")
    return obj[key]


def _number(value, path, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(path, f"expected a finite number, got {value!r}")
    return float(value)


def _per_machine(spec, names, path):
    n = len(names)
    if isinstance(spec, list):
        if len(spec) != n:
            raise ValidationError(path, f"expected {n} entries, got {len(spec)}")
        return np.array([_number(v, f"{path}[{k}]") for k, v in enumerate(spec)])
    if isinstance(spec, dict):
        out = np.zeros(n)
        for key, v in spec.items():
            if key not in names:
                raise ValidationError(f"{path}.{key}", "unknown machine")
            out[names.index(key)] = _number(v, f"{path}.{key}")
        return out
    raise ValidationError(path, "expected a list or an object keyed by machine name")


def config_from_dict(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    plant_raw = _require(raw, "plant", "plant")
    machines_raw = _require(plant_raw, "machines", "plant")
    if not isinstance(machines_raw, list) or not machines_raw:
        raise ValidationError("plant.machines", "expected a non-empty list")

    names, machines = [], []
    for k, mr in enumerate(machines_raw):
        p = f"plant.machines[{k}]"
        name = str(mr.get("name", f"M{k + 1}")) if isinstance(mr, dict) else None
        if name is None:
            raise ValidationError(p, "expected an object")
        if name in names:
            raise ValidationError(p, f"duplicate machine name '{name}'")
        vals = {key: _number(_require(mr, key, p), f"{p}.{key}") for key in ("M", "D", "T_gov", "R_droop")}
        for key, v in vals.items():
            if not v > 0:
                raise ValidationError(f"{p}.{key}", f"must be positive, got {v}")
        machines.append(MachineParams(controllable=bool(mr.get("controllable", True)), **vals))
        names.append(name)
    n = len(names)

    t = np.zeros((n, n))
    for k, line in enumerate(plant_raw.get("susceptances", [])):
        p = f"plant.susceptances[{k}]"
        i, j = _require(line, "i", p), _require(line, "j", p)
        if i not in names or j not in names or i == j:
            raise ValidationError(p, f"invalid line endpoints ({i}, {j})")
        val = _number(_require(line, "T", p), f"{p}.T")
        if val < 0:
            raise ValidationError(f"{p}.T", "susceptance must be non-negative")
        a, b = names.index(i), names.index(j)
        t[a, b] = t[b, a] = val
    loads = _per_machine(plant_raw.get("loads", [0.0] * n), names, "plant.loads")

    graph_raw = _require(raw, "graph", "graph")
    nodes = _require(graph_raw, "nodes", "graph")
    if not isinstance(nodes, list) or not nodes or len(set(nodes)) != len(nodes):
        raise ValidationError("graph.nodes", "expected a non-empty list of distinct names")
    controllable = [nm for nm, mc in zip(names, machines) if mc.controllable]
    if sorted(nodes) != sorted(controllable):
        raise ValidationError("graph.nodes", f"must list exactly the controllable machines {controllable}")
    m = len(nodes)
    adj = np.zeros((m, m))
    for k, e in enumerate(graph_raw.get("edges", [])):
        p = f"graph.edges[{k}]"
        src, dst = _require(e, "from", p), _require(e, "to", p)
        if src not in nodes or dst not in nodes:
            raise ValidationError(p, f"unknown node in edge ({src} -> {dst})")
        if src == dst:
            raise ValidationError(p, "self-loops are not allowed")
        w = _number(e.get("weight", 1.0), f"{p}.weight")
        if w < 0:
            raise ValidationError(f"{p}.weight", "weight must be non-negative")
        adj[nodes.index(src), nodes.index(dst)] = w

    try:
        plant = LinearPlant(machines, t, control_order=[names.index(nm) for nm in nodes])
    except SingularNetwork as exc:
        raise ValidationError("plant.susceptances", str(exc)) from exc

    obj_raw = _require(raw, "objectives", "objectives")
    objectives = []
    for nm in nodes:
        p = f"objectives.{nm}"
        o = _require(obj_raw, nm, "objectives")
        kwargs = dict(
            q=_number(_require(o, "q", p), f"{p}.q"),
            u_star=_number(_require(o, "u_star", p), f"{p}.u_star"),
            gamma=_number(o.get("gamma", 0.0), f"{p}.gamma"),
        )
        lower = _number(o.get("lower"), f"{p}.lower", allow_none=True)
        upper = _number(o.get("upper"), f"{p}.upper", allow_none=True)
        kwargs["lower"] = -math.inf if lower is None else lower
        kwargs["upper"] = math.inf if upper is None else upper
        try:
            objectives.append(BarrierQuadraticObjective(**kwargs))
        except ValueError as exc:
            raise ValidationError(p, f"objective for '{nm}': {exc}") from exc

    ctrl_raw = _require(raw, "controller", "controller")
    tau = _number(_require(ctrl_raw, "tau", "controller"), "controller.tau")
    if not tau > 0:
        raise ValidationError("controller.tau", f"must be positive, got {tau}")
    eta0 = ctrl_raw.get("eta0", "from_dispatch")
    if eta0 != "from_dispatch":
        if not isinstance(eta0, list) or len(eta0) != m:
            raise ValidationError("controller.eta0", f"expected 'from_dispatch' or {m} numbers")
        eta0 = np.array([_number(v, f"controller.eta0[{k}]") for k, v in enumerate(eta0)])

    step = _number(raw.get("step", 0.01), "step")
    if not step > 0:
        raise ValidationError("step", f"must be positive, got {step}")
    t_end = _number(raw.get("t_end", 800.0), "t_end")
    events = []
    for k, ev in enumerate(raw.get("events", [])):
        p = f"events[{k}]"
        time = _number(_require(ev, "time", p), f"{p}.time")
        if time < 0:
            raise ValidationError(f"{p}.time", "event time must be non-negative")
        events.append(LoadEvent(time, _per_machine(_require(ev, "load", p), names, f"{p}.load")))
    times = [e.time for e in events]
    if times != sorted(times):
        raise ValidationError("events", "events must be sorted by time")
    if times and t_end < times[-1]:
        raise ValidationError("t_end", "t_end precedes the last event")
    if not t_end > 0:
        raise ValidationError("t_end", "must be positive")
    record_every = raw.get("record_every", 1)
    if not isinstance(record_every, int) or isinstance(record_every, bool) or record_every < 1:
        raise ValidationError("record_every", "expected a positive integer")

    output = raw.get("output")
    if output is not None and base_dir is not None:
        output = str((base_dir / output).resolve())

    return ScenarioConfig(
        plant=plant,
        machine_names=tuple(names),
        loads=loads,
        bank=ObjectiveBank(objectives),
        graph=WeightedDigraph(adj),
        node_names=tuple(nodes),
        controller=ControllerConfig(tau, eta0),
        events=tuple(events),
        t_end=t_end,
        step=step,
        record_every=record_every,
        output=output,
        name=str(raw.get("name", "scenario")),
    )


def parse_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return config_from_dict(raw, base_dir=path.parent)


def _finite_or_none(x):
    return None if not math.isfinite(x) else x


def config_to_dict(cfg: ScenarioConfig) -> dict:
    names = list(cfg.machine_names)
    t = cfg.plant.susceptances
    lines = [{"i": names[i], "j": names[j], "T": float(t[i, j])}
             for i in range(len(names)) for j in range(i + 1, len(names)) if t[i, j] > 0]
    nodes = list(cfg.node_names)
    a = cfg.graph.adjacency
    edges = [{"from": nodes[i], "to": nodes[j], "weight": float(a[i, j])}
             for i in range(len(nodes)) for j in range(len(nodes)) if a[i, j] > 0]
    eta0 = cfg.controller.eta0
    out = {
        "name": cfg.name,
        "plant": {
            "machines": [{"name": nm, "M": mc.M, "D": mc.D, "T_gov": mc.T_gov,
                          "R_droop": mc.R_droop, "controllable": mc.controllable}
                         for nm, mc in zip(names, cfg.plant.machines)],
            "susceptances": lines,
            "loads": {nm: float(v) for nm, v in zip(names, cfg.loads)},
        },
        "objectives": {nm: {"q": f.q, "u_star": f.u_star, "gamma": f.gamma,
                            "lower": _finite_or_none(f.lower), "upper": _finite_or_none(f.upper)}
                       for nm, f in zip(nodes, cfg.bank)},
        "graph": {"nodes": nodes, "edges": edges},
        "controller": {"tau": cfg.controller.tau,
                       "eta0": eta0 if isinstance(eta0, str) else [float(v) for v in eta0]},
        "events": [{"time": e.time,
                    "load": {nm: float(v) for nm, v in zip(names, e.delta) if v != 0}}
                   for e in cfg.events],
        "t_end": cfg.t_end,
        "step": cfg.step,
        "record_every": cfg.record_every,
    }
    if cfg.output is not None:
        out["output"] = cfg.output
    return out
