"""Production-network topology, run configuration, and system state.

A network is a directed acyclic graph whose edges are queue-processor
units: an unbounded queue feeding a transport segment of length ``b - a``
with velocity ``v`` and a finite ladder of capacity levels.  Flow entering
a node is split among its outgoing edges by constant distribution rates
that sum to one.

Configurations are plain JSON documents (see :func:`parse_config`); the
two built-in experiment presets are :func:`diamond_config` and
:func:`serial2_config`.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

DEFAULT_SEED = 20240801

# Distribution rates at a branching node must sum to one.
RATE_SUM_TOL = 1e-12
# Horizon must sit on the time grid.
GRID_ALIGN_TOL = 1e-9


class ConfigError(ValueError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """The document does not match the schema (missing/ill-typed field)."""


class ValidationError(ConfigError):
    """The document parses but violates a model invariant."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeSpec:
    """One queue-processor unit.

    ``capacity_levels`` is the strictly increasing ladder of throughput
    values the processor can take; the current level is selected by the
    capacity-state index of the system state.
    """

    id: int
    a: float
    b: float
    v: float
    capacity_levels: tuple[float, ...]
    num_cells: int

    def __post_init__(self):
        if self.b <= self.a:
            raise ValidationError(f"edge {self.id}: requires b > a")
        if self.v <= 0.0:
            raise ValidationError(f"edge {self.id}: velocity must be positive")
        if not self.capacity_levels:
            raise ValidationError(f"edge {self.id}: needs at least one capacity level")
        levels = self.capacity_levels
        if levels[0] < 0.0 or any(y <= x for x, y in zip(levels, levels[1:])):
            raise ValidationError(
                f"edge {self.id}: capacity levels must be non-negative and strictly increasing"
            )
        if self.num_cells < 1:
            raise ValidationError(f"edge {self.id}: num_cells must be >= 1")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.num_cells

    @property
    def num_states(self) -> int:
        return len(self.capacity_levels)

    @property
    def max_capacity(self) -> float:
        return self.capacity_levels[-1]


@dataclass(frozen=True)
class NodeSpec:
    id: int
    in_edges: tuple[int, ...]
    out_edges: tuple[int, ...]
    rates: tuple[float, ...]


@dataclass(frozen=True)
class InflowTable:
    """Piecewise-constant external inflow, value(t) = values[k] for t in [times[k], times[k+1])."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise ValidationError("inflow table needs matching, non-empty times/values")
        if self.times[0] != 0.0:
            raise ValidationError("inflow table must start at t = 0")
        if any(t1 <= t0 for t0, t1 in zip(self.times, self.times[1:])):
            raise ValidationError("inflow table times must be strictly increasing")
        if any(v < 0.0 for v in self.values):
            raise ValidationError("inflow values must be non-negative")

    @classmethod
    def constant(cls, value: float) -> "InflowTable":
        return cls(times=(0.0,), values=(float(value),))

    def value(self, t: float) -> float:
        idx = 0
        for k, tk in enumerate(self.times):
            if tk <= t:
                idx = k
            else:
                break
        return self.values[idx]


@dataclass(frozen=True)
class NetworkTopology:
    edges: tuple[EdgeSpec, ...]
    nodes: tuple[NodeSpec, ...]
    inflows: tuple[tuple[int, InflowTable], ...]  # (node id, table)

    def __post_init__(self):
        _validate_topology(self)

    # -- derived lookups -----------------------------------------------------

    @property
    def edge_ids(self) -> tuple[int, ...]:
        return tuple(e.id for e in self.edges)

    def edge(self, edge_id: int) -> EdgeSpec:
        return self.edges[self.edge_index(edge_id)]

    def edge_index(self, edge_id: int) -> int:
        try:
            return self.edge_ids.index(edge_id)
        except ValueError:
            raise KeyError(f"no edge {edge_id}") from None

    def start_node(self, edge_id: int) -> int:
        for node in self.nodes:
            if edge_id in node.out_edges:
                return node.id
        raise KeyError(f"edge {edge_id} has no start node")

    def end_node(self, edge_id: int) -> int:
        for node in self.nodes:
            if edge_id in node.in_edges:
                return node.id
        raise KeyError(f"edge {edge_id} has no end node")

    def distribution_rate(self, node_id: int, edge_id: int) -> float:
        for node in self.nodes:
            if node.id == node_id:
                return node.rates[node.out_edges.index(edge_id)]
        raise KeyError(f"no node {node_id}")

    @property
    def source_nodes(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if not n.in_edges)

    @property
    def sink_nodes(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if not n.out_edges)

    def inflow_at(self, node_id: int) -> InflowTable | None:
        for nid, table in self.inflows:
            if nid == node_id:
                return table
        return None


def _validate_topology(topo: NetworkTopology) -> None:
    edge_ids = [e.id for e in topo.edges]
    if len(set(edge_ids)) != len(edge_ids):
        raise ValidationError("edge ids must be unique")
    node_ids = [n.id for n in topo.nodes]
    if len(set(node_ids)) != len(node_ids):
        raise ValidationError("node ids must be unique")

    starts: dict[int, int] = {}
    ends: dict[int, int] = {}
    for node in topo.nodes:
        if len(node.out_edges) != len(node.rates):
            raise ValidationError(f"node {node.id}: rates must align with out edges")
        for e in node.out_edges:
            if e in starts:
                raise ValidationError(f"edge {e} starts at more than one node")
            starts[e] = node.id
        for e in node.in_edges:
            if e in ends:
                raise ValidationError(f"edge {e} ends at more than one node")
            ends[e] = node.id
        if node.out_edges:
            total = math.fsum(node.rates)
            if any(r < 0.0 or r > 1.0 for r in node.rates):
                raise ValidationError(f"node {node.id}: distribution rates must lie in [0, 1]")
            if abs(total - 1.0) > RATE_SUM_TOL:
                raise ValidationError(
                    f"node {node.id}: distribution rates sum to {total!r}, expected 1"
                )
    for e in edge_ids:
        if e not in starts:
            raise ValidationError(f"edge {e} is not listed as an out edge of any node")
        if e not in ends:
            raise ValidationError(f"edge {e} is not listed as an in edge of any node")
    for e in starts:
        if e not in edge_ids:
            raise ValidationError(f"node references unknown edge {e}")
    for e in ends:
        if e not in edge_ids:
            raise ValidationError(f"node references unknown edge {e}")

    inflow_nodes = [nid for nid, _ in topo.inflows]
    if len(set(inflow_nodes)) != len(inflow_nodes):
        raise ValidationError("duplicate inflow node")
    node_by_id = {n.id: n for n in topo.nodes}
    for nid in inflow_nodes:
        if nid not in node_by_id:
            raise ValidationError(f"inflow references unknown node {nid}")
        if node_by_id[nid].in_edges:
            raise ValidationError(f"inflow node {nid} must have no incoming edges")

    # Reject cycles (Kahn).  Feedback loops are out of scope.
    indeg = {n.id: len(n.in_edges) for n in topo.nodes}
    ready = [nid for nid, d in indeg.items() if d == 0]
    seen = 0
    while ready:
        nid = ready.pop()
        seen += 1
        for e in node_by_id[nid].out_edges:
            tgt = ends[e]
            indeg[tgt] -= 1
            if indeg[tgt] == 0:
                ready.append(tgt)
    if seen != len(topo.nodes):
        raise ValidationError("network graph must be acyclic")


@dataclass(frozen=True)
class LoadDependentParams:
    """Per-edge failure/repair rates driven by utilization and work in progress."""

    rep_max: float
    rep_min: float
    down: float

    def __post_init__(self):
        if self.rep_max < 0.0 or self.rep_min < 0.0 or self.down < 0.0:
            raise ValidationError("load-dependent rates must be non-negative")
        if self.rep_max < self.rep_min:
            raise ValidationError("repair rate requires rep_max >= rep_min")


@dataclass(frozen=True)
class ClusterParams:
    """Per-edge on/off worker cluster: ``size`` workers, off->on rate ``lam0``, on->off ``lam1``."""

    size: int
    lam0: float
    lam1: float

    def __post_init__(self):
        if self.size < 1:
            raise ValidationError("cluster size must be >= 1")
        if self.lam0 < 0.0 or self.lam1 < 0.0:
            raise ValidationError("cluster rates must be non-negative")

    @classmethod
    def from_mean_times(cls, size: int, mtbf: float, mrt: float) -> "ClusterParams":
        """Build from mean time between failures and mean repair time."""
        if mtbf <= 0.0 or mrt <= 0.0:
            raise ValidationError("MTBF and MRT must be positive")
        return cls(size=size, lam0=1.0 / mrt, lam1=1.0 / mtbf)


LOAD_DEPENDENT = "load_dependent"
CLUSTER_CTMC = "cluster_ctmc"


@dataclass(frozen=True)
class RateModelSpec:
    """Capacity-jump rate model: one variant, parameters per edge (keyed by edge id)."""

    kind: str
    load_params: tuple[tuple[int, LoadDependentParams], ...] = ()
    cluster_params: tuple[tuple[int, ClusterParams], ...] = ()

    def __post_init__(self):
        if self.kind not in (LOAD_DEPENDENT, CLUSTER_CTMC):
            raise ValidationError(f"unknown rate model kind {self.kind!r}")

    def load_for(self, edge_id: int) -> LoadDependentParams:
        for eid, p in self.load_params:
            if eid == edge_id:
                return p
        raise KeyError(f"no load-dependent params for edge {edge_id}")

    def cluster_for(self, edge_id: int) -> ClusterParams:
        for eid, p in self.cluster_params:
            if eid == edge_id:
                return p
        raise KeyError(f"no cluster params for edge {edge_id}")


@dataclass(frozen=True)
class ProfitSpec:
    """Pricing of network outflow against storage and workforce costs.

    ``cluster_sizes`` lists the workers per edge for cluster-capacity runs
    (the workforce cost rate is ``sum(N_e * cluster_cost_e)``); it is empty
    otherwise.
    """

    price: float
    storage_cost: tuple[float, ...]  # per edge, currency / (good * time)
    cluster_cost: tuple[float, ...] = ()  # per edge, currency / (worker * time)
    cluster_sizes: tuple[int, ...] = ()

    def __post_init__(self):
        if self.price < 0.0:
            raise ValidationError("price must be non-negative")
        if any(c < 0.0 for c in self.storage_cost) or any(c < 0.0 for c in self.cluster_cost):
            raise ValidationError("costs must be non-negative")
        if len(self.cluster_sizes) != len(self.cluster_cost):
            raise ValidationError("cluster_sizes must align with cluster_cost")


@dataclass
class SystemState:
    """Mutable simulation state: time, capacity-state indices, queues, densities.

    ``r[i]`` is the 0-based index into ``edges[i].capacity_levels``; for
    cluster models it equals the number of active workers.  ``rho[i]`` holds
    the cell-averaged densities of edge ``i``.
    """

    time: float
    r: np.ndarray
    q: np.ndarray
    rho: list[np.ndarray]

    def copy(self) -> "SystemState":
        return SystemState(
            time=self.time,
            r=self.r.copy(),
            q=self.q.copy(),
            rho=[d.copy() for d in self.rho],
        )

    def total_mass(self, topology: NetworkTopology) -> float:
        """Goods stored in queues plus goods in transit."""
        mass = float(np.sum(self.q))
        for edge, dens in zip(topology.edges, self.rho):
            mass += float(np.sum(dens)) * edge.dx
        return mass


@dataclass(frozen=True)
class RunConfig:
    topology: NetworkTopology
    rate_model: RateModelSpec
    horizon: float
    dt: float
    profit: ProfitSpec
    mc_samples: int
    rng_seed: int
    risk_levels: tuple[float, ...]

    def __post_init__(self):
        _validate_config(self)

    @property
    def num_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def fingerprint(self) -> str:
        return hashlib.sha256(config_to_json(self).encode()).hexdigest()


def _validate_config(cfg: RunConfig) -> None:
    if cfg.horizon <= 0.0:
        raise ValidationError("horizon must be positive")
    if cfg.dt <= 0.0:
        raise ValidationError("dt must be positive")
    n = round(cfg.horizon / cfg.dt)
    if n < 1 or abs(n * cfg.dt - cfg.horizon) > GRID_ALIGN_TOL * max(1.0, cfg.horizon):
        raise ValidationError("horizon must be an integer multiple of dt")
    for edge in cfg.topology.edges:
        cfl = edge.v * cfg.dt / edge.dx
        if cfl > 1.0 + 1e-12:
            raise ValidationError(
                f"CFL condition violated on edge {edge.id}: v*dt/dx = {cfl:.6g} > 1"
            )
    if cfg.mc_samples < 1:
        raise ValidationError("mc samples must be >= 1")
    if not 0 <= cfg.rng_seed < 2**64:
        raise ValidationError("seed must fit in 64 bits")
    for lam in cfg.risk_levels:
        if not 0.0 < lam < 1.0:
            raise ValidationError(f"risk level {lam!r} must lie in (0, 1)")

    n_edges = len(cfg.topology.edges)
    if len(cfg.profit.storage_cost) != n_edges:
        raise ValidationError("profit.storage_cost must list one value per edge")
    if len(cfg.profit.cluster_cost) not in (0, n_edges):
        raise ValidationError("profit.cluster_cost must list one value per edge")
    if cfg.rate_model.kind == LOAD_DEPENDENT:
        if any(c != 0.0 for c in cfg.profit.cluster_cost):
            raise ValidationError("cluster_cost requires the cluster rate model")
    else:
        expected_sizes = tuple(
            cfg.rate_model.cluster_for(e.id).size for e in cfg.topology.edges
        )
        if cfg.profit.cluster_cost and cfg.profit.cluster_sizes != expected_sizes:
            raise ValidationError("profit.cluster_sizes must match the cluster rate model")

    model = cfg.rate_model
    for edge in cfg.topology.edges:
        if model.kind == LOAD_DEPENDENT:
            try:
                model.load_for(edge.id)
            except KeyError:
                raise ValidationError(f"rate model missing edge {edge.id}") from None
            if edge.num_states not in (2, 3):
                raise ValidationError(
                    f"edge {edge.id}: load-dependent model requires 2 or 3 capacity states"
                )
        else:
            try:
                params = model.cluster_for(edge.id)
            except KeyError:
                raise ValidationError(f"rate model missing edge {edge.id}") from None
            expected = tuple(float(j) for j in range(params.size + 1))
            if edge.capacity_levels != expected:
                raise ValidationError(
                    f"edge {edge.id}: cluster model requires capacity levels 0..{params.size}"
                )


# ---------------------------------------------------------------------------
# initial state
# ---------------------------------------------------------------------------


def initial_state(cfg: RunConfig) -> SystemState:
    """Empty system at full capacity: zero queues/densities, top capacity index."""
    edges = cfg.topology.edges
    return SystemState(
        time=0.0,
        r=np.array([e.num_states - 1 for e in edges], dtype=np.int64),
        q=np.zeros(len(edges)),
        rho=[np.zeros(e.num_cells) for e in edges],
    )


# ---------------------------------------------------------------------------
# JSON parsing / serialization
# ---------------------------------------------------------------------------


def _need(obj: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in obj:
        raise ParseError(f"missing field {where}.{key}")
    return obj[key]


def _as_number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"field {where} must be a number")
    return float(value)


def _as_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"field {where} must be an integer")
    return value


def _as_list(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise ParseError(f"field {where} must be an array")
    return value


def _parse_inflow_value(value: Any, where: str) -> InflowTable:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return InflowTable.constant(float(value))
    rows = _as_list(value, where)
    times, vals = [], []
    for i, row in enumerate(rows):
        pair = _as_list(row, f"{where}[{i}]")
        if len(pair) != 2:
            raise ParseError(f"field {where}[{i}] must be a [time, value] pair")
        times.append(_as_number(pair[0], f"{where}[{i}][0]"))
        vals.append(_as_number(pair[1], f"{where}[{i}][1]"))
    return InflowTable(times=tuple(times), values=tuple(vals))


def _parse_rate_model(doc: Mapping[str, Any], edge_ids: Sequence[int]) -> RateModelSpec:
    kind = _need(doc, "type", "rate_model")
    entries = _as_list(_need(doc, "edges", "rate_model"), "rate_model.edges")
    if kind == LOAD_DEPENDENT:
        params = []
        for i, entry in enumerate(entries):
            where = f"rate_model.edges[{i}]"
            eid = _as_int(_need(entry, "edge", where), f"{where}.edge")
            params.append(
                (
                    eid,
                    LoadDependentParams(
                        rep_max=_as_number(_need(entry, "rep_max", where), f"{where}.rep_max"),
                        rep_min=_as_number(_need(entry, "rep_min", where), f"{where}.rep_min"),
                        down=_as_number(_need(entry, "down", where), f"{where}.down"),
                    ),
                )
            )
        return RateModelSpec(kind=LOAD_DEPENDENT, load_params=tuple(params))
    if kind == CLUSTER_CTMC:
        params = []
        for i, entry in enumerate(entries):
            where = f"rate_model.edges[{i}]"
            eid = _as_int(_need(entry, "edge", where), f"{where}.edge")
            size = _as_int(_need(entry, "size", where), f"{where}.size")
            if "mtbf" in entry or "mrt" in entry:
                p = ClusterParams.from_mean_times(
                    size,
                    _as_number(_need(entry, "mtbf", where), f"{where}.mtbf"),
                    _as_number(_need(entry, "mrt", where), f"{where}.mrt"),
                )
            else:
                p = ClusterParams(
                    size=size,
                    lam0=_as_number(_need(entry, "lam0", where), f"{where}.lam0"),
                    lam1=_as_number(_need(entry, "lam1", where), f"{where}.lam1"),
                )
            params.append((eid, p))
        return RateModelSpec(kind=CLUSTER_CTMC, cluster_params=tuple(params))
    raise ParseError(f"rate_model.type must be {LOAD_DEPENDENT!r} or {CLUSTER_CTMC!r}")


def config_from_dict(doc: Mapping[str, Any]) -> RunConfig:
    if not isinstance(doc, Mapping):
        raise ParseError("config document must be a JSON object")

    edges = []
    for i, entry in enumerate(_as_list(_need(doc, "edges", "config"), "edges")):
        where = f"edges[{i}]"
        edges.append(
            EdgeSpec(
                id=_as_int(_need(entry, "id", where), f"{where}.id"),
                a=_as_number(_need(entry, "a", where), f"{where}.a"),
                b=_as_number(_need(entry, "b", where), f"{where}.b"),
                v=_as_number(_need(entry, "v", where), f"{where}.v"),
                capacity_levels=tuple(
                    _as_number(x, f"{where}.capacities[{k}]")
                    for k, x in enumerate(_as_list(_need(entry, "capacities", where), f"{where}.capacities"))
                ),
                num_cells=_as_int(_need(entry, "cells", where), f"{where}.cells"),
            )
        )

    nodes = []
    for i, entry in enumerate(_as_list(_need(doc, "nodes", "config"), "nodes")):
        where = f"nodes[{i}]"
        out_edges = tuple(
            _as_int(x, f"{where}.out[{k}]")
            for k, x in enumerate(_as_list(_need(entry, "out", where), f"{where}.out"))
        )
        if "rates" in entry:
            rates = tuple(
                _as_number(x, f"{where}.rates[{k}]")
                for k, x in enumerate(_as_list(entry["rates"], f"{where}.rates"))
            )
        elif len(out_edges) <= 1:
            rates = (1.0,) * len(out_edges)  # degenerate routing needs no rates
        else:
            raise ParseError(f"missing field {where}.rates")
        nodes.append(
            NodeSpec(
                id=_as_int(_need(entry, "id", where), f"{where}.id"),
                in_edges=tuple(
                    _as_int(x, f"{where}.in[{k}]")
                    for k, x in enumerate(_as_list(_need(entry, "in", where), f"{where}.in"))
                ),
                out_edges=out_edges,
                rates=rates,
            )
        )

    inflows = []
    for i, entry in enumerate(_as_list(doc.get("inflows", []), "inflows")):
        where = f"inflows[{i}]"
        inflows.append(
            (
                _as_int(_need(entry, "node", where), f"{where}.node"),
                _parse_inflow_value(_need(entry, "value", where), f"{where}.value"),
            )
        )

    topology = NetworkTopology(edges=tuple(edges), nodes=tuple(nodes), inflows=tuple(inflows))

    rate_model = _parse_rate_model(_need(doc, "rate_model", "config"), topology.edge_ids)

    profit_doc = _need(doc, "profit", "config")
    storage = tuple(
        _as_number(x, f"profit.storage_cost[{k}]")
        for k, x in enumerate(_as_list(_need(profit_doc, "storage_cost", "profit"), "profit.storage_cost"))
    )
    cluster_cost = tuple(
        _as_number(x, f"profit.cluster_cost[{k}]")
        for k, x in enumerate(_as_list(profit_doc.get("cluster_cost", []), "profit.cluster_cost"))
    )
    sizes: tuple[int, ...] = ()
    if rate_model.kind == CLUSTER_CTMC and cluster_cost:
        sizes = tuple(rate_model.cluster_for(e.id).size for e in topology.edges)
    profit = ProfitSpec(
        price=_as_number(_need(profit_doc, "price", "profit"), "profit.price"),
        storage_cost=storage,
        cluster_cost=cluster_cost,
        cluster_sizes=sizes,
    )

    mc = _need(doc, "mc", "config")
    return RunConfig(
        topology=topology,
        rate_model=rate_model,
        horizon=_as_number(_need(doc, "horizon", "config"), "horizon"),
        dt=_as_number(_need(doc, "dt", "config"), "dt"),
        profit=profit,
        mc_samples=_as_int(_need(mc, "samples", "mc"), "mc.samples"),
        rng_seed=_as_int(_need(mc, "seed", "mc"), "mc.seed"),
        risk_levels=tuple(
            _as_number(x, f"risk_levels[{k}]")
            for k, x in enumerate(_as_list(_need(doc, "risk_levels", "config"), "risk_levels"))
        ),
    )


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: RunConfig) -> dict:
    topo = cfg.topology
    doc: dict[str, Any] = {
        "edges": [
            {
                "id": e.id,
                "a": e.a,
                "b": e.b,
                "v": e.v,
                "capacities": list(e.capacity_levels),
                "cells": e.num_cells,
            }
            for e in topo.edges
        ],
        "nodes": [
            {
                "id": n.id,
                "in": list(n.in_edges),
                "out": list(n.out_edges),
                "rates": list(n.rates),
            }
            for n in topo.nodes
        ],
        "inflows": [
            {
                "node": nid,
                "value": table.values[0]
                if len(table.times) == 1
                else [[t, v] for t, v in zip(table.times, table.values)],
            }
            for nid, table in topo.inflows
        ],
        "horizon": cfg.horizon,
        "dt": cfg.dt,
        "profit": {
            "price": cfg.profit.price,
            "storage_cost": list(cfg.profit.storage_cost),
            "cluster_cost": list(cfg.profit.cluster_cost),
        },
        "mc": {"samples": cfg.mc_samples, "seed": cfg.rng_seed},
        "risk_levels": list(cfg.risk_levels),
    }
    if cfg.rate_model.kind == LOAD_DEPENDENT:
        doc["rate_model"] = {
            "type": LOAD_DEPENDENT,
            "edges": [
                {"edge": eid, "rep_max": p.rep_max, "rep_min": p.rep_min, "down": p.down}
                for eid, p in cfg.rate_model.load_params
            ],
        }
    else:
        doc["rate_model"] = {
            "type": CLUSTER_CTMC,
            "edges": [
                {"edge": eid, "size": p.size, "lam0": p.lam0, "lam1": p.lam1}
                for eid, p in cfg.rate_model.cluster_params
            ],
        }
    return doc


def config_to_json(cfg: RunConfig) -> str:
    """Canonical serialization; parsing it back yields an equal config."""
    return json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# experiment presets
# ---------------------------------------------------------------------------


def diamond_config(
    alpha1: float = 0.5,
    alpha2: float = 0.5,
    samples: int = 1000,
    seed: int = DEFAULT_SEED,
    horizon: float = 10.0,
    dt: float = 0.1,
    risk_levels: Sequence[float] = (0.1,),
) -> RunConfig:
    """Seven-processor diamond with load-dependent capacity drops.

    Flow from processor 1 splits at its end node: fraction ``alpha1`` into
    edge 2 and ``1 - alpha1`` into edge 3.  Flow leaving edge 2 splits
    again: ``alpha2`` into edge 5 and ``1 - alpha2`` into edge 4.  Edges 3,
    4 merge ahead of edge 6; edges 5, 6 merge ahead of edge 7, which exits.
    """
    if not 0.0 <= alpha1 <= 1.0 or not 0.0 <= alpha2 <= 1.0:
        raise ValidationError("distribution parameters must lie in [0, 1]")
    cells = round(1.0 / dt)
    if abs(cells * dt - 1.0) > 1e-9 or cells < 1:
        raise ValidationError("diamond preset requires dt to divide the unit edge length")
    caps = {
        1: (0.0, 3.0),
        2: (0.0, 1.0, 2.0),
        3: (0.0, 1.0, 2.0),
        4: (0.0, 1.0),
        5: (0.0, 2.0),
        6: (0.0, 1.0, 3.0),
        7: (0.0, 2.0, 3.0),
    }
    edges = tuple(
        EdgeSpec(id=eid, a=0.0, b=1.0, v=1.0, capacity_levels=caps[eid], num_cells=cells)
        for eid in range(1, 8)
    )
    nodes = (
        NodeSpec(1, (), (1,), (1.0,)),
        NodeSpec(2, (1,), (2, 3), (alpha1, 1.0 - alpha1)),
        NodeSpec(3, (2,), (4, 5), (1.0 - alpha2, alpha2)),
        NodeSpec(4, (3, 4), (6,), (1.0,)),
        NodeSpec(5, (5, 6), (7,), (1.0,)),
        NodeSpec(6, (7,), (), ()),
    )
    two_state = {1, 4, 5}
    load_params = tuple(
        (
            eid,
            LoadDependentParams(rep_max=10.0, rep_min=4.0, down=1.0 if eid in two_state else 2.0),
        )
        for eid in range(1, 8)
    )
    return RunConfig(
        topology=NetworkTopology(
            edges=edges, nodes=nodes, inflows=((1, InflowTable.constant(1.5)),)
        ),
        rate_model=RateModelSpec(kind=LOAD_DEPENDENT, load_params=load_params),
        horizon=horizon,
        dt=dt,
        profit=ProfitSpec(price=1.0, storage_cost=(0.1,) * 7, cluster_cost=()),
        mc_samples=samples,
        rng_seed=seed,
        risk_levels=tuple(risk_levels),
    )


def serial2_config(
    n1: int = 10,
    n2: int = 12,
    samples: int = 10_000,
    seed: int = DEFAULT_SEED,
    horizon: float = 365.0,
    dt: float = 1.0,
    risk_levels: Sequence[float] = (0.1, 0.01),
) -> RunConfig:
    """Two processors in series with worker-cluster capacities.

    Worker availability follows on/off chains with mean up times 80 and 50
    and mean repair times 10 and 20, so the steady capacities are
    ``n1 * 8/9`` and ``n2 * 5/7``.
    """
    edges = (
        EdgeSpec(1, 0.0, 1.0, 1.0, tuple(float(j) for j in range(n1 + 1)), num_cells=1),
        EdgeSpec(2, 0.0, 1.0, 1.0, tuple(float(j) for j in range(n2 + 1)), num_cells=1),
    )
    nodes = (
        NodeSpec(1, (), (1,), (1.0,)),
        NodeSpec(2, (1,), (2,), (1.0,)),
        NodeSpec(3, (2,), (), ()),
    )
    cluster_params = (
        (1, ClusterParams.from_mean_times(n1, mtbf=80.0, mrt=10.0)),
        (2, ClusterParams.from_mean_times(n2, mtbf=50.0, mrt=20.0)),
    )
    return RunConfig(
        topology=NetworkTopology(
            edges=edges, nodes=nodes, inflows=((1, InflowTable.constant(10.0)),)
        ),
        rate_model=RateModelSpec(kind=CLUSTER_CTMC, cluster_params=cluster_params),
        horizon=horizon,
        dt=dt,
        profit=ProfitSpec(
            price=10.02,
            storage_cost=(0.01, 0.01),
            cluster_cost=(4.0, 6.0),
            cluster_sizes=(n1, n2),
        ),
        mc_samples=samples,
        rng_seed=seed,
        risk_levels=tuple(risk_levels),
    )


PRESETS = {"diamond": diamond_config, "serial2": serial2_config}


def preset_config(name: str, **kwargs) -> RunConfig:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ParseError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
    return builder(**kwargs)
