"""Grid-search planning over routing rates and workforce sizes.

Every grid point is evaluated with a full Monte Carlo ensemble and scored
by each performance measure; the sample mean is maximized while spread,
bankruptcy probability, and both risk measures are minimized.  With the
default shared-seed policy all points reuse the same per-sample streams
(common random numbers), which smooths the heatmaps and makes replanning
bitwise reproducible.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensemble import run_ensemble
from .measures import MeasureReport, report
from .network import (
    CLUSTER_CTMC,
    ClusterParams,
    EdgeSpec,
    NodeSpec,
    ProfitSpec,
    RateModelSpec,
    RunConfig,
    ValidationError,
)
from .rng import derive_seed

ALPHA_PAIR = "alpha"
CLUSTER_PAIR = "cluster"

DEFAULT_ALPHA_AXIS = tuple(round(0.1 * k, 1) for k in range(11))
DEFAULT_CLUSTER_AXIS = tuple(range(5, 16))

#: measures where smaller is better; the mean is maximized instead
_MINIMIZED = ("std", "bankruptcy", "var", "avar")


@dataclass(frozen=True)
class GridSpec:
    kind: str  # ALPHA_PAIR or CLUSTER_PAIR
    axis1: tuple[float, ...]
    axis2: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in (ALPHA_PAIR, CLUSTER_PAIR):
            raise ValidationError(f"unknown grid kind {self.kind!r}")
        if not self.axis1 or not self.axis2:
            raise ValidationError("grid axes must be non-empty")
        if self.kind == ALPHA_PAIR:
            if any(not 0.0 <= a <= 1.0 for a in self.axis1 + self.axis2):
                raise ValidationError("distribution rates must lie in [0, 1]")
        else:
            if any(n < 1 or int(n) != n for n in self.axis1 + self.axis2):
                raise ValidationError("cluster sizes must be positive integers")

    @classmethod
    def alpha_default(cls) -> "GridSpec":
        return cls(ALPHA_PAIR, DEFAULT_ALPHA_AXIS, DEFAULT_ALPHA_AXIS)

    @classmethod
    def cluster_default(cls) -> "GridSpec":
        return cls(CLUSTER_PAIR, DEFAULT_CLUSTER_AXIS, DEFAULT_CLUSTER_AXIS)


@dataclass
class PlanResult:
    grid: GridSpec
    seed_policy: str
    reports: list[list[MeasureReport]]  # [i][j] over axis1 x axis2
    heatmaps: dict[str, np.ndarray]
    best: dict[str, tuple[tuple[float, float], float]]


def _with_alphas(cfg: RunConfig, alpha1: float, alpha2: float) -> RunConfig:
    """Reroute the two branching nodes of a diamond-shaped topology."""
    branch = [n for n in cfg.topology.nodes if len(n.out_edges) == 2]
    if len(branch) != 2:
        raise ValidationError("alpha grid requires a topology with exactly two branch nodes")
    first, second = sorted(branch, key=lambda n: n.id)
    nodes = []
    for node in cfg.topology.nodes:
        if node.id == first.id:
            # lower edge id receives alpha1
            nodes.append(dataclasses.replace(node, rates=(alpha1, 1.0 - alpha1)))
        elif node.id == second.id:
            # higher edge id receives alpha2
            nodes.append(dataclasses.replace(node, rates=(1.0 - alpha2, alpha2)))
        else:
            nodes.append(node)
    topo = dataclasses.replace(cfg.topology, nodes=tuple(nodes))
    return dataclasses.replace(cfg, topology=topo)


def _with_cluster_sizes(cfg: RunConfig, n1: int, n2: int) -> RunConfig:
    """Resize the two worker clusters of a serial cluster-capacity chain."""
    if cfg.rate_model.kind != CLUSTER_CTMC or len(cfg.topology.edges) != 2:
        raise ValidationError("cluster grid requires a two-edge cluster-capacity config")
    sizes = (int(n1), int(n2))
    edges = tuple(
        dataclasses.replace(
            e, capacity_levels=tuple(float(j) for j in range(n + 1))
        )
        for e, n in zip(cfg.topology.edges, sizes)
    )
    params = tuple(
        (e.id, ClusterParams(size=n, lam0=cfg.rate_model.cluster_for(e.id).lam0,
                             lam1=cfg.rate_model.cluster_for(e.id).lam1))
        for e, n in zip(cfg.topology.edges, sizes)
    )
    topo = dataclasses.replace(cfg.topology, edges=edges)
    profit = dataclasses.replace(cfg.profit, cluster_sizes=sizes)
    return dataclasses.replace(
        cfg,
        topology=topo,
        rate_model=RateModelSpec(kind=CLUSTER_CTMC, cluster_params=params),
        profit=profit,
    )


def point_config(
    grid: GridSpec, base: RunConfig, v1: float, v2: float
) -> RunConfig:
    if grid.kind == ALPHA_PAIR:
        return _with_alphas(base, v1, v2)
    return _with_cluster_sizes(base, int(v1), int(v2))


def _measure_names(levels: Sequence[float]) -> list[str]:
    names = ["mean", "std", "bankruptcy"]
    for lam in levels:
        names.append(f"var_{lam:g}")
        names.append(f"avar_{lam:g}")
    return names


def _extract(rep: MeasureReport, name: str, levels: Sequence[float]) -> float:
    if name == "mean":
        return rep.profit_mean
    if name == "std":
        return rep.profit_std if rep.profit_std is not None else float("nan")
    if name == "bankruptcy":
        return rep.bankruptcy_prob
    for lam in levels:
        if name == f"var_{lam:g}":
            return rep.var_at(lam)
        if name == f"avar_{lam:g}":
            return rep.avar_at(lam)
    raise KeyError(name)


def plan(
    grid: GridSpec,
    base: RunConfig,
    samples: int | None = None,
    seed_policy: str = "shared",
    threads: int = 1,
) -> PlanResult:
    """Evaluate every grid point and locate the best choice per measure.

    ``seed_policy="shared"`` applies common random numbers across points;
    ``"independent"`` derives a fresh seed per point.  Ties break toward
    the lexicographically smallest grid coordinates.
    """
    if seed_policy not in ("shared", "independent"):
        raise ValidationError(f"unknown seed policy {seed_policy!r}")
    if samples is not None:
        base = dataclasses.replace(base, mc_samples=int(samples))

    levels = base.risk_levels
    names = _measure_names(levels)
    n1, n2 = len(grid.axis1), len(grid.axis2)
    reports: list[list[MeasureReport]] = []
    heat = {name: np.full((n1, n2), np.nan) for name in names}

    for i, v1 in enumerate(grid.axis1):
        row = []
        for j, v2 in enumerate(grid.axis2):
            cfg = point_config(grid, base, v1, v2)
            if seed_policy == "independent":
                cfg = dataclasses.replace(
                    cfg, rng_seed=derive_seed(base.rng_seed, i * n2 + j)
                )
            ens = run_ensemble(cfg, threads=threads)
            rep = report(ens.samples, levels)
            row.append(rep)
            for name in names:
                heat[name][i, j] = _extract(rep, name, levels)
        reports.append(row)

    best: dict[str, tuple[tuple[float, float], float]] = {}
    for name in names:
        matrix = heat[name]
        flat = np.argmax(matrix) if name == "mean" else np.argmin(matrix)
        i, j = np.unravel_index(flat, matrix.shape)  # row-major: lexicographic tie-break
        best[name] = ((grid.axis1[i], grid.axis2[j]), float(matrix[i, j]))

    return PlanResult(
        grid=grid, seed_policy=seed_policy, reports=reports, heatmaps=heat, best=best
    )


def emit_heatmaps(result: PlanResult, out_dir: str) -> list[str]:
    """Write one CSV matrix per measure plus a JSON summary of best points.

    Matrix rows follow the first grid axis, columns the second.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, matrix in result.heatmaps.items():
        path = os.path.join(out_dir, f"{name}.csv")
        with open(path, "w") as fh:
            for row in matrix:
                fh.write(",".join(f"{x:.9g}" for x in row) + "\n")
        written.append(path)
    summary = {
        "grid": {
            "kind": result.grid.kind,
            "axis1": list(result.grid.axis1),
            "axis2": list(result.grid.axis2),
        },
        "seed_policy": result.seed_policy,
        "best": {
            name: {"point": list(point), "value": value}
            for name, (point, value) in result.best.items()
        },
    }
    path = os.path.join(out_dir, "best.json")
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written
