"""Random capacity dynamics: jump rates, thinning sampler, cluster analytics.

Two rate backends drive the capacity-state jumps:

* load-dependent: failure intensities scale with the utilization ratio of
  the processor and repair intensities fall with its work in progress;
* worker clusters: an edge's capacity is the number of active workers out
  of ``N``, each an independent on/off chain, so the aggregate is a birth-
  death chain with up-rate ``(N - j) * lam0`` and down-rate ``j * lam1``
  and a binomial law at every time.

Paths are sampled by thinning: exponential proposals at a global bound on
the total intensity, accepted with probability ``psi / bound``.  Between
grid points the state is frozen, so a proposal is evaluated against (and
the jump applied to) the last completed grid step, while the jump log
keeps the exact proposal time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernel
from .network import (
    CLUSTER_CTMC,
    LOAD_DEPENDENT,
    ClusterParams,
    EdgeSpec,
    LoadDependentParams,
    RateModelSpec,
    RunConfig,
    SystemState,
    initial_state,
)
from .rng import RngStream
from .solver import FluxTrace, trace_from_result


@dataclass(frozen=True)
class JumpEvent:
    """One capacity change: edge ``edge_id`` moved between level indices."""

    time: float
    edge_id: int
    from_state: int
    to_state: int


@dataclass
class PathRealization:
    jumps: list[JumpEvent]
    trace: FluxTrace
    final_state: SystemState
    psi_max: float
    n_proposals: int


# ---------------------------------------------------------------------------
# load statistics and rate functions
# ---------------------------------------------------------------------------


def ur(edge: EdgeSpec, state_index: int, rho: np.ndarray) -> float:
    """Utilization ratio of the edge at capacity-state ``state_index``; in [0, 1]."""
    mu = edge.capacity_levels[state_index]
    used = np.minimum(edge.v * np.asarray(rho), mu).sum() * edge.dx
    return float(used / (edge.max_capacity * edge.length))


def rwip(edge: EdgeSpec, rho: np.ndarray) -> float:
    """Work in progress relative to the maximal content of the edge."""
    return float(edge.v * np.sum(rho) * edge.dx / (edge.max_capacity * edge.length))


def load_dep_rates(
    edge: EdgeSpec, params: LoadDependentParams, state_index: int, rho: np.ndarray
) -> np.ndarray:
    """Jump rates out of ``state_index`` for a 2- or 3-state processor.

    Entry ``l`` of the result is the rate into level index ``l``; unlisted
    transitions are zero (in particular broken -> mid for 3-state edges:
    repairs always restore full capacity).
    """
    c = edge.num_states
    if c not in (2, 3):
        raise ValueError("load-dependent model requires 2 or 3 capacity states")
    rates = np.zeros(c)
    if state_index == 0:
        rep = params.rep_max - (params.rep_max - params.rep_min) * rwip(edge, rho)
        rates[c - 1] = max(rep, 0.0)
    elif c == 2:
        rates[0] = params.down * ur(edge, 1, rho)
    elif state_index == 1:
        rep = params.rep_max - (params.rep_max - params.rep_min) * rwip(edge, rho)
        rates[0] = params.down * ur(edge, 1, rho)
        rates[2] = max(rep, 0.0)
    else:
        failure = params.down * ur(edge, 2, rho)
        rates[0] = failure
        rates[1] = failure
    return rates


def cluster_rates(params: ClusterParams, state_index: int) -> np.ndarray:
    """Birth-death rates of the worker count; independent of load and time."""
    if not 0 <= state_index <= params.size:
        raise ValueError("cluster state index out of range")
    rates = np.zeros(params.size + 1)
    if state_index < params.size:
        rates[state_index + 1] = (params.size - state_index) * params.lam0
    if state_index > 0:
        rates[state_index - 1] = state_index * params.lam1
    return rates


def edge_jump_rates(cfg: RunConfig, state: SystemState, edge_index: int) -> np.ndarray:
    edge = cfg.topology.edges[edge_index]
    model = cfg.rate_model
    if model.kind == CLUSTER_CTMC:
        return cluster_rates(model.cluster_for(edge.id), int(state.r[edge_index]))
    return load_dep_rates(
        edge, model.load_for(edge.id), int(state.r[edge_index]), state.rho[edge_index]
    )


def psi(state: SystemState, cfg: RunConfig) -> float:
    """Total jump intensity: sum of all exit rates from the current capacity states."""
    total = 0.0
    for i in range(len(cfg.topology.edges)):
        total += float(edge_jump_rates(cfg, state, i).sum())
    return total


def sample_jump(state: SystemState, cfg: RunConfig, rng: RngStream) -> JumpEvent:
    """Draw the post-jump target: (edge, level) with probability rate / psi.

    The state itself is not modified; apply the event by assigning
    ``state.r[edge] = to_state``.
    """
    edges = cfg.topology.edges
    all_rates = [edge_jump_rates(cfg, state, i) for i in range(len(edges))]
    total = float(sum(r.sum() for r in all_rates))
    if total <= 0.0:
        raise RuntimeError("sample_jump called with zero total intensity")
    pick = rng.u01() * total
    acc = 0.0
    last = None
    for i, rates in enumerate(all_rates):
        for l, rate in enumerate(rates):
            if rate > 0.0:
                last = (i, l)
                acc += rate
                if pick < acc:
                    return JumpEvent(
                        time=state.time,
                        edge_id=edges[i].id,
                        from_state=int(state.r[i]),
                        to_state=l,
                    )
    i, l = last  # numerical tail: fall back to the final positive-rate entry
    return JumpEvent(state.time, edges[i].id, int(state.r[i]), l)


def thinning_bound(cfg: RunConfig) -> float:
    """Uniform upper bound on psi over every reachable state.

    Load-dependent edges use UR <= RWIP <= 1 (densities never exceed
    mu_max / v under the scheme), which couples the repair and failure
    terms of the middle state; worker clusters are bounded by
    ``N * max(lam0, lam1)``.
    """
    model = cfg.rate_model
    total = 0.0
    for edge in cfg.topology.edges:
        if model.kind == CLUSTER_CTMC:
            p = model.cluster_for(edge.id)
            total += p.size * max(p.lam0, p.lam1)
        else:
            p = model.load_for(edge.id)
            if edge.num_states == 2:
                total += max(p.rep_max, p.down)
            else:
                mid = p.rep_max + max(0.0, p.down - (p.rep_max - p.rep_min))
                total += max(mid, 2.0 * p.down)
    return total


# ---------------------------------------------------------------------------
# path sampling
# ---------------------------------------------------------------------------


def simulate_path_raw(
    cfg: RunConfig,
    stream: RngStream,
    want_trace: bool = True,
    want_jumps: bool = True,
    packed: "_kernel.PackedNetwork | None" = None,
):
    """Kernel-level path simulation; returns (PathResult, final (r, q, rho))."""
    if packed is None:
        packed = _kernel.pack(cfg)
    state = initial_state(cfg)
    r, q, rho = _kernel.state_arrays(state)
    res = _kernel.simulate_segment(
        packed, r, q, rho, stream.state,
        t0=0.0, n_steps=cfg.num_steps, dt=cfg.dt,
        lam_bar=thinning_bound(cfg),
        want_trace=want_trace, want_jumps=want_jumps,
    )
    return packed, res, (r, q, rho)


def simulate_path(cfg: RunConfig, rng: RngStream) -> PathRealization:
    """Simulate one capacity-jump path over [0, horizon].

    Jump times in the log are the accepted proposal times; the capacity
    change takes effect in the flow dynamics at the grid step in which the
    proposal fell.
    """
    packed, res, (r, q, rho) = simulate_path_raw(cfg, rng)
    edge_ids = packed.edge_ids
    jumps = [
        JumpEvent(
            time=float(t), edge_id=edge_ids[int(e)], from_state=int(f), to_state=int(l)
        )
        for t, e, f, l in zip(res.jump_t, res.jump_edge, res.jump_from, res.jump_to)
    ]
    final = _kernel.state_from_arrays(packed, cfg.horizon, r, q, rho)
    return PathRealization(
        jumps=jumps,
        trace=trace_from_result(packed, res, cfg.dt),
        final_state=final,
        psi_max=res.psi_max,
        n_proposals=res.n_proposals,
    )


def state_index_at(initial: int, times: np.ndarray, to_states: np.ndarray, t: float) -> int:
    """Capacity-state index at time ``t`` reconstructed from a jump log."""
    idx = int(np.searchsorted(times, t, side="right"))
    return initial if idx == 0 else int(to_states[idx - 1])


# ---------------------------------------------------------------------------
# worker-cluster analytics
# ---------------------------------------------------------------------------


def on_probability(lam0: float, lam1: float, t: float) -> float:
    """P(single worker active at t | active at 0) for an on/off chain."""
    s = lam0 + lam1
    if s == 0.0:
        return 1.0
    return lam0 / s + (lam1 / s) * math.exp(-s * t)


def ctmc_binomial_law(n: int, lam0: float, lam1: float, t: float) -> np.ndarray:
    """Distribution of the active-worker count at time t, started all-on.

    The sum of n independent on/off chains is binomial at every time:
    Bin(n, p(t)) with p(t) = on_probability(lam0, lam1, t).
    """
    if n < 1:
        raise ValueError("cluster size must be >= 1")
    if t < 0.0:
        raise ValueError("time must be non-negative")
    p = on_probability(lam0, lam1, t)
    return stats.binom.pmf(np.arange(n + 1), n, p)


def cluster_generator(n: int, lam0: float, lam1: float) -> np.ndarray:
    """Tridiagonal generator matrix of the active-worker birth-death chain."""
    gen = np.zeros((n + 1, n + 1))
    for j in range(n + 1):
        up = (n - j) * lam0
        dn = j * lam1
        if j < n:
            gen[j, j + 1] = up
        if j > 0:
            gen[j, j - 1] = dn
        gen[j, j] = -(up + dn)
    return gen


def steady_state_mean_capacity(n: int, lam0: float, lam1: float) -> float:
    """Long-run expected capacity of an n-worker cluster: n * lam0 / (lam0 + lam1)."""
    return n * lam0 / (lam0 + lam1)
