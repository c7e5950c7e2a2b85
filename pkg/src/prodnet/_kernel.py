"""Compiled inner loops shared by the deterministic solver and path sampler.

The network is flattened into plain arrays so the whole path simulation
(upwind density updates, queue balances, capacity-jump thinning) runs as
one numba-compiled loop.  All functions behave identically with the JIT
disabled; randomness comes exclusively from the caller-supplied stream
state, so a path is reproducible from its ``(seed, sample_index)`` pair.

Conventions baked into the kernels:
  * left-endpoint rectangle rule for every time integral;
  * a capacity jump proposed at time ``tau`` is evaluated against, and
    applied to, the state of the last completed grid step ``floor(tau/dt)``
    (the jump log keeps the proposal time);
  * queue discharge ``min(mu, g_in + q/dt)`` so queues cannot undershoot
    zero in discrete time and mass is conserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .network import CLUSTER_CTMC, RunConfig, SystemState
from .rng import next_exponential, next_u01

MODEL_LOAD_DEP = 0
MODEL_CLUSTER = 1


# ---------------------------------------------------------------------------
# packing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PackedNetwork:
    """Array image of a RunConfig, reusable across many path simulations."""

    edge_ids: tuple[int, ...]
    v: np.ndarray
    dx: np.ndarray
    ncells: np.ndarray
    cell_off: np.ndarray
    lev_off: np.ndarray
    levels: np.ndarray
    inflow_idx: np.ndarray
    infl_off: np.ndarray
    infl_times: np.ndarray
    infl_vals: np.ndarray
    a_in: np.ndarray
    up_off: np.ndarray
    up_edges: np.ndarray
    sink_slot: np.ndarray
    sink_nodes: tuple[int, ...]
    model_kind: int
    rep_max: np.ndarray
    rep_min: np.ndarray
    down: np.ndarray
    lam0: np.ndarray
    lam1: np.ndarray
    price: float
    cq: np.ndarray
    cost_const: float

    @property
    def n_edges(self) -> int:
        return len(self.edge_ids)

    @property
    def n_sinks(self) -> int:
        return len(self.sink_nodes)


def pack(cfg: RunConfig) -> PackedNetwork:
    topo = cfg.topology
    edges = topo.edges
    n = len(edges)

    v = np.array([e.v for e in edges])
    dx = np.array([e.dx for e in edges])
    ncells = np.array([e.num_cells for e in edges], dtype=np.int64)
    cell_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(ncells, out=cell_off[1:])
    lev_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum([e.num_states for e in edges], out=lev_off[1:])
    levels = np.concatenate([np.asarray(e.capacity_levels) for e in edges])

    inflow_nodes = [nid for nid, _ in topo.inflows]
    infl_off = np.zeros(len(inflow_nodes) + 1, dtype=np.int64)
    np.cumsum([len(t.times) for _, t in topo.inflows], out=infl_off[1:])
    infl_times = np.array(
        [t for _, tab in topo.inflows for t in tab.times] or [0.0]
    )
    infl_vals = np.array(
        [x for _, tab in topo.inflows for x in tab.values] or [0.0]
    )

    inflow_idx = np.full(n, -1, dtype=np.int64)
    a_in = np.empty(n)
    up_lists: list[list[int]] = []
    for i, e in enumerate(edges):
        start = topo.start_node(e.id)
        a_in[i] = topo.distribution_rate(start, e.id)
        if start in inflow_nodes:
            inflow_idx[i] = inflow_nodes.index(start)
        node = next(nd for nd in topo.nodes if nd.id == start)
        up_lists.append([topo.edge_index(ein) for ein in node.in_edges])
    up_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum([len(u) for u in up_lists], out=up_off[1:])
    up_edges = np.array([u for lst in up_lists for u in lst] or [0], dtype=np.int64)

    sinks = tuple(sorted(topo.sink_nodes))
    sink_slot = np.full(n, -1, dtype=np.int64)
    for i, e in enumerate(edges):
        end = topo.end_node(e.id)
        if end in sinks:
            sink_slot[i] = sinks.index(end)

    if cfg.rate_model.kind == CLUSTER_CTMC:
        model_kind = MODEL_CLUSTER
        lam0 = np.array([cfg.rate_model.cluster_for(e.id).lam0 for e in edges])
        lam1 = np.array([cfg.rate_model.cluster_for(e.id).lam1 for e in edges])
        rep_max = np.zeros(n)
        rep_min = np.zeros(n)
        down = np.zeros(n)
        cost_const = 0.0
        if cfg.profit.cluster_cost:
            cost_const = float(
                np.dot(
                    np.asarray(cfg.profit.cluster_sizes, dtype=np.float64),
                    np.asarray(cfg.profit.cluster_cost),
                )
            )
    else:
        model_kind = MODEL_LOAD_DEP
        rep_max = np.array([cfg.rate_model.load_for(e.id).rep_max for e in edges])
        rep_min = np.array([cfg.rate_model.load_for(e.id).rep_min for e in edges])
        down = np.array([cfg.rate_model.load_for(e.id).down for e in edges])
        lam0 = np.zeros(n)
        lam1 = np.zeros(n)
        cost_const = 0.0  # workforce costs only apply to cluster capacities

    return PackedNetwork(
        edge_ids=topo.edge_ids,
        v=v,
        dx=dx,
        ncells=ncells,
        cell_off=cell_off,
        lev_off=lev_off,
        levels=levels,
        inflow_idx=inflow_idx,
        infl_off=infl_off,
        infl_times=infl_times,
        infl_vals=infl_vals,
        a_in=a_in,
        up_off=up_off,
        up_edges=up_edges,
        sink_slot=sink_slot,
        sink_nodes=sinks,
        model_kind=model_kind,
        rep_max=rep_max,
        rep_min=rep_min,
        down=down,
        lam0=lam0,
        lam1=lam1,
        price=cfg.profit.price,
        cq=np.asarray(cfg.profit.storage_cost, dtype=np.float64),
        cost_const=cost_const,
    )


def state_arrays(state: SystemState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Copy a SystemState into the flat (r, q, rho) arrays the kernels mutate."""
    r = state.r.astype(np.int64, copy=True)
    q = state.q.astype(np.float64, copy=True)
    rho = np.concatenate([d.astype(np.float64) for d in state.rho]) if state.rho else np.zeros(0)
    return r, q, rho


def state_from_arrays(
    packed: PackedNetwork, t: float, r: np.ndarray, q: np.ndarray, rho: np.ndarray
) -> SystemState:
    parts = [
        rho[packed.cell_off[i] : packed.cell_off[i + 1]].copy()
        for i in range(packed.n_edges)
    ]
    return SystemState(time=t, r=r.copy(), q=q.copy(), rho=parts)


def jump_capacity(lam_bar: float, duration: float) -> int:
    # Proposals are Poisson(lam_bar * duration); jumps are a subset.  The
    # runner reports overflow and is re-run with doubled buffers if needed.
    return max(64, int(1.5 * lam_bar * duration) + 64)


# ---------------------------------------------------------------------------
# compiled pieces
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, inline="always")
def _inflow_value(idx, infl_off, infl_times, infl_vals, t):
    lo = infl_off[idx]
    hi = infl_off[idx + 1]
    k = lo
    for j in range(lo + 1, hi):
        if infl_times[j] <= t:
            k = j
        else:
            break
    return infl_vals[k]


@njit(cache=True, nogil=True)
def _compute_rates(
    model_kind,
    rep_max,
    rep_min,
    down,
    lam0,
    lam1,
    v,
    dx,
    cell_off,
    lev_off,
    levels,
    r,
    rho,
    rates,
):
    """Fill the flat (edge, target-level) jump-rate table; return total intensity."""
    n = v.shape[0]
    psi = 0.0
    for e in range(n):
        lo = lev_off[e]
        hi = lev_off[e + 1]
        for l in range(lo, hi):
            rates[l] = 0.0
        re = r[e]
        if model_kind == MODEL_CLUSTER:
            nw = hi - lo - 1  # cluster size; state index == active workers
            if re < nw:
                rates[lo + re + 1] = (nw - re) * lam0[e]
            if re > 0:
                rates[lo + re - 1] = re * lam1[e]
        else:
            c0 = cell_off[e]
            c1 = cell_off[e + 1]
            mu_max = levels[hi - 1]
            length = dx[e] * (c1 - c0)
            norm = mu_max * length
            if re == 0:
                # broken; repair slows down with work in progress
                s = 0.0
                for j in range(c0, c1):
                    s += rho[j]
                rwip = v[e] * s * dx[e] / norm
                rep = rep_max[e] - (rep_max[e] - rep_min[e]) * rwip
                if rep < 0.0:
                    rep = 0.0  # rwip <= 1 for reachable states; guard anyway
                rates[hi - 1] = rep
            else:
                mu_cur = levels[lo + re]
                s = 0.0
                u = 0.0
                for j in range(c0, c1):
                    rj = rho[j]
                    s += rj
                    f = v[e] * rj
                    if f > mu_cur:
                        f = mu_cur
                    u += f
                ur = u * dx[e] / norm
                if hi - lo == 2:
                    rates[lo] = down[e] * ur
                elif re == 1:
                    rwip = v[e] * s * dx[e] / norm
                    rep = rep_max[e] - (rep_max[e] - rep_min[e]) * rwip
                    if rep < 0.0:
                        rep = 0.0
                    rates[lo] = down[e] * ur
                    rates[hi - 1] = rep
                else:
                    rates[lo] = down[e] * ur
                    rates[lo + 1] = down[e] * ur
        for l in range(lo, hi):
            psi += rates[l]
    return psi


@njit(cache=True, nogil=True)
def _det_step(
    v,
    dx,
    cell_off,
    lev_off,
    levels,
    inflow_idx,
    infl_off,
    infl_times,
    infl_vals,
    a_in,
    up_off,
    up_edges,
    sink_slot,
    dt,
    t,
    cq,
    r,
    q,
    rho,
    fout,
    gin,
    gout,
    want_trace,
    k,
    tr_gin,
    tr_gout,
    tr_fout,
    tr_q,
    tr_mu,
    tr_rhobar,
    tr_exit,
):
    """One explicit step from the state at time t.

    Returns (exit flow, sum of queues, storage cost rate), all evaluated at
    the pre-step state for left-endpoint integration.
    """
    n = v.shape[0]
    exit_total = 0.0
    for e in range(n):
        mu = levels[lev_off[e] + r[e]]
        f = v[e] * rho[cell_off[e + 1] - 1]
        if f > mu:
            f = mu
        fout[e] = f
        if sink_slot[e] >= 0:
            exit_total += f
    for e in range(n):
        if inflow_idx[e] >= 0:
            g = _inflow_value(inflow_idx[e], infl_off, infl_times, infl_vals, t)
        else:
            g = 0.0
            for uu in range(up_off[e], up_off[e + 1]):
                g += fout[up_edges[uu]]
        gin[e] = a_in[e] * g
    qsum = 0.0
    storage = 0.0
    for e in range(n):
        mu = levels[lev_off[e] + r[e]]
        cap = gin[e] + q[e] / dt
        gout[e] = mu if cap > mu else cap
        qsum += q[e]
        storage += q[e] * cq[e]
    if want_trace:
        for e in range(n):
            tr_gin[k, e] = gin[e]
            tr_gout[k, e] = gout[e]
            tr_fout[k, e] = fout[e]
            tr_q[k, e] = q[e]
            tr_mu[k, e] = levels[lev_off[e] + r[e]]
            s = 0.0
            for j in range(cell_off[e], cell_off[e + 1]):
                s += rho[j]
            tr_rhobar[k, e] = s / (cell_off[e + 1] - cell_off[e])
            if sink_slot[e] >= 0:
                tr_exit[k, sink_slot[e]] += fout[e]
    # upwind update, faces evaluated on the old cell values
    for e in range(n):
        mu = levels[lev_off[e] + r[e]]
        lam = dt / dx[e]
        fprev = gout[e]
        for j in range(cell_off[e], cell_off[e + 1]):
            f = v[e] * rho[j]
            if f > mu:
                f = mu
            new = rho[j] - lam * (f - fprev)
            rho[j] = new if new > 0.0 else 0.0  # CFL keeps this non-negative; guard roundoff
            fprev = f
    for e in range(n):
        new = q[e] + dt * (gin[e] - gout[e])
        q[e] = new if new > 0.0 else 0.0
    return exit_total, qsum, storage


@njit(cache=True, nogil=True)
def run_path(
    v,
    dx,
    cell_off,
    lev_off,
    levels,
    inflow_idx,
    infl_off,
    infl_times,
    infl_vals,
    a_in,
    up_off,
    up_edges,
    sink_slot,
    model_kind,
    rep_max,
    rep_min,
    down,
    lam0,
    lam1,
    price,
    cq,
    cost_const,
    t0,
    n_steps,
    dt,
    lam_bar,
    r,
    q,
    rho,
    rng,
    want_trace,
    want_jumps,
    tr_gin,
    tr_gout,
    tr_fout,
    tr_q,
    tr_mu,
    tr_rhobar,
    tr_exit,
    jt,
    je,
    jfrom,
    jto,
):
    """Advance (r, q, rho) in place over n_steps grid steps with capacity jumps.

    Returns (outflow, queue_load, profit, psi_max, n_jumps, n_proposals, overflow).
    """
    n = v.shape[0]
    fout = np.empty(n)
    gin = np.empty(n)
    gout = np.empty(n)
    rates = np.zeros(levels.shape[0])

    outflow = 0.0
    queue_load = 0.0
    profit = 0.0
    psi_max = 0.0
    n_jumps = 0
    n_prop = 0

    t_end = t0 + n_steps * dt
    if lam_bar > 0.0:
        t_prop = t0 + next_exponential(rng, lam_bar)
    else:
        t_prop = t_end + dt  # never proposes

    for k in range(n_steps):
        t_k = t0 + k * dt
        t_k1 = t0 + (k + 1) * dt
        if t_prop < t_k1:
            psi = _compute_rates(
                model_kind, rep_max, rep_min, down, lam0, lam1,
                v, dx, cell_off, lev_off, levels, r, rho, rates,
            )
            if psi > psi_max:
                psi_max = psi
            while t_prop < t_k1:
                n_prop += 1
                if next_u01(rng) * lam_bar < psi:
                    pick = next_u01(rng) * psi
                    acc = 0.0
                    sel = -1
                    for idx in range(rates.shape[0]):
                        rate = rates[idx]
                        if rate > 0.0:
                            acc += rate
                            sel = idx
                            if pick < acc:
                                break
                    e_sel = 0
                    while lev_off[e_sel + 1] <= sel:
                        e_sel += 1
                    l_sel = sel - lev_off[e_sel]
                    if want_jumps:
                        if n_jumps >= jt.shape[0]:
                            return (
                                outflow, queue_load, profit, psi_max,
                                n_jumps, n_prop, 1,
                            )
                        jt[n_jumps] = t_prop
                        je[n_jumps] = e_sel
                        jfrom[n_jumps] = r[e_sel]
                        jto[n_jumps] = l_sel
                    n_jumps += 1
                    r[e_sel] = l_sel
                    psi = _compute_rates(
                        model_kind, rep_max, rep_min, down, lam0, lam1,
                        v, dx, cell_off, lev_off, levels, r, rho, rates,
                    )
                    if psi > psi_max:
                        psi_max = psi
                t_prop = t_prop + next_exponential(rng, lam_bar)
        ex, qsum, storage = _det_step(
            v, dx, cell_off, lev_off, levels,
            inflow_idx, infl_off, infl_times, infl_vals, a_in,
            up_off, up_edges, sink_slot,
            dt, t_k, cq, r, q, rho, fout, gin, gout,
            want_trace, k,
            tr_gin, tr_gout, tr_fout, tr_q, tr_mu, tr_rhobar, tr_exit,
        )
        outflow += ex * dt
        queue_load += qsum * dt
        profit += dt * (ex * price - storage - cost_const)
    return outflow, queue_load, profit, psi_max, n_jumps, n_prop, 0


# ---------------------------------------------------------------------------
# python driver
# ---------------------------------------------------------------------------


@dataclass
class PathResult:
    """Raw kernel output for one simulated segment."""

    outflow: float
    queue_load: float
    profit: float
    psi_max: float
    n_proposals: int
    t: np.ndarray | None = None
    g_in: np.ndarray | None = None
    g_out: np.ndarray | None = None
    f_out: np.ndarray | None = None
    q: np.ndarray | None = None
    mu: np.ndarray | None = None
    rho_mean: np.ndarray | None = None
    exit_by_sink: np.ndarray | None = None
    jump_t: np.ndarray | None = None
    jump_edge: np.ndarray | None = None
    jump_from: np.ndarray | None = None
    jump_to: np.ndarray | None = None


_DUMMY2 = np.zeros((1, 1))
_DUMMY1F = np.zeros(1)
_DUMMY1I = np.zeros(1, dtype=np.int64)


def simulate_segment(
    packed: PackedNetwork,
    r: np.ndarray,
    q: np.ndarray,
    rho: np.ndarray,
    rng_state: np.ndarray,
    t0: float,
    n_steps: int,
    dt: float,
    lam_bar: float,
    want_trace: bool = False,
    want_jumps: bool = False,
) -> PathResult:
    """Run the kernel, retrying with larger jump buffers if the log overflows.

    Mutates (r, q, rho) and the rng state in place.
    """
    n_edges = packed.n_edges
    if want_trace:
        tr_gin = np.zeros((n_steps, n_edges))
        tr_gout = np.zeros((n_steps, n_edges))
        tr_fout = np.zeros((n_steps, n_edges))
        tr_q = np.zeros((n_steps, n_edges))
        tr_mu = np.zeros((n_steps, n_edges))
        tr_rhobar = np.zeros((n_steps, n_edges))
        tr_exit = np.zeros((n_steps, max(1, packed.n_sinks)))
    else:
        tr_gin = tr_gout = tr_fout = tr_q = tr_mu = tr_rhobar = tr_exit = _DUMMY2

    cap = jump_capacity(lam_bar, n_steps * dt) if want_jumps else 1
    snap = (r.copy(), q.copy(), rho.copy(), rng_state.copy())
    while True:
        if want_jumps:
            jt = np.zeros(cap)
            je = np.zeros(cap, dtype=np.int64)
            jfrom = np.zeros(cap, dtype=np.int64)
            jto = np.zeros(cap, dtype=np.int64)
        else:
            jt, je, jfrom, jto = _DUMMY1F, _DUMMY1I, _DUMMY1I, _DUMMY1I
        out = run_path(
            packed.v, packed.dx, packed.cell_off, packed.lev_off, packed.levels,
            packed.inflow_idx, packed.infl_off, packed.infl_times, packed.infl_vals,
            packed.a_in, packed.up_off, packed.up_edges, packed.sink_slot,
            packed.model_kind, packed.rep_max, packed.rep_min, packed.down,
            packed.lam0, packed.lam1,
            packed.price, packed.cq, packed.cost_const,
            t0, n_steps, dt, lam_bar,
            r, q, rho, rng_state,
            want_trace, want_jumps,
            tr_gin, tr_gout, tr_fout, tr_q, tr_mu, tr_rhobar, tr_exit,
            jt, je, jfrom, jto,
        )
        outflow, queue_load, profit, psi_max, n_jumps, n_prop, overflow = out
        if not overflow:
            break
        # replay the identical stream with more room
        cap *= 2
        r[:], q[:], rho[:], rng_state[:] = (
            snap[0].copy(), snap[1].copy(), snap[2].copy(), snap[3].copy(),
        )
        if want_trace:
            tr_exit[:] = 0.0

    result = PathResult(
        outflow=float(outflow),
        queue_load=float(queue_load),
        profit=float(profit),
        psi_max=float(psi_max),
        n_proposals=int(n_prop),
    )
    if want_trace:
        result.t = t0 + dt * np.arange(n_steps)
        result.g_in = tr_gin
        result.g_out = tr_gout
        result.f_out = tr_fout
        result.q = tr_q
        result.mu = tr_mu
        result.rho_mean = tr_rhobar
        result.exit_by_sink = tr_exit
    if want_jumps:
        result.jump_t = jt[:n_jumps].copy()
        result.jump_edge = je[:n_jumps].copy()
        result.jump_from = jfrom[:n_jumps].copy()
        result.jump_to = jto[:n_jumps].copy()
    return result
