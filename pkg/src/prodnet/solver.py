"""Deterministic network flow between capacity jumps.

Each edge carries a transport equation with flux ``min(v * rho, mu)``
discretized by a left-sided upwind scheme, coupled to a forward-Euler
queue balance at its entrance.  The queue discharges

    g_out = min(mu, g_in + q / dt)

which realizes both branches of the continuous outflow rule (empty queue:
``min(g_in, mu)``; loaded queue: ``mu``) while conserving mass exactly in
discrete time.  The boundary face of the density update is fed the
discharge directly in flow units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernel
from .network import RunConfig, SystemState


@dataclass
class FluxTrace:
    """Per-step flow record over a simulated interval.

    All rows are left-endpoint samples: row ``k`` holds the flows computed
    from the state at ``t[k]``, in effect on ``[t[k], t[k] + dt)``.
    """

    t: np.ndarray  # [K]
    dt: float
    edge_ids: tuple[int, ...]
    g_in: np.ndarray  # [K, E] inflow into each queue
    g_out: np.ndarray  # [K, E] queue discharge into each processor
    f_out: np.ndarray  # [K, E] processor boundary outflow min(v rho(b), mu)
    q: np.ndarray  # [K, E] queue lengths
    mu: np.ndarray  # [K, E] active capacity level
    rho_mean: np.ndarray  # [K, E] mean density per edge
    exit_by_sink: np.ndarray  # [K, S] flow leaving the network per sink node
    sink_nodes: tuple[int, ...]

    @property
    def num_steps(self) -> int:
        return len(self.t)

    @property
    def exit_flow(self) -> np.ndarray:
        """Total flow leaving the network at each step."""
        return self.exit_by_sink.sum(axis=1)

    @property
    def end_time(self) -> float:
        return float(self.t[-1] + self.dt) if len(self.t) else float("nan")


def flux(rho_cell: float, v: float, mu: float) -> float:
    """Transport flux ``min(v * rho, mu)`` of a single cell value."""
    return min(v * rho_cell, mu)


def queue_outflow(g_in: float, q: float, mu: float, dt: float) -> float:
    """Discharge of a queue with inflow g_in and backlog q over one step."""
    return min(mu, g_in + q / dt)


def step_edge(rho: np.ndarray, v: float, mu: float, g_out: float, dt: float, dx: float) -> np.ndarray:
    """One upwind update of an edge's cell densities.

    ``g_out`` enters at the left boundary as a flow; interior faces use the
    upstream cell's flux.  Requires v*dt/dx <= 1.
    """
    rho = np.asarray(rho, dtype=np.float64)
    faces = np.minimum(v * rho, mu)
    upstream = np.concatenate(([g_out], faces[:-1]))
    out = rho - (dt / dx) * (faces - upstream)
    return np.maximum(out, 0.0)


def step_queue(q: float, g_in: float, g_out: float, dt: float) -> float:
    """Forward-Euler queue balance; non-negative when g_out came from queue_outflow."""
    return max(q + dt * (g_in - g_out), 0.0)


def evolve(state: SystemState, cfg: RunConfig, until: float) -> tuple[SystemState, FluxTrace]:
    """Advance the system deterministically (capacity states held fixed).

    ``until`` must lie on the time grid anchored at ``state.time``.
    """
    if until < state.time - 1e-12:
        raise ValueError("cannot evolve backwards")
    span = until - state.time
    n_steps = int(round(span / cfg.dt))
    if abs(n_steps * cfg.dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError("evolution interval must be an integer multiple of dt")

    packed = _kernel.pack(cfg)
    r, q, rho = _kernel.state_arrays(state)
    rng = np.zeros(4, dtype=np.uint64)  # unused: no jumps are proposed
    res = _kernel.simulate_segment(
        packed, r, q, rho, rng,
        t0=state.time, n_steps=n_steps, dt=cfg.dt, lam_bar=0.0,
        want_trace=True,
    )
    new_state = _kernel.state_from_arrays(packed, state.time + n_steps * cfg.dt, r, q, rho)
    trace = trace_from_result(packed, res, cfg.dt)
    return new_state, trace


def trace_from_result(packed: "_kernel.PackedNetwork", res: "_kernel.PathResult", dt: float) -> FluxTrace:
    return FluxTrace(
        t=res.t,
        dt=dt,
        edge_ids=packed.edge_ids,
        g_in=res.g_in,
        g_out=res.g_out,
        f_out=res.f_out,
        q=res.q,
        mu=res.mu,
        rho_mean=res.rho_mean,
        exit_by_sink=res.exit_by_sink,
        sink_nodes=packed.sink_nodes,
    )
