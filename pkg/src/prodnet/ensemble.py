"""Monte Carlo ensembles of path functionals.

Sample ``i`` always consumes the stream derived from ``(seed, i)``, so the
resulting list is identical whether samples are computed serially, in any
order, or on any number of threads.  The kernels release the GIL, so plain
threads give real parallelism.
"""

from __future__ import annotations

import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernel
from .measures import PathFunctionalSample
from .network import RunConfig, initial_state
from .rng import RngStream
from .stochastic import thinning_bound


@dataclass
class EnsembleResult:
    samples: list[PathFunctionalSample]
    fingerprint: str  # hash of the generating config
    wall_time: float  # informational only; never serialized


def _run_one(
    packed: "_kernel.PackedNetwork", cfg: RunConfig, lam_bar: float, index: int
) -> PathFunctionalSample:
    stream = RngStream.for_sample(cfg.rng_seed, index)
    state = initial_state(cfg)
    r, q, rho = _kernel.state_arrays(state)
    res = _kernel.simulate_segment(
        packed, r, q, rho, stream.state,
        t0=0.0, n_steps=cfg.num_steps, dt=cfg.dt, lam_bar=lam_bar,
    )
    return PathFunctionalSample(
        profit=res.profit, outflow=res.outflow, queue_load=res.queue_load
    )


def run_ensemble(cfg: RunConfig, threads: int = 1) -> EnsembleResult:
    """Simulate ``cfg.mc_samples`` independent paths and collect functionals."""
    started = time.perf_counter()
    packed = _kernel.pack(cfg)
    lam_bar = thinning_bound(cfg)
    m = cfg.mc_samples
    results: list[PathFunctionalSample | None] = [None] * m

    if threads <= 1:
        for i in range(m):
            results[i] = _run_one(packed, cfg, lam_bar, i)
    else:
        def worker(lo: int, hi: int) -> None:
            for i in range(lo, hi):
                results[i] = _run_one(packed, cfg, lam_bar, i)

        chunk = -(-m // threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(worker, lo, min(lo + chunk, m)) for lo in range(0, m, chunk)
            ]
            for f in futures:
                f.result()

    return EnsembleResult(
        samples=results,  # type: ignore[arg-type]
        fingerprint=cfg.fingerprint(),
        wall_time=time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

SAMPLES_HEADER = "idx,profit,outflow,queue_load"


def samples_to_csv(samples: Sequence[PathFunctionalSample]) -> str:
    """One row per sample at 9 significant digits, stable across runs."""
    lines = [SAMPLES_HEADER]
    for i, s in enumerate(samples):
        lines.append(f"{i},{s.profit:.9g},{s.outflow:.9g},{s.queue_load:.9g}")
    return "\n".join(lines) + "\n"


def samples_from_csv(text: str) -> list[PathFunctionalSample]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != SAMPLES_HEADER:
        raise ValueError(f"samples CSV must start with header {SAMPLES_HEADER!r}")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 4:
            raise ValueError(f"malformed samples row: {ln!r}")
        try:
            out.append(
                PathFunctionalSample(
                    profit=float(parts[1]), outflow=float(parts[2]), queue_load=float(parts[3])
                )
            )
        except ValueError as exc:
            raise ValueError(f"malformed samples row: {ln!r}") from exc
    if not out:
        raise ValueError("samples CSV holds no rows")
    return out


def ensemble_metadata(cfg: RunConfig, result: EnsembleResult) -> dict:
    """Reproducibility metadata; deliberately excludes timing."""
    return {
        "fingerprint": result.fingerprint,
        "samples": cfg.mc_samples,
        "seed": cfg.rng_seed,
        "horizon": cfg.horizon,
        "dt": cfg.dt,
        "risk_levels": list(cfg.risk_levels),
    }
