"""Command-line interface.

Subcommands: ``simulate``, ``measure``, ``plan-alpha``, ``plan-cluster``,
``analyze-ctmc``.  Exit codes: 0 success, 1 validation or usage error,
2 I/O error.  All outputs are deterministic given the seed and flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .ensemble import ensemble_metadata, run_ensemble, samples_from_csv, samples_to_csv
from .measures import report
from .network import (
    ConfigError,
    RunConfig,
    ValidationError,
    parse_config,
    preset_config,
)
from .planner import GridSpec, emit_heatmaps, plan
from .rng import RngStream
from .stochastic import ClusterParams, ctmc_binomial_law, simulate_path, steady_state_mean_capacity

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=("diamond", "serial2"), help="built-in experiment")
    p.add_argument("--config", help="path to a JSON run configuration")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--samples", type=int, help="override the Monte Carlo sample count")
    p.add_argument("--horizon", type=float, help="override the time horizon")
    p.add_argument("--levels", help="override risk levels, comma-separated in (0,1)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")


def _load_config(args) -> RunConfig:
    if args.preset and args.config:
        raise ValidationError("give either --preset or --config, not both")
    if args.preset:
        cfg = preset_config(args.preset)
    elif args.config:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    else:
        raise ValidationError("one of --preset or --config is required")
    updates = {}
    if args.seed is not None:
        updates["rng_seed"] = args.seed
    if args.samples is not None:
        updates["mc_samples"] = args.samples
    if args.horizon is not None:
        updates["horizon"] = args.horizon
    if args.levels is not None:
        updates["risk_levels"] = _parse_levels(args.levels)
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _parse_levels(text: str) -> tuple[float, ...]:
    try:
        levels = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ValidationError(f"cannot parse risk levels {text!r}") from None
    if not levels:
        raise ValidationError("risk levels must not be empty")
    return levels


def _parse_axis(text: str, integral: bool) -> tuple[float, ...]:
    """Axis syntax: comma list ('5,8,10') or inclusive range ('5:15')."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi = text.split(":")
            values = tuple(float(x) for x in range(int(lo), int(hi) + 1))
        else:
            values = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ValidationError(f"cannot parse grid axis {text!r}") from None
    if integral and any(int(x) != x for x in values):
        raise ValidationError(f"grid axis {text!r} must hold integers")
    return values


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = args.out
    if args.ensemble:
        result = run_ensemble(cfg, threads=args.threads)
        _write(os.path.join(out, "samples.csv"), samples_to_csv(result.samples))
        _write(os.path.join(out, "ensemble.json"), _json_dumps(ensemble_metadata(cfg, result)))
        rep = report(result.samples, cfg.risk_levels)
        _write(os.path.join(out, "report.json"), _json_dumps(rep.to_dict()))
        print(_json_dumps(rep.to_dict()), end="")
        return EXIT_OK

    path = simulate_path(cfg, RngStream.for_sample(cfg.rng_seed, 0))
    trace = path.trace
    if args.dump_jumps:
        rows = [
            {"t": j.time, "edge": j.edge_id, "from": j.from_state, "to": j.to_state}
            for j in path.jumps
        ]
        _write(os.path.join(out, "jumps.json"), _json_dumps(rows))
    if args.dump_timeseries:
        ids = trace.edge_ids
        header = (
            "t,"
            + ",".join(f"q_{e}" for e in ids)
            + ","
            + ",".join(f"rho_{e}" for e in ids)
            + ",exit"
        )
        lines = [header]
        exit_flow = trace.exit_flow
        for k in range(trace.num_steps):
            cells = [f"{trace.t[k]:.9g}"]
            cells += [f"{trace.q[k, e]:.9g}" for e in range(len(ids))]
            cells += [f"{trace.rho_mean[k, e]:.9g}" for e in range(len(ids))]
            cells.append(f"{exit_flow[k]:.9g}")
            lines.append(",".join(cells))
        _write(os.path.join(out, "timeseries.csv"), "\n".join(lines) + "\n")
    from .measures import sample_from_trace

    functionals = sample_from_trace(trace, cfg.profit)
    summary = {
        "profit": functionals.profit,
        "outflow": functionals.outflow,
        "queue_load": functionals.queue_load,
        "jumps": len(path.jumps),
        "horizon": cfg.horizon,
    }
    print(_json_dumps(summary), end="")
    return EXIT_OK


def cmd_measure(args) -> int:
    with open(args.samples_csv) as fh:
        text = fh.read()
    try:
        samples = samples_from_csv(text)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    levels = _parse_levels(args.levels)
    rep = report(samples, levels)
    doc = _json_dumps(rep.to_dict())
    if args.out:
        _write(os.path.join(args.out, "report.json"), doc)
    print(doc, end="")
    return EXIT_OK


def _cmd_plan(args, kind: str) -> int:
    if not args.preset and not args.config:
        args.preset = "diamond" if kind == "alpha" else "serial2"
    cfg = _load_config(args)
    if kind == "alpha":
        axis1 = _parse_axis(args.alpha1, integral=False) if args.alpha1 else GridSpec.alpha_default().axis1
        axis2 = _parse_axis(args.alpha2, integral=False) if args.alpha2 else GridSpec.alpha_default().axis2
        grid = GridSpec("alpha", axis1, axis2)
    else:
        axis1 = _parse_axis(args.n1, integral=True) if args.n1 else GridSpec.cluster_default().axis1
        axis2 = _parse_axis(args.n2, integral=True) if args.n2 else GridSpec.cluster_default().axis2
        grid = GridSpec("cluster", axis1, axis2)
    result = plan(
        grid, cfg, seed_policy=args.seed_policy, threads=args.threads
    )
    written = emit_heatmaps(result, args.out)
    print(_json_dumps({"written": sorted(os.path.basename(p) for p in written)}), end="")
    return EXIT_OK


def cmd_plan_alpha(args) -> int:
    return _cmd_plan(args, "alpha")


def cmd_plan_cluster(args) -> int:
    return _cmd_plan(args, "cluster")


def cmd_analyze_ctmc(args) -> int:
    if (args.mtbf is None) != (args.mrt is None):
        raise ValidationError("give both --mtbf and --mrt, or neither")
    if args.mtbf is not None:
        if args.lam0 is not None or args.lam1 is not None:
            raise ValidationError("give either mean times or raw rates, not both")
        params = ClusterParams.from_mean_times(args.size, args.mtbf, args.mrt)
    else:
        if args.lam0 is None or args.lam1 is None:
            raise ValidationError("give both --lam0 and --lam1, or --mtbf/--mrt")
        params = ClusterParams(size=args.size, lam0=args.lam0, lam1=args.lam1)
    times = [float(x) for x in args.times.split(",") if x.strip()]
    doc = {
        "size": params.size,
        "lam0": params.lam0,
        "lam1": params.lam1,
        "steady_state_mean_capacity": steady_state_mean_capacity(
            params.size, params.lam0, params.lam1
        ),
        "distributions": {
            f"{t:g}": list(ctmc_binomial_law(params.size, params.lam0, params.lam1, t))
            for t in times
        },
    }
    text = _json_dumps(doc)
    if args.out:
        _write(os.path.join(args.out, "ctmc.json"), text)
    print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prodnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one path or a Monte Carlo ensemble")
    _add_config_flags(p)
    p.add_argument("--out", default="prodnet-out", help="output directory")
    p.add_argument("--ensemble", action="store_true", help="simulate all samples")
    p.add_argument("--dump-timeseries", action="store_true", help="write timeseries.csv")
    p.add_argument("--dump-jumps", action="store_true", help="write jumps.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("measure", help="recompute measures from samples.csv")
    p.add_argument("--samples-csv", default="samples.csv", help="input sample file")
    p.add_argument("--levels", default="0.1", help="risk levels, comma-separated")
    p.add_argument("--out", help="optional output directory for report.json")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("plan-alpha", help="grid-search the two distribution rates")
    _add_config_flags(p)
    p.add_argument("--out", default="plan-alpha-out", help="output directory")
    p.add_argument("--alpha1", help="first axis values, e.g. '0,0.1,0.2' (default 0..1)")
    p.add_argument("--alpha2", help="second axis values (default 0..1)")
    p.add_argument("--seed-policy", choices=("shared", "independent"), default="shared")
    p.set_defaults(func=cmd_plan_alpha)

    p = sub.add_parser("plan-cluster", help="grid-search the two cluster sizes")
    _add_config_flags(p)
    p.add_argument("--out", default="plan-cluster-out", help="output directory")
    p.add_argument("--n1", help="first axis, e.g. '5:15' or '8,10,12' (default 5:15)")
    p.add_argument("--n2", help="second axis (default 5:15)")
    p.add_argument("--seed-policy", choices=("shared", "independent"), default="shared")
    p.set_defaults(func=cmd_plan_cluster)

    p = sub.add_parser("analyze-ctmc", help="closed-form worker-cluster analytics")
    p.add_argument("--size", type=int, required=True, help="cluster size N")
    p.add_argument("--lam0", type=float, help="off->on rate")
    p.add_argument("--lam1", type=float, help="on->off rate")
    p.add_argument("--mtbf", type=float, help="mean time between failures (gives lam1 = 1/MTBF)")
    p.add_argument("--mrt", type=float, help="mean repair time (gives lam0 = 1/MRT)")
    p.add_argument("--times", default="0,1,10,100", help="evaluation times, comma-separated")
    p.add_argument("--out", help="optional output directory for ctmc.json")
    p.set_defaults(func=cmd_analyze_ctmc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"prodnet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"prodnet: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
