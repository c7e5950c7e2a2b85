"""Stochastic production networks: simulation, risk measures, planning.

The package couples a conservative upwind/forward-Euler network solver
with randomly jumping machine capacities (load-dependent failure rates or
on/off worker clusters), evaluates profit-based performance measures over
Monte Carlo ensembles (mean, spread, bankruptcy probability, value at
risk, average value at risk), and grid-searches routing and workforce
decisions against those measures.
"""

from .ensemble import EnsembleResult, run_ensemble, samples_from_csv, samples_to_csv
from .measures import (
    MeasureReport,
    PathFunctionalSample,
    average_value_at_risk,
    bankruptcy_probability,
    cumulative_outflow,
    cumulative_queue_load,
    empirical_upper_quantile,
    profit,
    report,
    value_at_risk,
)
from .network import (
    CLUSTER_CTMC,
    LOAD_DEPENDENT,
    ClusterParams,
    ConfigError,
    EdgeSpec,
    InflowTable,
    LoadDependentParams,
    NetworkTopology,
    NodeSpec,
    ParseError,
    ProfitSpec,
    RateModelSpec,
    RunConfig,
    SystemState,
    ValidationError,
    config_from_dict,
    config_to_dict,
    config_to_json,
    diamond_config,
    initial_state,
    parse_config,
    preset_config,
    serial2_config,
)
from .planner import GridSpec, PlanResult, emit_heatmaps, plan
from .rng import RngStream
from .solver import FluxTrace, evolve, flux, queue_outflow, step_edge, step_queue
from .stochastic import (
    JumpEvent,
    PathRealization,
    cluster_rates,
    ctmc_binomial_law,
    load_dep_rates,
    psi,
    rwip,
    sample_jump,
    simulate_path,
    steady_state_mean_capacity,
    thinning_bound,
    ur,
)

__version__ = "0.1.0"
