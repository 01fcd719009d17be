"""Dual bounds for two-tier maintenance/production scheduling under demand
scenarios: instance model, exact reductions, relaxation builders, internal
LP/B&B solver and an exhaustive verification oracle."""

from .instance import Instance, generate_synthetic, parse_instance, validate_instance, write_instance
from .preprocess import compute_lmin, raw_windows, tighten_time_windows
from .formulations import RelaxationConfig, build_model, build_v0, build_v3, build_v3_k0
from .transforms import ScenarioPartition, aggregate_time_steps, check_weekly_cost_hypothesis, partition_scenarios
from .bnb import SolveResult, solve_lp, solve_mip
from .oracle import oracle_optimum, oracle_search
from .bounds import BoundEntry, BoundLedger, combine_bounds

__version__ = "0.1.0"
