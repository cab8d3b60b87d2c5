"""detbal: detailed-balance testing of return time series.

Bins the consecutive-return transitions of a scalar series, builds the
balance action over candidate stationary distributions, and minimizes it
with multi-start simulated annealing. Exact-balance and random controls
calibrate the resulting signal.
"""

__version__ = "0.1.0"

from .action import ActionCache, ActionValue, StaleCacheError, action_delta, \
    balance_residuals, fixed_point_residual
from .anneal import AnnealAggregate, AnnealConfig, AnnealResult, \
    AnnealSchedule, anneal_multi, anneal_one, make_schedule, random_start, sweep
from .controls import FIXTURE_NAMES, base_fixture, metropolis_transition, \
    simulate_chain, uniform_random_transition
from .errors import DegenerateActionError, InputError
from .grid import BinGrid, ColumnNormalized, TransitionMatrix, bin_index, \
    build_transitions, column_normalize, marginal_histogram
from .series import PriceSeries, ReturnsSeries, compute_returns, \
    parse_price_csv, reconstruct_prices

__all__ = [
    "__version__",
    "ActionCache", "ActionValue", "StaleCacheError", "action_delta",
    "balance_residuals", "fixed_point_residual",
    "AnnealAggregate", "AnnealConfig", "AnnealResult", "AnnealSchedule",
    "anneal_multi", "anneal_one", "make_schedule", "random_start", "sweep",
    "FIXTURE_NAMES", "base_fixture", "metropolis_transition",
    "simulate_chain", "uniform_random_transition",
    "DegenerateActionError", "InputError",
    "BinGrid", "ColumnNormalized", "TransitionMatrix", "bin_index",
    "build_transitions", "column_normalize", "marginal_histogram",
    "PriceSeries", "ReturnsSeries", "compute_returns", "parse_price_csv",
    "reconstruct_prices",
]
