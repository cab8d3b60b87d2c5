"""End-to-end pipeline: ingest or synthesize a series, bin transitions,
minimize the balance action from many starts, and emit plot-ready artifacts.

Examples
--------
Analyze a price CSV with the default desk profile::

    detbal --input prices.csv --out results/

Calibration controls (exact balance, and no balance at all)::

    detbal --control metropolis --base fat_tail --out ctrl-balance/
    detbal --control random --seed 7 --out ctrl-random/

Write a synthetic price file from a simulated balanced chain, then analyze::

    detbal --simulate fat_tail --length 1000000 --seed 1 --out sim/
    detbal --input sim/synthetic_fat_tail.csv --out sim-analysis/

Every analysis writes TSV artifacts with ``#``-prefixed metadata headers
(transition matrix, marginal histogram, per-chain annealing histories for
both the raw and the column-normalized matrix, aggregated final weights,
balance residuals, summary.txt) plus rendered PNG figures unless
``--no-figures`` is given. Exit codes: 0 success, 2 unusable input,
3 degenerate run (no bin pair carries mass).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .action import action, balance_residuals
from .anneal import AnnealConfig, AnnealSchedule, anneal_multi
from .controls import FIXTURE_NAMES, base_fixture, metropolis_transition, \
    simulate_chain, uniform_random_transition
from .errors import DegenerateActionError, InputError
from .grid import BinGrid, column_normalize, build_transitions, \
    marginal_histogram
from .series import compute_returns, parse_price_csv, reconstruct_prices

__all__ = ["Profile", "PROFILES", "RunConfig", "run_analyze", "run_simulate", "main"]


@dataclass(frozen=True)
class Profile:
    """Bundle of schedule/effort defaults selectable with --profile."""

    steps: int
    sweeps: int
    starts: int
    beta_start: float
    beta_end: float
    epsilon: float
    bins: int
    lower: float
    upper: float


# The full-scale profile anneals to beta = 1e10; the desk profile trades
# steps and sweeps for a deeper terminal beta, which freezes the chain into
# pure descent and reliably lands exact-balance controls below 1e-12
# (at beta_end = 1e10 the chain stays equilibrated and stalls near
# (bins - 1) / (2 * beta_end), three orders above that).
PROFILES = {
    "paper": Profile(steps=800, sweeps=1600, starts=48, beta_start=1e-2,
                     beta_end=1e10, epsilon=0.001, bins=25,
                     lower=-0.02, upper=0.02),
    "desk": Profile(steps=200, sweeps=400, starts=8, beta_start=1e-2,
                    beta_end=1e16, epsilon=0.001, bins=25,
                    lower=-0.02, upper=0.02),
}

# spawn_key variant prefixes for chain seed derivation (see anneal module)
VARIANT_RAW = 0
VARIANT_NORMALIZED = 1
VARIANT_RANDOM_MATRIX = 2


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters; exactly one input mode is set."""

    mode: str  # "input" | "metropolis" | "random" | "simulate"
    out_dir: Path
    grid: BinGrid
    schedule: AnnealSchedule
    anneal: AnnealConfig
    input_path: Path | None = None
    column: int | str = 0
    fixture: str = "fat_tail"
    jobs: int = 1
    profile: str = "desk"
    figures: bool = True
    length: int = 1_000_000
    origin: float = 1000.0


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _meta_lines(pairs) -> list[str]:
    return [f"# {key} = {_fmt(value)}" for key, value in pairs]


def _common_meta(config: RunConfig) -> list[tuple]:
    grid, schedule, cfg = config.grid, config.schedule, config.anneal
    return [
        ("generator", f"detbal {__version__}"),
        ("mode", config.mode),
        ("profile", config.profile),
        ("grid_lower", grid.lower),
        ("grid_upper", grid.upper),
        ("grid_bins", grid.bins),
        ("grid_width", grid.width),
        ("binning", "half-open [lower + k*width, lower + (k+1)*width); upper edge exclusive"),
        ("beta_start", schedule.beta_start),
        ("beta_end", schedule.beta_end),
        ("schedule_steps", schedule.steps),
        ("schedule_rate", schedule.rate),
        ("sweeps_per_temperature", cfg.sweeps),
        ("epsilon", cfg.epsilon),
        ("starts", cfg.starts),
        ("master_seed", cfg.seed),
        ("rng", "PCG64; chain k seeded by SeedSequence(master_seed, spawn_key=(variant, k))"),
    ]


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n")


def _write_matrix_tsv(path: Path, values: np.ndarray, grid: BinGrid,
                      meta: list[tuple]) -> None:
    lines = _meta_lines(meta)
    lines.append("# rows: destination bin x; columns: source bin y; header: bin centers")
    lines.append("\t".join(_fmt(c) for c in grid.centers()))
    for row in values:
        lines.append("\t".join(_fmt(v) for v in row))
    _write_lines(path, lines)


def _write_columns_tsv(path: Path, header: list[str], columns: list[np.ndarray],
                       meta: list[tuple]) -> None:
    lines = _meta_lines(meta)
    lines.append("\t".join(header))
    for row in zip(*columns):
        lines.append("\t".join(_fmt(v) for v in row))
    _write_lines(path, lines)


def _log_strings(s: float) -> tuple[str, str]:
    if s > 0:
        return repr(math.log(s)), repr(math.log10(s))
    return "-inf", "-inf"


def run_simulate(config: RunConfig) -> Path:
    """Write a synthetic price CSV (plus a JSON metadata sidecar) from a
    simulated balanced chain over the named base fixture."""
    base = base_fixture(config.fixture, config.grid)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.anneal.seed)))
    chain = simulate_chain(base, config.grid, config.length, rng)
    prices = reconstruct_prices(chain, config.origin)

    config.out_dir.mkdir(parents=True, exist_ok=True)
    path = config.out_dir / f"synthetic_{config.fixture}.csv"
    lines = ["price"]
    lines.extend(repr(float(q)) for q in prices.quotes)
    _write_lines(path, lines)

    sidecar = {
        "fixture": config.fixture,
        "length": config.length,
        "origin_price": config.origin,
        "seed": config.anneal.seed,
        "rng": "PCG64(SeedSequence(seed)); draws: start bin, proposals, acceptance uniforms",
        "grid": {"lower": config.grid.lower, "upper": config.grid.upper,
                 "bins": config.grid.bins},
        "generator": f"detbal {__version__}",
    }
    (path.with_suffix(".meta.json")).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def _resolve_matrix(config: RunConfig):
    """Build the transition matrix for the selected mode.

    Returns (matrix, marginal or None, prices or None, returns or None,
    dropped pair count, source description).
    """
    if config.mode == "input":
        path = config.input_path
        if not path.is_file():
            raise InputError(f"input file not found: {path}")
        with open(path, newline="") as handle:
            prices = parse_price_csv(handle, config.column)
        returns = compute_returns(prices)
        matrix, dropped = build_transitions(returns, config.grid)
        if matrix.values.sum() == 0:
            raise InputError("no transition events inside the grid range")
        marginal = marginal_histogram(returns, config.grid)
        return matrix, marginal, prices, returns, dropped, str(path)
    if config.mode == "metropolis":
        base = base_fixture(config.fixture, config.grid)
        return metropolis_transition(base), base, None, None, 0, \
            f"metropolis control (base fixture {config.fixture!r})"
    if config.mode == "random":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(
            entropy=config.anneal.seed, spawn_key=(VARIANT_RANDOM_MATRIX,))))
        return uniform_random_transition(config.grid.bins, rng), None, None, None, 0, \
            "uniform random control"
    raise ValueError(f"unknown mode {config.mode!r}")


def run_analyze(config: RunConfig) -> dict:
    """Run the full analysis pipeline and write all artifacts.

    Both the raw matrix and its column-normalized form are minimized
    independently (their action values agree; the recovered weight vectors
    answer different normalization conventions). Nothing is written until
    the computation has finished, so failed runs leave no partial output.
    """
    matrix, marginal, prices, returns, dropped, source = _resolve_matrix(config)

    probe = action(matrix, np.ones(config.grid.bins))
    if probe.k_terms == 0:
        raise DegenerateActionError(
            "no contributing bin pairs (K = 0): balance holds trivially, "
            "nothing to minimize"
        )

    normalized, column_sums, empty_columns = column_normalize(matrix)
    results_raw, agg_raw = anneal_multi(
        matrix, config.schedule, config.anneal, jobs=config.jobs,
        seed_prefix=(VARIANT_RAW,))
    results_norm, agg_norm = anneal_multi(
        normalized, config.schedule, config.anneal, jobs=config.jobs,
        seed_prefix=(VARIANT_NORMALIZED,))
    best_raw = results_raw[agg_raw.best_chain]
    residuals = balance_residuals(matrix, best_raw.weights)

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    meta = _common_meta(config)
    meta.append(("source", source))
    grid = config.grid
    written = []

    def emit(name, writer, *args):
        path = out / name
        writer(path, *args)
        written.append(path)

    emit("transition_counts.tsv", _write_matrix_tsv, matrix.values, grid,
         meta + [("kind", matrix.kind), ("dropped_pairs", dropped)])
    if marginal is not None:
        emit("marginal_hist.tsv", _write_columns_tsv,
             ["bin_center", "weight"], [grid.centers(), marginal], meta)
    for label, results in (("raw", results_raw), ("norm", results_norm)):
        variant = VARIANT_RAW if label == "raw" else VARIANT_NORMALIZED
        for k, result in enumerate(results):
            emit(f"anneal_history_{label}_{k}.tsv", _write_columns_tsv,
                 ["j", "beta", "S"],
                 [np.arange(result.history.shape[0]), result.history[:, 0],
                  result.history[:, 1]],
                 meta + [("variant", label), ("chain", k),
                         ("chain_seed", f"SeedSequence({config.anneal.seed}, spawn_key=({variant}, {k}))"),
                         ("final_S", result.final.s)])
    for label, agg in (("raw", agg_raw), ("norm", agg_norm)):
        emit(f"final_w_{label}.tsv", _write_columns_tsv,
             ["bin_center", "mean_weight", "stderr_weight"],
             [grid.centers(), agg.mean_weights, agg.stderr_weights],
             meta + [("variant", label),
                     ("stderr_definition", "standard error of the mean across starts"),
                     ("S_min", agg.min_action.s), ("best_chain", agg.best_chain)])
    emit("residuals.tsv", _write_matrix_tsv, residuals, grid,
         meta + [("content", "relative balance violation (antisymmetric)"),
                 ("weights", "best raw-variant chain")])

    summary = _summary_lines(config, source, matrix, dropped, probe.k_terms,
                             column_sums, empty_columns, agg_raw, agg_norm,
                             returns, prices)
    emit("summary.txt", _write_lines, summary)

    if config.figures:
        from . import figures

        if prices is not None:
            written.append(figures.save_price_figure(prices.quotes, out / "price_series.png"))
        if returns is not None:
            written.append(figures.save_returns_figure(returns.values, out / "returns_series.png"))
        written.append(figures.save_transition_figure(
            matrix.values, grid, out / "transition_counts.png", matrix.kind))
        for label, results in (("raw", results_raw), ("norm", results_norm)):
            written.append(figures.save_history_figure(
                [r.history for r in results], out / f"anneal_history_{label}.png",
                title=f"{label} matrix minimization"))
        curves = []
        if marginal is not None:
            curves.append(("data marginal", marginal, None))
        curves.append(("minimizer (raw W)", agg_raw.mean_weights, agg_raw.stderr_weights))
        curves.append(("minimizer (normalized W)", agg_norm.mean_weights, agg_norm.stderr_weights))
        written.append(figures.save_distribution_figure(grid, curves, out / "distributions.png"))
        written.append(figures.save_residual_figure(residuals, grid, out / "residuals.png"))

    return {
        "s_min_raw": agg_raw.min_action.s,
        "s_min_norm": agg_norm.min_action.s,
        "k_terms": probe.k_terms,
        "dropped_pairs": dropped,
        "artifacts": written,
        "out_dir": out,
    }


def _summary_lines(config, source, matrix, dropped, k_terms, column_sums,
                   empty_columns, agg_raw, agg_norm, returns, prices) -> list[str]:
    grid, schedule, cfg = config.grid, config.schedule, config.anneal
    n = grid.bins
    lines = [
        "detailed-balance analysis summary",
        "=================================",
        f"source: {source}",
        f"mode: {config.mode}",
        f"profile: {config.profile}",
        f"grid: lower={_fmt(grid.lower)} upper={_fmt(grid.upper)} bins={n} "
        f"width={_fmt(grid.width)} (half-open bins, upper edge exclusive)",
        f"schedule: beta_start={_fmt(schedule.beta_start)} "
        f"beta_end={_fmt(schedule.beta_end)} steps={schedule.steps} "
        f"rate={_fmt(schedule.rate)}",
        f"anneal: sweeps={cfg.sweeps} epsilon={_fmt(cfg.epsilon)} "
        f"starts={cfg.starts} master_seed={cfg.seed}",
        "rng: PCG64; chain k of variant v seeded by "
        f"SeedSequence({cfg.seed}, spawn_key=(v, k)); raw v=0, normalized v=1",
    ]
    if prices is not None:
        lines.append(f"prices: {len(prices)} rows, origin_price={_fmt(prices.origin_price)}")
    if returns is not None:
        lines.append(f"returns: {len(returns)} events")
    lines.append(f"dropped_pairs: {dropped}")
    lines.append(f"pair_count_K: {k_terms} (maximum {n * (n - 1) // 2})")
    lines.append(f"matrix_kind: {matrix.kind}")
    lines.append(f"empty_columns: {list(map(int, empty_columns))}")
    lines.append(f"total_column_mass: {_fmt(float(column_sums.sum()))}")
    for label, agg in (("raw", agg_raw), ("normalized", agg_norm)):
        ln_s, log10_s = _log_strings(agg.min_action.s)
        lines.append(
            f"{label} minimization: S_min={_fmt(agg.min_action.s)} "
            f"ln_S={ln_s} log10_S={log10_s} K={agg.min_action.k_terms} "
            f"best_chain={agg.best_chain}"
        )
    return lines


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detbal",
        description="Test a return time series for detailed balance by "
                    "minimizing the balance action with simulated annealing.",
    )
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--input", type=Path, metavar="PATH",
                      help="price CSV/TSV to analyze")
    mode.add_argument("--control", choices=["metropolis", "random"],
                      help="analyze a calibration control instead of data")
    mode.add_argument("--simulate", metavar="FIXTURE",
                      help="write a synthetic price CSV from a balanced chain "
                           f"over a base fixture ({', '.join(FIXTURE_NAMES)})")
    parser.add_argument("--column", default="0",
                        help="price column: index or header name (default 0)")
    parser.add_argument("--base", default="fat_tail",
                        help="base fixture for the metropolis control")
    parser.add_argument("--bins", type=int, help="number of return bins")
    parser.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"),
                        help="return grid range")
    parser.add_argument("--beta1", type=float, help="initial inverse temperature")
    parser.add_argument("--beta2", type=float, help="terminal inverse temperature")
    parser.add_argument("--steps", type=int, help="temperature steps")
    parser.add_argument("--sweeps", type=int, help="sweeps per temperature")
    parser.add_argument("--epsilon", type=float, help="proposal step size")
    parser.add_argument("--starts", type=int, help="independent chains")
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="concurrent chains (default 1)")
    parser.add_argument("--profile", choices=sorted(PROFILES), default="desk",
                        help="parameter preset supplying defaults (default desk)")
    parser.add_argument("--out", type=Path, default=Path("detbal-out"),
                        help="output directory")
    parser.add_argument("--length", type=int, default=1_000_000,
                        help="simulated chain length (simulate mode)")
    parser.add_argument("--origin", type=float, default=1000.0,
                        help="origin price for synthetic series")
    parser.add_argument("--figures", action=argparse.BooleanOptionalAction,
                        default=True, help="render PNG figures")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    profile = PROFILES[args.profile]
    lower, upper = args.range if args.range else (profile.lower, profile.upper)
    grid = BinGrid(lower, upper,
                   args.bins if args.bins is not None else profile.bins)
    try:
        schedule = AnnealSchedule(
            args.beta1 if args.beta1 is not None else profile.beta_start,
            args.beta2 if args.beta2 is not None else profile.beta_end,
            args.steps if args.steps is not None else profile.steps,
        )
        anneal_cfg = AnnealConfig(
            sweeps=args.sweeps if args.sweeps is not None else profile.sweeps,
            epsilon=args.epsilon if args.epsilon is not None else profile.epsilon,
            starts=args.starts if args.starts is not None else profile.starts,
            seed=args.seed,
        )
    except ValueError as exc:
        raise InputError(str(exc))

    if args.input is not None:
        mode, input_path, fixture = "input", args.input, args.base
    elif args.control is not None:
        mode, input_path, fixture = args.control, None, args.base
    else:
        mode, input_path, fixture = "simulate", None, args.simulate

    column: int | str = args.column
    if isinstance(column, str) and column.lstrip("-").isdigit():
        column = int(column)

    if args.jobs < 1:
        raise InputError("--jobs must be at least 1")
    if args.length < 2:
        raise InputError("series too short: --length must be at least 2")

    return RunConfig(
        mode=mode, out_dir=args.out, grid=grid, schedule=schedule,
        anneal=anneal_cfg, input_path=input_path, column=column,
        fixture=fixture, jobs=args.jobs, profile=args.profile,
        figures=args.figures, length=args.length, origin=args.origin,
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        if config.mode == "simulate":
            path = run_simulate(config)
            print(f"wrote {path} and {path.with_suffix('.meta.json')}")
        else:
            report = run_analyze(config)
            raw_s = report["s_min_raw"]
            print(f"S_min (raw) = {raw_s!r}, S_min (normalized) = "
                  f"{report['s_min_norm']!r}, K = {report['k_terms']}, "
                  f"dropped_pairs = {report['dropped_pairs']}")
            print(f"{len(report['artifacts'])} artifacts in {report['out_dir']}")
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenerateActionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
