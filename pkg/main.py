#!/usr/bin/env python3
"""Shrinkage toolkit - command-line entry point."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd
from rich.console import Console
from rich.table import Table

from src.cache import ReplicateCache
from src.config import Config
from src.errors import DomainError, ValidationError
from src.fitting import fit_file, prior_check
from src.gibbs import BlHyper, ChainConfig
from src.models import ScenarioReport
from src.progress import ProgressLoggingHandler, ProgressManager
from src.simulation import run_scenario, scenario_from_config


EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logging(log_level: str, progress_mode: bool = False, log_file: Optional[str] = None) -> None:
    """
    Setup logging configuration.

    Args:
        log_level: Log level string (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        progress_mode: If True, no console handler is added (the progress panel shows logs)
        log_file: Optional path to log file for detailed logging
    """
    numeric_level = getattr(logging, log_level.upper(), None)
    if not isinstance(numeric_level, int):
        numeric_level = logging.WARNING

    handlers = []

    if log_file:
        file_handler = logging.FileHandler(log_file, mode='w')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
        handlers.append(file_handler)

    if not progress_mode:
        stream_handler = logging.StreamHandler()
        stream_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
        handlers.append(stream_handler)

    logging.basicConfig(
        level=numeric_level,
        format=LOG_FORMAT,
        datefmt=DATE_FORMAT,
        handlers=handlers,
        force=True
    )


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='Path to a YAML configuration file', default=None)
    parser.add_argument('--verbose', action='store_true', help='INFO level logging')
    parser.add_argument('--debug', action='store_true', help='DEBUG level logging, no progress display')
    parser.add_argument('--log-file', help='Also write DEBUG logs to this file', default=None)
    parser.add_argument('--iters', type=int, help='Gibbs iterations per chain', default=None)
    parser.add_argument('--burnin', type=int, help='Burn-in iterations', default=None)
    parser.add_argument('--thin', type=int, help='Thinning interval', default=None)
    parser.add_argument('--seed', type=int, help='Base seed', default=None)


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parse command line arguments.

    Args:
        argv: Argument list (defaults to sys.argv)

    Returns:
        Parsed arguments namespace
    """
    parser = argparse.ArgumentParser(
        description='Dirichlet-Laplace shrinkage for the normal means problem',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    commands = parser.add_subparsers(dest='command', required=True)

    simulate = commands.add_parser('simulate', help='Run a simulation scenario and report squared errors')
    _add_common_arguments(simulate)
    simulate.add_argument('--n', type=int, help='Dimension', default=None)
    simulate.add_argument('--q', help='Number of signals, or a percentage of n such as 20%%', default=None)
    simulate.add_argument('--signal', type=float, help='Signal level A', default=None)
    simulate.add_argument('--replicates', type=int, help='Number of replicates', default=None)
    simulate.add_argument('--methods', help='Comma-separated methods: dl, dl:<a>, dl-grid, bl, hs', default=None)
    simulate.add_argument('--a', type=float, help='Fixed DL concentration used by the dl method', default=None)
    simulate.add_argument('--a-grid', help='Comma-separated support of the prior on a for dl-grid', default=None)
    simulate.add_argument('--threads', type=int, help='Worker processes (SHRINKAGE_THREADS wins)', default=None)
    simulate.add_argument('--design', choices=['table1', 'table2'], default='table1',
                          help='table2 uses n=1000 with 10 entries at 10 and 90 at the signal level')
    simulate.add_argument('--out', help='Path of the JSON report (a CSV table is written next to it)', default=None)
    simulate.add_argument('--timings', action='store_true', help='Include wall times in the written report')
    simulate.add_argument('--no-cache', action='store_true', help='Disable the replicate cache')
    simulate.add_argument('--clear-cache', action='store_true', help='Clear the replicate cache before running')
    simulate.add_argument('--cache-dir', help='Override cache directory location', default=None)
    simulate.add_argument('--no-progress', action='store_true', help='Disable the progress display')

    fit = commands.add_parser('fit', help='Fit a method to an id,z CSV file')
    _add_common_arguments(fit)
    fit.add_argument('input', help='CSV file with header id,z')
    fit.add_argument('--method', default='dl-grid', help='dl, dl:<a>, dl-grid, bl or hs')
    fit.add_argument('--a', type=float, help='Fixed DL concentration (turns dl into dl:<a>)', default=None)
    fit.add_argument('--a-grid', help='Comma-separated support of the prior on a', default=None)
    fit.add_argument('--out', required=True, help='Path of the JSON report')
    fit.add_argument('--density-out', help='Also write the DL marginal density at the fitted a to this CSV',
                     default=None)
    fit.add_argument('--t-df', type=float, help='Input holds a t column with these degrees of freedom',
                     default=None)
    fit.add_argument('--store-latents', action='store_true', help='Keep latent draws in memory')

    check = commands.add_parser('prior-check', help='DL marginal density grid and tail masses')
    _add_common_arguments(check)
    check.add_argument('--a', type=float, help='DL concentration (defaults to 1/n)', default=None)
    check.add_argument('--n', type=int, default=100, help='Dimension')
    check.add_argument('--delta', type=float, nargs='+', default=[0.01, 0.1, 0.5, 1.0, 2.0],
                       help='Tail thresholds')
    check.add_argument('--draws', type=int, default=100000, help='Prior draws per tail estimate')
    check.add_argument('--out', required=True, help='Output directory')

    return parser.parse_args(argv)


def _parse_grid(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(p) for p in text.split(',') if p.strip()]
    except ValueError:
        raise ValidationError(f"--a-grid must be comma-separated numbers, got '{text}'")


def _apply_chain_overrides(config: Config, args: argparse.Namespace) -> None:
    config.override('chain.iterations', args.iters)
    config.override('chain.burn_in', args.burnin)
    config.override('chain.thin', args.thin)
    config.override('simulation.base_seed', args.seed)


def _print_report(report: ScenarioReport, console: Console) -> None:
    table = Table(title=f"Squared error, n={report.scenario.n}, q={report.scenario.q}, "
                        f"{report.scenario.replicates} replicate(s)")
    for column in ('method', 'mean SE', 'MC SE', 'mean ESS', 'failures'):
        table.add_column(column, justify='left' if column == 'method' else 'right')
    for m in report.methods:
        table.add_row(m.method, f"{m.mean_squared_error:.3f}", f"{m.mc_se:.3f}",
                      f"{m.mean_ess:.1f}", str(m.failures))
    console.print(table)


def run_simulate(args: argparse.Namespace, config: Config, progress_enabled: bool) -> int:
    """Run the simulate subcommand."""
    logger = logging.getLogger(__name__)

    config.override('simulation.n', args.n)
    config.override('simulation.q', args.q)
    config.override('simulation.signal', args.signal)
    config.override('simulation.replicates', args.replicates)
    config.override('simulation.methods', args.methods)
    config.override('simulation.threads', args.threads)
    config.override('prior.a', args.a)
    config.override('prior.a_grid', _parse_grid(args.a_grid))
    _apply_chain_overrides(config, args)

    scenario = scenario_from_config(config, args.design)
    logger.info(f"Scenario: {scenario.to_dict()}")

    cache = None
    if config.cache_enabled and not args.no_cache:
        cache = ReplicateCache(args.cache_dir or config.cache_directory, enabled=True)
    if args.clear_cache:
        ReplicateCache(args.cache_dir or config.cache_directory, enabled=False).clear()

    progress = ProgressManager(enabled=progress_enabled)
    handler = None
    if progress_enabled:
        handler = ProgressLoggingHandler(progress)
        handler.setFormatter(logging.Formatter('%(levelname)s - %(message)s'))
        logging.getLogger().addHandler(handler)
    try:
        with progress:
            report = run_scenario(scenario, threads=config.threads, cache=cache,
                                  progress=progress, guards=config.guards)
    finally:
        if handler:
            logging.getLogger().removeHandler(handler)

    _print_report(report, Console())

    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, 'w') as f:
            json.dump(report.to_dict(include_timings=args.timings), f, indent=2)
        table_path = out.with_suffix('.csv')
        pd.DataFrame(report.table_rows(include_timings=args.timings)).to_csv(table_path, index=False)
        logger.info(f"Report written to: {out} and {table_path}")

    if report.failures:
        logger.error(f"{len(report.failures)} replicate(s) failed")
        return EXIT_RUNTIME
    return EXIT_OK


def run_fit(args: argparse.Namespace, config: Config) -> int:
    """Run the fit subcommand."""
    _apply_chain_overrides(config, args)
    method = args.method
    if args.a is not None:
        if method.strip().lower() != 'dl':
            raise ValidationError("--a applies to the dl method only")
        method = f"dl:{args.a}"

    a_grid = _parse_grid(args.a_grid)
    if a_grid is None and config.get('prior.a_grid'):
        a_grid = [float(p) for p in config.get('prior.a_grid')]

    cfg = ChainConfig(
        iterations=int(config.get('chain.iterations')),
        burn_in=int(config.get('chain.burn_in')),
        thin=int(config.get('chain.thin')),
        seed=int(config.get('simulation.base_seed')),
        store_latents=args.store_latents or bool(config.get('chain.store_latents')),
    )
    r, delta = config.bl_hyperparameters
    fit_file(
        args.input,
        method,
        cfg,
        args.out,
        density_path=args.density_out,
        a_grid=a_grid,
        bl=BlHyper(r=r, delta=delta),
        guards=config.guards,
        t_df=args.t_df,
    )
    return EXIT_OK


def run_prior_check(args: argparse.Namespace, config: Config) -> int:
    """Run the prior-check subcommand."""
    seed = args.seed if args.seed is not None else int(config.get('simulation.base_seed'))
    prior_check(args.a, args.n, args.delta, args.draws, args.out, seed=seed)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Args:
        argv: Argument list (defaults to sys.argv)

    Returns:
        Exit code (0 success, 1 validation error, 2 runtime failure)
    """
    args = parse_arguments(argv)

    try:
        config = Config(args.config)

        if args.debug:
            log_level = 'DEBUG'
        elif args.verbose:
            log_level = 'INFO'
        else:
            log_level = config.log_level

        progress_enabled = (
            args.command == 'simulate' and not args.debug and not args.no_progress and sys.stderr.isatty()
        )
        setup_logging(log_level, progress_mode=progress_enabled, log_file=args.log_file)

        logger = logging.getLogger(__name__)
        logger.debug(f"Arguments: {vars(args)}")

        if args.command == 'simulate':
            return run_simulate(args, config, progress_enabled)
        if args.command == 'fit':
            return run_fit(args, config)
        return run_prior_check(args, config)

    except (ValidationError, DomainError) as e:
        logging.error(f"Invalid input: {e}")
        return EXIT_VALIDATION
    except FileNotFoundError as e:
        logging.error(f"File not found: {e}")
        return EXIT_VALIDATION
    except Exception as e:
        logging.error(f"Unexpected error: {e}", exc_info=True)
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
