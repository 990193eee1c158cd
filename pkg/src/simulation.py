"""Simulation scenarios: data generation and the replicate runner."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .cache import ReplicateCache
from .config import Config, DEFAULT_GUARDS, GuardSettings
from .distributions import RngStream, draw_normal
from .dl_prior import DlPriorSpec
from .errors import ValidationError
from .gibbs import BlHyper, ChainConfig, ChainOutput, run_bl_chain, run_dl_chain, run_hs_chain
from .inference import mean_and_se, squared_error, summarize
from .models import MethodSpec, MethodSummary, ReplicateReport, Scenario, ScenarioReport, parse_methods
from .progress import ProgressManager


logger = logging.getLogger(__name__)

# Method slot 0 of every replicate is the data stream; estimators use slots 1, 2, ...
DATA_SLOT = 0

TABLE2_N = 1000
TABLE2_LEADING = (10, 10.0)
TABLE2_SIGNAL_COUNT = 90


def resolve_q(q: Union[int, str], n: int) -> int:
    """
    Interpret q as an absolute count or a percentage of n ('20%').

    Args:
        q: Count, or string ending in '%'
        n: Dimension

    Returns:
        Number of nonzero entries
    """
    if isinstance(q, str):
        text = q.strip()
        try:
            if text.endswith('%'):
                return int(round(float(text[:-1]) / 100.0 * n))
            return int(text)
        except ValueError:
            raise ValidationError(f"q must be an integer or a percentage, got '{q}'")
    if int(q) != q:
        raise ValidationError(f"q must be an integer, got {q}")
    return int(q)


def table2_blocks(signal: float) -> Tuple[Tuple[int, float], ...]:
    """Block layout theta_0[1:10] = 10, theta_0[11:100] = A, rest 0."""
    return (TABLE2_LEADING, (TABLE2_SIGNAL_COUNT, float(signal)))


def scenario_from_config(config: Config, design: Optional[str] = None) -> Scenario:
    """
    Build a Scenario from the resolved configuration.

    Args:
        config: Configuration (with command-line overrides already applied)
        design: None, 'table1' or 'table2'

    Returns:
        Scenario
    """
    n = int(config.get('simulation.n'))
    signal = float(config.get('simulation.signal'))
    blocks = config.get('simulation.signal_blocks')

    if design == 'table2':
        n = TABLE2_N
        blocks = table2_blocks(signal)
    elif design not in (None, 'table1'):
        raise ValidationError(f"Unknown design '{design}'")

    methods = parse_methods(config.methods)
    fixed_a = config.get('prior.a')
    if fixed_a is not None:
        methods = tuple(replace(m, a=float(fixed_a)) if m.label == 'dl' else m for m in methods)

    a_grid = config.get('prior.a_grid')
    if isinstance(a_grid, str):
        a_grid = [float(p) for p in a_grid.split(',') if p.strip()]

    r, delta = config.bl_hyperparameters
    return Scenario(
        n=n,
        q=resolve_q(config.get('simulation.q'), n) if blocks is None else sum(int(c) for c, _ in blocks),
        signal=signal,
        replicates=int(config.get('simulation.replicates')),
        methods=methods,
        chain=ChainConfig(
            iterations=int(config.get('chain.iterations')),
            burn_in=int(config.get('chain.burn_in')),
            thin=int(config.get('chain.thin')),
            store_latents=bool(config.get('chain.store_latents')),
        ),
        base_seed=int(config.get('simulation.base_seed')),
        signal_blocks=tuple(tuple(b) for b in blocks) if blocks is not None else None,
        a_grid=tuple(a_grid) if a_grid else None,
        bl=BlHyper(r=r, delta=delta),
    )


def generate_data(rng: RngStream, scenario: Scenario) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw y ~ N_n(theta_0, I_n) for the scenario's truth.

    Args:
        rng: Random stream
        scenario: Scenario

    Returns:
        (y, theta_0)
    """
    theta0 = scenario.truth()
    y = theta0 + draw_normal(rng, 0.0, 1.0, scenario.n)
    return y, theta0


def run_method(
    y: np.ndarray,
    method: MethodSpec,
    cfg: ChainConfig,
    a_grid: Optional[Sequence[float]] = None,
    bl: BlHyper = BlHyper(),
    guards: GuardSettings = DEFAULT_GUARDS,
) -> ChainOutput:
    """
    Run the chain for one method label on data y.

    Args:
        y: Observations
        method: Parsed method
        cfg: Chain configuration (seed and stream id included)
        a_grid: Grid for 'dl-grid'; defaults to the n-scaled grid
        bl: Lasso hyperprior
        guards: Numerical floors

    Returns:
        ChainOutput
    """
    n = len(y)
    if method.kind == 'dl':
        return run_dl_chain(y, DlPriorSpec.fixed(n, method.a), cfg, guards)
    if method.kind == 'dl-grid':
        return run_dl_chain(y, DlPriorSpec.with_grid(n, a_grid), cfg, guards)
    if method.kind == 'bl':
        return run_bl_chain(y, bl, cfg, guards)
    if method.kind == 'hs':
        return run_hs_chain(y, cfg, guards)
    raise ValidationError(f"Unknown method kind '{method.kind}'")


def run_replicate(
    scenario: Scenario,
    replicate: int,
    method_index: int,
    guards: GuardSettings = DEFAULT_GUARDS,
) -> ReplicateReport:
    """
    Generate replicate data and fit one method to it.

    Every method of a replicate sees the same data (stream slot 0); the chain
    of method k runs on slot k + 1. Failures are captured in the report.

    Args:
        scenario: Scenario
        replicate: Replicate index
        method_index: Index into scenario.methods
        guards: Numerical floors

    Returns:
        ReplicateReport
    """
    method = scenario.methods[method_index]
    started = time.perf_counter()
    try:
        data_rng = RngStream.for_replicate(scenario.base_seed, replicate, DATA_SLOT)
        y, theta0 = generate_data(data_rng, scenario)

        chain_stream = RngStream.for_replicate(scenario.base_seed, replicate, method_index + 1)
        cfg = replace(scenario.chain, seed=scenario.base_seed, stream_id=chain_stream.stream_id)
        chain = run_method(y, method, cfg, scenario.a_grid, scenario.bl, guards)
        summary = summarize(chain)

        covered = (summary.ci_low <= theta0) & (theta0 <= summary.ci_high)
        return ReplicateReport(
            replicate=replicate,
            method=method.label,
            squared_error=squared_error(summary.median, theta0),
            min_ess=float(summary.ess.min()),
            mean_ess=float(summary.ess.mean()),
            coverage=float(covered.mean()),
            wall_time=time.perf_counter() - started,
        )
    except Exception as e:
        logger.error(f"Replicate {replicate} / {method.label} failed: {e}")
        return ReplicateReport(
            replicate=replicate,
            method=method.label,
            wall_time=time.perf_counter() - started,
            error=f"{type(e).__name__}: {e}",
        )


def _summarize_method(label: str, reports: List[ReplicateReport]) -> MethodSummary:
    good = [r for r in reports if r.ok]
    mean, se = mean_and_se([r.squared_error for r in good])
    return MethodSummary(
        method=label,
        mean_squared_error=mean,
        mc_se=se,
        mean_ess=float(np.mean([r.mean_ess for r in good])) if good else float('nan'),
        mean_wall_time=float(np.mean([r.wall_time for r in reports])) if reports else float('nan'),
        replicates=len(good),
        failures=len(reports) - len(good),
    )


def _method_cache_key(method: MethodSpec, method_index: int) -> str:
    # the chain stream slot depends on the position in the method list
    label = method.label if method.a is None else f"{method.label}@{method.a!r}"
    return f"{label}#slot{method_index + 1}"


def run_scenario(
    scenario: Scenario,
    threads: int = 1,
    cache: Optional[ReplicateCache] = None,
    progress: Optional[ProgressManager] = None,
    guards: GuardSettings = DEFAULT_GUARDS,
) -> ScenarioReport:
    """
    Run every (replicate, method) cell of a scenario.

    Results are keyed and ordered by (method, replicate), never by completion
    order, so the report is identical for any worker count.

    Args:
        scenario: Scenario
        threads: Worker processes (1 runs in-process)
        cache: Optional replicate cache
        progress: Optional progress display
        guards: Numerical floors

    Returns:
        ScenarioReport
    """
    cells = [(m, r) for m in range(len(scenario.methods)) for r in range(scenario.replicates)]
    results: Dict[Tuple[int, int], ReplicateReport] = {}
    fingerprint = scenario.fingerprint(asdict(guards))

    pending = []
    for m, r in cells:
        cached = cache.get(fingerprint, r, _method_cache_key(scenario.methods[m], m)) if cache else None
        if cached is not None:
            results[(m, r)] = cached
        else:
            pending.append((m, r))

    logger.info(
        f"Scenario n={scenario.n}, q={scenario.q}: {len(cells)} cells, "
        f"{len(cells) - len(pending)} cached, {threads} worker(s)"
    )
    if progress:
        progress.start_scenario(len(cells), completed=len(cells) - len(pending))

    def _record(key: Tuple[int, int], report: ReplicateReport) -> None:
        results[key] = report
        if cache and report.ok:
            cache.save(fingerprint, _method_cache_key(scenario.methods[key[0]], key[0]), report)
        if progress:
            progress.advance(report.method, failed=not report.ok)

    if threads <= 1 or len(pending) <= 1:
        for m, r in pending:
            _record((m, r), run_replicate(scenario, r, m, guards))
    else:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            futures = {
                executor.submit(run_replicate, scenario, r, m, guards): (m, r)
                for m, r in pending
            }
            for future in as_completed(futures):
                _record(futures[future], future.result())

    ordered = [results[key] for key in cells]
    summaries = [
        _summarize_method(method.label, [results[(m, r)] for r in range(scenario.replicates)])
        for m, method in enumerate(scenario.methods)
    ]
    for summary in summaries:
        logger.info(
            f"{summary.method}: mean SE {summary.mean_squared_error:.3f} "
            f"(MC SE {summary.mc_se:.3f}), {summary.failures} failure(s)"
        )
    return ScenarioReport(scenario=scenario, methods=summaries, replicates=ordered)
