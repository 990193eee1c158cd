"""File-based workflows: fitting a normal-means model to scores and prior diagnostics."""

import json
import logging
import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from .config import DEFAULT_GUARDS, GuardSettings
from .distributions import RngStream
from .dl_prior import DlPriorSpec, TAIL_CONSTANT, density_grid, tail_mass_estimate
from .errors import InputParseError, ValidationError
from .gibbs import BlHyper, ChainConfig
from .inference import select_signals, summarize
from .models import FitReport, MethodSpec, finite_or_none
from .simulation import run_method


logger = logging.getLogger(__name__)

MAX_ROWS = 1_000_000
_LITERAL_NAN = ('nan', '+nan', '-nan')
_PANDAS_LINE = re.compile(r'line (\d+)')


def t_to_z(t: np.ndarray, df: float) -> np.ndarray:
    """
    Map t statistics to standard normal scores with the same tail probability.

    Each half-line uses the upper-tail form so large |t| keep full precision.

    Args:
        t: t statistics
        df: Degrees of freedom

    Returns:
        z scores
    """
    if not df > 0:
        raise ValidationError(f"degrees of freedom must be positive, got {df}")
    t = np.asarray(t, dtype=float)
    upper = stats.norm.isf(stats.t.sf(np.abs(t), df))
    return np.where(t < 0, -upper, upper)


def read_scores(input_path: str, t_df: Optional[float] = None) -> Tuple[List[str], np.ndarray]:
    """
    Read an `id,z` CSV (or `id,t` with t_df set).

    Args:
        input_path: CSV path
        t_df: Degrees of freedom when the file holds t statistics

    Returns:
        (ids, scores)

    Raises:
        FileNotFoundError: If the file does not exist
        InputParseError: For malformed rows, with the 1-based line number
        ValidationError: For non-finite or missing scores
    """
    path = Path(input_path)
    if not path.exists():
        raise FileNotFoundError(f"Input file not found: {input_path}")

    column = 'z' if t_df is None else 't'
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise InputParseError("file is empty", line_number=1)
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise InputParseError(f"malformed CSV row ({e})", line_number=int(match.group(1)) if match else None)

    frame.columns = [c.strip() for c in frame.columns]
    if 'id' not in frame.columns or column not in frame.columns:
        raise InputParseError(f"header must contain 'id' and '{column}', got {list(frame.columns)}", line_number=1)
    if frame.empty:
        raise ValidationError("input has no data rows")
    if len(frame) > MAX_ROWS:
        raise ValidationError(f"input has {len(frame)} rows, more than {MAX_ROWS}")

    raw = frame[column].str.strip()
    values = pd.to_numeric(raw, errors='coerce')
    unparsable = values.isna() & ~raw.str.lower().isin(_LITERAL_NAN)
    if unparsable.any():
        row = int(np.flatnonzero(unparsable.to_numpy())[0])
        raise InputParseError(f"cannot parse {column}='{raw.iloc[row]}' as a number", line_number=row + 2)

    scores = values.to_numpy(dtype=float)
    bad = ~np.isfinite(scores)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ValidationError(f"line {row + 2}: {column} must be finite, got '{raw.iloc[row]}'")

    if t_df is not None:
        scores = t_to_z(scores, t_df)
    ids = frame['id'].str.strip().tolist()
    logger.info(f"Read {len(ids)} scores from {input_path}")
    return ids, scores


def _write_density_csv(path: Path, a: float) -> None:
    x, log_pdf = density_grid(a)
    frame = pd.DataFrame({'x': x, 'log_pdf': log_pdf, 'pdf': np.exp(log_pdf)})
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info(f"Density grid (a={a:g}) written to: {path}")


def fit_file(
    input_path: str,
    method_label: str,
    cfg: ChainConfig,
    output_path: str,
    density_path: Optional[str] = None,
    a_grid: Optional[Sequence[float]] = None,
    bl: BlHyper = BlHyper(),
    guards: GuardSettings = DEFAULT_GUARDS,
    t_df: Optional[float] = None,
) -> FitReport:
    """
    Fit one method to the scores of a CSV file and write the JSON report.

    Args:
        input_path: CSV with header `id,z`
        method_label: dl, dl:<a>, dl-grid, bl or hs
        cfg: Chain configuration
        output_path: JSON report path
        density_path: Optional CSV path for the DL marginal density at the fitted a
        a_grid: Grid for dl-grid (defaults to the n-scaled grid)
        bl: Lasso hyperprior
        guards: Numerical floors
        t_df: Degrees of freedom when the file holds t statistics

    Returns:
        FitReport
    """
    method = MethodSpec.parse(method_label)
    if density_path and method.kind not in ('dl', 'dl-grid'):
        raise ValidationError("a density grid is only available for DL methods")

    ids, z = read_scores(input_path, t_df)
    logger.info(f"Fitting {method.label} to n={len(z)} ({cfg.iterations} iterations, burn-in {cfg.burn_in})")
    chain = run_method(z, method, cfg, a_grid, bl, guards)
    summary = summarize(chain)
    selection = select_signals(chain, summary)

    metadata = {
        'method': method.label,
        'n': len(z),
        'iterations': cfg.iterations,
        'burn_in': cfg.burn_in,
        'thin': cfg.thin,
        'retained': chain.draw_count,
        'seed': cfg.seed,
        'mean_ess': float(summary.ess.mean()),
    }
    fitted_a = None
    if method.kind == 'dl':
        fitted_a = DlPriorSpec.fixed(len(z), method.a).a
        metadata['a'] = fitted_a
    elif method.kind == 'dl-grid':
        fitted_a = chain.a_posterior_mode()
        metadata['a_grid'] = list(DlPriorSpec.with_grid(len(z), a_grid).grid)
        metadata['a_posterior_mode'] = fitted_a
    if t_df is not None:
        metadata['t_df'] = t_df

    report = FitReport(
        coordinates=[
            {k: finite_or_none(v) if isinstance(v, float) else v for k, v in record.items()}
            for record in summary.to_records(ids)
        ],
        metadata=metadata,
        selection=selection.to_dict(ids),
    )

    out = Path(output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, 'w') as f:
        json.dump(report.to_dict(), f, indent=2)
    logger.info(f"Selected {selection.m_hat} signal(s); report written to: {out}")

    if density_path:
        _write_density_csv(Path(density_path), fitted_a)
    return report


def load_fit_report(path: str) -> FitReport:
    """Read a JSON report written by fit_file."""
    with open(path, 'r') as f:
        return FitReport.from_dict(json.load(f))


def prior_check(
    a: Optional[float],
    n: int,
    deltas: Sequence[float],
    draws: int,
    output_dir: str,
    seed: int = 0,
) -> dict:
    """
    Write the DL marginal density grid and Monte Carlo tail masses.

    Every delta reuses the same prior draws, so the estimates are monotone in delta.

    Args:
        a: Concentration (defaults to 1/n)
        n: Dimension the default concentration is derived from
        deltas: Thresholds for the tail mass
        draws: Prior draws per estimate (>= 10,000)
        output_dir: Directory for density_grid.csv and tail_mass.json
        seed: Seed of the prior stream

    Returns:
        The tail-mass document that was written
    """
    a = DlPriorSpec.fixed(n, a).a
    if not deltas:
        raise ValidationError("at least one delta is required")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    _write_density_csv(out / 'density_grid.csv', a)

    estimates = [
        tail_mass_estimate(RngStream(seed, 0), a, float(delta), draws)
        for delta in sorted(float(d) for d in deltas)
    ]
    document = {
        'a': a,
        'n': n,
        'draws': draws,
        'seed': seed,
        'tail_constant': TAIL_CONSTANT,
        'tail_mass': [
            {k: finite_or_none(v) if isinstance(v, float) else v for k, v in est.to_dict().items()}
            for est in estimates
        ],
    }
    with open(out / 'tail_mass.json', 'w') as f:
        json.dump(document, f, indent=2)
    logger.info(f"Prior check for a={a:g} written to: {out}")
    return document
