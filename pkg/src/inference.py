"""Posterior summaries, mixing diagnostics, loss and the two-cluster signal selection."""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .dl_prior import supp_delta_count
from .errors import DegenerateClusteringError, ValidationError
from .gibbs import ChainOutput

logger = logging.getLogger(__name__)

MIN_DRAWS = 100
CI_LEVELS = (0.025, 0.5, 0.975)

# Columns per FFT block in the vectorized ESS.
_ESS_BLOCK = 256
_KMEANS_MAX_ROUNDS = 1000


@dataclass
class PosteriorSummary:
    """Coordinate-wise posterior median, 95% credible band and effective sample size."""

    median: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    ess: np.ndarray

    @property
    def n(self) -> int:
        return self.median.size

    def to_records(self, ids=None) -> list:
        """One dict per coordinate, labelled by ids (defaults to 0..n-1)."""
        ids = list(range(self.n)) if ids is None else list(ids)
        return [
            {
                'id': ids[j],
                'median': float(self.median[j]),
                'ci_low': float(self.ci_low[j]),
                'ci_high': float(self.ci_high[j]),
                'ess': float(self.ess[j]),
            }
            for j in range(self.n)
        ]


@dataclass
class SelectionResult:
    """Estimated signal count and the coordinates picked as signals."""

    m_hat: int
    selected: Tuple[int, ...]
    count_draws: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self, ids=None) -> dict:
        selected = list(self.selected) if ids is None else [ids[j] for j in self.selected]
        return {'m_hat': self.m_hat, 'selected': selected}


def _require_draws(count: int) -> None:
    if count < MIN_DRAWS:
        raise ValidationError(f"need at least {MIN_DRAWS} retained draws, got {count}")


def _ess_block(x: np.ndarray) -> np.ndarray:
    """ESS of each column of x (draws x coordinates)."""
    n_draws = x.shape[0]
    centered = x - x.mean(axis=0)
    size = 1 << int(np.ceil(np.log2(2 * n_draws)))
    spectrum = np.fft.rfft(centered, n=size, axis=0)
    acov = np.fft.irfft(spectrum * np.conjugate(spectrum), n=size, axis=0)[:n_draws] / n_draws

    variance = acov[0]
    ess = np.full(x.shape[1], float(n_draws))
    live = variance > 0
    if not np.any(live):
        return ess

    rho = acov[:, live] / variance[live]
    pairs_count = n_draws // 2
    pairs = rho[: 2 * pairs_count].reshape(pairs_count, 2, -1).sum(axis=1)

    negative = pairs < 0
    cutoff = np.where(negative.any(axis=0), negative.argmax(axis=0), pairs_count)
    kept = np.arange(pairs_count)[:, None] < cutoff[None, :]
    tau = -1.0 + 2.0 * np.sum(np.where(kept, pairs, 0.0), axis=0)

    with np.errstate(divide='ignore'):
        live_ess = np.where(tau > 0, n_draws / tau, float(n_draws))
    ess[live] = np.minimum(live_ess, float(n_draws))
    return ess


def effective_sample_size_columns(draws: np.ndarray) -> np.ndarray:
    """
    Effective sample size of every column of a draws-by-coordinates matrix.

    Autocorrelations come from an FFT autocovariance; the sum is truncated at
    the first negative pair rho_{2t} + rho_{2t+1} (initial positive sequence).

    Args:
        draws: Matrix with one retained draw per row

    Returns:
        ESS per column, each in (0, N]; zero-variance columns get N
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 2:
        raise ValidationError(f"expected a 2-D draws matrix, got shape {draws.shape}")
    _require_draws(draws.shape[0])
    out = np.empty(draws.shape[1])
    for start in range(0, draws.shape[1], _ESS_BLOCK):
        stop = start + _ESS_BLOCK
        out[start:stop] = _ess_block(draws[:, start:stop])
    return out


def effective_sample_size(draws) -> float:
    """
    Effective sample size of a single chain of scalar draws.

    Args:
        draws: Sequence of at least 100 draws

    Returns:
        ESS in (0, N]
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 1:
        raise ValidationError("effective_sample_size expects a 1-D sequence")
    return float(effective_sample_size_columns(draws[:, None])[0])


def summarize(chain: ChainOutput) -> PosteriorSummary:
    """
    Coordinate-wise posterior summary of a chain's retained theta draws.

    Quantiles use linear interpolation between order statistics.

    Args:
        chain: Chain output with at least 100 retained draws

    Returns:
        PosteriorSummary
    """
    draws = chain.theta_draws
    _require_draws(draws.shape[0])
    low, median, high = np.quantile(draws, CI_LEVELS, axis=0)
    return PosteriorSummary(
        median=median,
        ci_low=low,
        ci_high=high,
        ess=effective_sample_size_columns(draws),
    )


def squared_error(estimate, truth) -> float:
    """Sum of squared coordinate differences."""
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ValidationError(f"length mismatch: {estimate.shape} vs {truth.shape}")
    return float(np.sum((estimate - truth) ** 2))


def kmeans2_1d(values) -> Tuple[int, np.ndarray]:
    """
    Two-cluster Lloyd iterations on the real line.

    Centers start at the minimum and maximum. A point equidistant from both
    centers joins the lower cluster. Iteration stops once the split no longer
    changes.

    Args:
        values: Vector of at least two nonnegative reals

    Returns:
        (size of the smaller cluster, labels in input order with 1 for the upper cluster)

    Raises:
        DegenerateClusteringError: If all values are identical
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValidationError("kmeans2_1d needs a vector of at least two values")

    ordered = np.sort(values)
    if ordered[0] == ordered[-1]:
        raise DegenerateClusteringError("all values are identical")

    prefix = np.cumsum(ordered)
    total = prefix[-1]
    size = ordered.size
    low_center, high_center = ordered[0], ordered[-1]
    split = -1
    threshold = 0.5 * (low_center + high_center)

    for _ in range(_KMEANS_MAX_ROUNDS):
        threshold = 0.5 * (low_center + high_center)
        new_split = int(np.searchsorted(ordered, threshold, side='right'))
        if new_split == split:
            break
        split = new_split
        low_center = prefix[split - 1] / split
        high_center = (total - prefix[split - 1]) / (size - split)
    else:
        logger.warning(f"kmeans2_1d did not settle after {_KMEANS_MAX_ROUNDS} rounds")

    labels = (values > threshold).astype(int)
    return min(split, size - split), labels


def _cluster_count(row: np.ndarray) -> int:
    try:
        count, _ = kmeans2_1d(row)
    except DegenerateClusteringError:
        return 0
    return count


def select_signals(chain: ChainOutput, summary: PosteriorSummary) -> SelectionResult:
    """
    Estimate the number of signals and pick them.

    Each retained draw of |theta| is split into two clusters; the smaller
    cluster's size is that draw's signal count. The modal count M (smallest on
    ties) is the estimate, and the M largest |posterior median| coordinates are
    selected.

    Args:
        chain: Chain output
        summary: Summary of the same chain

    Returns:
        SelectionResult with selected indices in ascending order
    """
    magnitudes = np.abs(chain.theta_draws)
    if magnitudes.shape[1] < 2:
        counts = np.zeros(magnitudes.shape[0], dtype=int)
    else:
        counts = np.fromiter((_cluster_count(row) for row in magnitudes), dtype=int, count=magnitudes.shape[0])
    m_hat = int(np.argmax(np.bincount(counts))) if counts.size else 0

    ranking = np.argsort(-np.abs(summary.median), kind='stable')
    selected = tuple(int(j) for j in np.sort(ranking[:m_hat]))
    logger.info(f"Selected {m_hat} signals out of {summary.n} coordinates")
    return SelectionResult(m_hat=m_hat, selected=selected, count_draws=counts)


def support_size_draws(chain: ChainOutput, delta: float) -> np.ndarray:
    """Size of supp_delta(theta) in every retained draw."""
    return supp_delta_count(chain.theta_draws, delta)


def compressibility_fraction(chain: ChainOutput, delta: float, max_size: float) -> float:
    """Fraction of retained draws whose supp_delta(theta) has at most max_size coordinates."""
    sizes = support_size_draws(chain, delta)
    return float(np.mean(sizes <= max_size))


def mean_and_se(values) -> Tuple[float, float]:
    """Mean and its Monte Carlo standard error (0 for fewer than two values)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float('nan'), float('nan')
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))
