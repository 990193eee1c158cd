"""The Dirichlet-Laplace prior: both hierarchical forms, the marginal density and tail checks.

Representation A:  theta_j | phi, tau ~ DE(phi_j tau), phi ~ Dir(a, ..., a), tau ~ Gamma(n a, 1/2)
Representation B:  theta_j | psi_j ~ DE(psi_j), psi_j ~ Gamma(a, 1/2) independently

Gamma distributions use the (shape, rate) convention throughout.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from .distributions import (
    RngStream,
    draw_dirichlet,
    draw_double_exponential,
    draw_gamma,
    draw_log_gamma,
)
from .errors import DomainError, SingularityError, ValidationError
from .special_math import log_bessel_k

logger = logging.getLogger(__name__)

# Constant standing in for the unspecified C of the log(1/delta)/Gamma(a) tail bound.
TAIL_CONSTANT = 10.0

# Grid points closer to zero than this are never evaluated by density_grid.
SINGULARITY_EXCLUSION = 1e-6


def _check_a(a: float) -> float:
    a = float(a)
    if not 0.0 < a < 1.0:
        raise DomainError(f"DL concentration a must lie in (0, 1), got {a}")
    return a


def default_a_grid(n: int) -> Tuple[float, ...]:
    """
    Discrete support for the uniform prior on a: points 10 (k + 1) / n up to 1/2.

    When n is too small for that spacing to give at least five points inside
    (0, 1/2], the points j / 20, j = 1..10, are used instead.

    Args:
        n: Dimension

    Returns:
        Ascending tuple of grid points
    """
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    step = 10.0 / n
    count = int(math.floor(0.5 / step + 1e-12))
    if count >= 5:
        return tuple(step * (k + 1) for k in range(count))
    return tuple(j / 20.0 for j in range(1, 11))


@dataclass(frozen=True)
class DlPriorSpec:
    """DL prior over R^n with either a fixed concentration or a discrete uniform prior on it."""

    n: int
    a: Optional[float] = None
    grid: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n}")
        if self.grid is not None:
            if self.a is not None:
                raise ValidationError("DlPriorSpec takes either a fixed a or a grid, not both")
            points = tuple(float(p) for p in self.grid)
            if not points:
                raise ValidationError("a grid must contain at least one point")
            if any(not 0.0 < p < 1.0 for p in points):
                raise ValidationError(f"a grid points must lie in (0, 1): {points}")
            if any(b <= a for a, b in zip(points, points[1:])):
                raise ValidationError(f"a grid points must be distinct and ascending: {points}")
            object.__setattr__(self, 'grid', points)
        else:
            a = 1.0 / self.n if self.a is None else self.a
            if self.n == 1 and self.a is None:
                a = 0.5
            object.__setattr__(self, 'a', _check_a(a))

    @classmethod
    def fixed(cls, n: int, a: Optional[float] = None) -> 'DlPriorSpec':
        """Fixed-a prior; a defaults to 1/n (1/2 when n = 1)."""
        return cls(n=n, a=a)

    @classmethod
    def with_grid(cls, n: int, points: Optional[Sequence[float]] = None) -> 'DlPriorSpec':
        """Grid prior on a; points default to default_a_grid(n)."""
        return cls(n=n, grid=tuple(points) if points is not None else default_a_grid(n))

    @property
    def is_grid(self) -> bool:
        return self.grid is not None

    @property
    def initial_a(self) -> float:
        """Starting value of a for a chain: the fixed a, or the grid median."""
        if self.grid is None:
            return self.a
        return self.grid[(len(self.grid) - 1) // 2]

    def to_dict(self) -> dict:
        if self.grid is None:
            return {'n': self.n, 'a_mode': 'fixed', 'a': self.a}
        return {'n': self.n, 'a_mode': 'grid', 'grid': list(self.grid)}


@dataclass
class PriorDraw:
    """One joint draw (theta, psi, phi, tau) from representation A."""

    theta: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    tau: float


@dataclass(frozen=True)
class TailMass:
    """Monte Carlo estimate of P(|theta_1| > delta)."""

    delta: float
    estimate: float
    se: float
    draws: int
    bound: float = field(default=float('nan'))

    def to_dict(self) -> dict:
        return {
            'delta': self.delta,
            'estimate': self.estimate,
            'se': self.se,
            'draws': self.draws,
            'bound': self.bound,
        }


def sample_prior_hierarchical(rng: RngStream, spec: DlPriorSpec, a: float) -> PriorDraw:
    """
    Draw from representation A.

    Args:
        rng: Random stream
        spec: Prior specification (supplies n)
        a: Concentration in (0, 1)

    Returns:
        PriorDraw with psi_j = phi_j tau
    """
    a = _check_a(a)
    n = spec.n
    phi = draw_dirichlet(rng, a, n)
    tau = draw_gamma(rng, n * a, 0.5)
    psi = phi * tau
    # Scale-mixture form so that coordinates with phi_j underflowed to 0 give theta_j = 0.
    theta = psi * draw_double_exponential(rng, 1.0, n)
    return PriorDraw(theta=theta, psi=psi, phi=phi, tau=float(tau))


def sample_prior_marginalized(rng: RngStream, n: int, a: float) -> np.ndarray:
    """
    Draw n i.i.d. coordinates from representation B.

    Args:
        rng: Random stream
        n: Number of coordinates
        a: Concentration in (0, 1)

    Returns:
        Real vector of length n
    """
    a = _check_a(a)
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    psi = np.exp(draw_log_gamma(rng, a, int(n)) + math.log(2.0))
    return psi * draw_double_exponential(rng, 1.0, int(n))


def marginal_log_pdf(theta: Union[float, np.ndarray], a: float) -> Union[float, np.ndarray]:
    """
    Log of the closed-form DL marginal density of one coordinate.

    pi(theta) = |theta|^((a-1)/2) K_{1-a}(sqrt(2|theta|)) / (2^((1+a)/2) Gamma(a))

    Args:
        theta: Nonzero real value(s)
        a: Concentration in (0, 1)

    Returns:
        Log density

    Raises:
        SingularityError: If any theta is 0 (the density has a pole there)
    """
    a = _check_a(a)
    abs_theta = np.abs(np.asarray(theta, dtype=float))
    if np.any(abs_theta == 0):
        raise SingularityError("DL marginal density is unbounded at theta = 0")
    if np.any(~np.isfinite(abs_theta)):
        raise DomainError(f"theta must be finite, got {theta}")
    result = (
        -0.5 * (1.0 + a) * math.log(2.0)
        - gammaln(a)
        + 0.5 * (a - 1.0) * np.log(abs_theta)
        + log_bessel_k(1.0 - a, np.sqrt(2.0 * abs_theta))
    )
    return float(result) if np.ndim(result) == 0 else result


def tail_bound(a: float, delta: float, constant: float = TAIL_CONSTANT) -> float:
    """Shape of the tail bound C log(1/delta) / Gamma(a)."""
    return constant * math.log(1.0 / delta) / math.exp(gammaln(a))


def tail_mass_estimate(rng: RngStream, a: float, delta: float, draws: int) -> TailMass:
    """
    Monte Carlo estimate of zeta = P(|theta_1| > delta) under representation B.

    Args:
        rng: Random stream
        a: Concentration in (0, 1)
        delta: Positive threshold
        draws: Number of prior draws (>= 10,000)

    Returns:
        TailMass with binomial standard error sqrt(zeta (1 - zeta) / draws)
    """
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if draws < 10_000:
        raise ValidationError(f"tail_mass_estimate needs at least 10000 draws, got {draws}")
    theta = sample_prior_marginalized(rng, draws, a)
    zeta = float(np.mean(np.abs(theta) > delta))
    se = math.sqrt(zeta * (1.0 - zeta) / draws)
    bound = tail_bound(a, delta) if delta < 1.0 else float('nan')
    logger.debug(f"tail mass a={a} delta={delta}: {zeta:.6g} +/- {se:.2g}")
    return TailMass(delta=float(delta), estimate=zeta, se=se, draws=int(draws), bound=bound)


def supp_delta_count(theta: np.ndarray, delta: float) -> Union[int, np.ndarray]:
    """
    Number of coordinates with |theta_j| > delta.

    Args:
        theta: Vector, or matrix of draws (one draw per row)
        delta: Nonnegative threshold

    Returns:
        Count (int for a vector, array of counts for a matrix)
    """
    if delta < 0:
        raise DomainError(f"delta must be nonnegative, got {delta}")
    counts = np.sum(np.abs(np.asarray(theta, dtype=float)) > delta, axis=-1)
    return int(counts) if np.ndim(counts) == 0 else counts


def density_grid(
    a: float,
    x_max: float = 10.0,
    points: int = 200,
    x_min: float = 1e-5,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the marginal log density on a symmetric log-spaced grid.

    The interval [-1e-6, 1e-6] around the pole is never evaluated.

    Args:
        a: Concentration in (0, 1)
        x_max: Largest |x| on the grid
        points: Points per half-line
        x_min: Smallest |x| on the grid (> 1e-6)

    Returns:
        (x, log_pdf) arrays of length 2 * points, ordered by x
    """
    if x_min <= SINGULARITY_EXCLUSION or x_max <= x_min:
        raise ValidationError(f"grid needs {SINGULARITY_EXCLUSION} < x_min < x_max, got {x_min}, {x_max}")
    if points < 2:
        raise ValidationError(f"points must be at least 2, got {points}")
    positive = np.geomspace(x_min, x_max, points)
    log_pdf = marginal_log_pdf(positive, a)
    x = np.concatenate([-positive[::-1], positive])
    values = np.concatenate([log_pdf[::-1], log_pdf])
    return x, values
