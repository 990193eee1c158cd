"""Seedable random streams and the distributions the samplers draw from.

All samplers accept scalars or numpy arrays for their parameters and
broadcast them, so one call can update every coordinate of a chain.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError
from .special_math import log_bessel_k, log_bessel_k_ratio

ArrayLike = Union[float, np.ndarray]
Size = Optional[Union[int, Tuple[int, ...]]]

logger = logging.getLogger(__name__)

_UINT64_MAX = 2 ** 64 - 1

# Stream ids reserve this many slots per replicate, one per method.
METHOD_SLOTS = 64


@dataclass
class RngStream:
    """An independent random stream keyed by (seed, stream_id)."""

    seed: int
    stream_id: int = 0
    _generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name, value in (('seed', self.seed), ('stream_id', self.stream_id)):
            if not isinstance(value, (int, np.integer)) or not 0 <= int(value) <= _UINT64_MAX:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value!r}")
        sequence = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy generator."""
        return self._generator

    @classmethod
    def for_replicate(cls, base_seed: int, replicate: int, method_index: int) -> 'RngStream':
        """
        Stream for one (replicate, method) cell of a simulation.

        Args:
            base_seed: Scenario seed
            replicate: Replicate index (>= 0)
            method_index: Position of the method in the scenario (< METHOD_SLOTS)

        Returns:
            A stream whose id is unique for the pair
        """
        if not 0 <= method_index < METHOD_SLOTS:
            raise DomainError(f"method_index must be in [0, {METHOD_SLOTS}), got {method_index}")
        return cls(base_seed, replicate * METHOD_SLOTS + method_index)


@dataclass(frozen=True)
class GigParams:
    """giG(lambda, rho, chi): density proportional to y^(lambda-1) exp(-(rho*y + chi/y)/2)."""

    lam: ArrayLike
    rho: ArrayLike
    chi: ArrayLike

    def validate(self) -> None:
        lam = np.asarray(self.lam, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        chi = np.asarray(self.chi, dtype=float)
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(rho)) and np.all(np.isfinite(chi))):
            raise DomainError("giG parameters must be finite")
        if np.any(rho <= 0):
            raise DomainError(f"giG requires rho > 0, got {self.rho}")
        if np.any(chi < 0):
            raise DomainError(f"giG requires chi >= 0, got {self.chi}")
        if np.any((chi == 0) & (lam <= 0)):
            raise DomainError("giG with chi = 0 requires lambda > 0 (improper otherwise)")


@dataclass(frozen=True)
class IgParams:
    """Inverse Gaussian with mean mu and shape lam (variance mu^3 / lam)."""

    mu: ArrayLike
    lam: ArrayLike

    def validate(self) -> None:
        mu = np.asarray(self.mu, dtype=float)
        lam = np.asarray(self.lam, dtype=float)
        if np.any(~(mu > 0)) or np.any(~np.isfinite(mu)):
            raise DomainError(f"inverse Gaussian requires finite mu > 0, got {self.mu}")
        if np.any(~(lam > 0)) or np.any(~np.isfinite(lam)):
            raise DomainError(f"inverse Gaussian requires finite lam > 0, got {self.lam}")

    def as_gig(self) -> GigParams:
        """The same law as giG(-1/2, lam/mu^2, lam)."""
        mu = np.asarray(self.mu, dtype=float)
        lam = np.asarray(self.lam, dtype=float)
        return GigParams(lam=-0.5, rho=lam / mu ** 2, chi=lam)


def _scalar_or_array(values: np.ndarray) -> ArrayLike:
    return float(values) if np.ndim(values) == 0 else values


def _require_positive(name: str, value: ArrayLike) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise DomainError(f"{name} must be finite and > 0, got {value}")
    return arr


def draw_normal(rng: RngStream, mean: ArrayLike, sd: ArrayLike, size: Size = None) -> ArrayLike:
    """Gaussian variates N(mean, sd^2)."""
    sd_arr = _require_positive('sd', sd)
    return _scalar_or_array(rng.generator.normal(mean, sd_arr, size))


def draw_gamma(rng: RngStream, shape: ArrayLike, rate: ArrayLike, size: Size = None) -> ArrayLike:
    """Gamma variates with the given shape and rate (mean shape / rate)."""
    shape_arr = _require_positive('shape', shape)
    rate_arr = _require_positive('rate', rate)
    return _scalar_or_array(rng.generator.gamma(shape_arr, 1.0 / rate_arr, size))


def draw_log_gamma(rng: RngStream, shape: ArrayLike, size: Size = None) -> ArrayLike:
    """
    Log of standard gamma variates, exact for arbitrarily small shapes.

    For shape < 1 uses Gamma(a) = Gamma(a + 1) * U^(1/a) on the log scale, so
    draws that would underflow to zero in linear scale keep their value.

    Args:
        rng: Random stream
        shape: Positive shape (scalar or array)
        size: Output shape

    Returns:
        log of Gamma(shape, 1) variates
    """
    shape_arr = _require_positive('shape', shape)
    gen = rng.generator
    boosted = shape_arr < 1.0
    base = gen.standard_gamma(np.where(boosted, shape_arr + 1.0, shape_arr), size)
    uniform = 1.0 - gen.random(np.shape(base))
    log_draw = np.log(base) + np.where(boosted, np.log(uniform) / shape_arr, 0.0)
    return _scalar_or_array(log_draw)


def draw_dirichlet(rng: RngStream, concentration: float, n: int) -> np.ndarray:
    """
    Symmetric Dirichlet(a, ..., a) draw of length n.

    Gamma variates are generated and normalized in log space so that
    concentrations near 1e-4 do not collapse to all-zero vectors.

    Args:
        rng: Random stream
        concentration: Common concentration a > 0
        n: Dimension (>= 1)

    Returns:
        Simplex vector of length n
    """
    _require_positive('concentration', concentration)
    if int(n) != n or n < 1:
        raise DomainError(f"Dirichlet dimension must be a positive integer, got {n}")
    n = int(n)
    if n == 1:
        return np.ones(1)
    log_gammas = draw_log_gamma(rng, concentration, n)
    phi = np.exp(log_gammas - logsumexp(log_gammas))
    return phi / phi.sum()


def draw_double_exponential(rng: RngStream, scale: ArrayLike, size: Size = None) -> ArrayLike:
    """Zero-mean Laplace variates with density exp(-|y|/scale) / (2 scale)."""
    scale_arr = _require_positive('scale', scale)
    return _scalar_or_array(rng.generator.laplace(0.0, scale_arr, size))


def draw_inverse_gaussian(rng: RngStream, p: IgParams, size: Size = None) -> ArrayLike:
    """
    Inverse Gaussian variates by the transformation-with-rejection method.

    The smaller root is computed as mu / (1 + w + sqrt(w (w + 2))) with
    w = mu * nu / (2 lam), which avoids the cancellation of the textbook form
    when mu / lam is large.

    Args:
        rng: Random stream
        p: Mean and shape
        size: Output shape (defaults to the broadcast parameter shape)

    Returns:
        Positive variates
    """
    p.validate()
    mu = np.asarray(p.mu, dtype=float)
    lam = np.asarray(p.lam, dtype=float)
    if size is None:
        size = np.broadcast(mu, lam).shape
    gen = rng.generator
    nu = gen.standard_normal(size) ** 2
    w = mu * nu / (2.0 * lam)
    root = mu / (1.0 + w + np.sqrt(w) * np.sqrt(w + 2.0))
    u = gen.random(np.shape(root))
    draws = np.where(u <= mu / (mu + root), root, mu * mu / root)
    return _scalar_or_array(draws)


def _psi(x: np.ndarray, alpha: np.ndarray, lam: np.ndarray) -> np.ndarray:
    return -alpha * (np.cosh(x) - 1.0) - lam * (np.expm1(x) - x)


def _dpsi(x: np.ndarray, alpha: np.ndarray, lam: np.ndarray) -> np.ndarray:
    return -alpha * np.sinh(x) - lam * np.expm1(x)


def _gig_two_parameter(gen: np.random.Generator, lam: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """
    Draw from gig(lam, omega), density x^(lam-1) exp(-omega (x + 1/x) / 2), lam >= 0, omega > 0.

    Rejection from a three-piece (flat centre, exponential tails) hat on the
    log scale, shifted to the mode. The acceptance rate is bounded away from
    zero uniformly in lam and omega, including omega -> 0.
    """
    alpha = omega ** 2 / (np.sqrt(omega ** 2 + lam ** 2) + lam)

    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        x = -_psi(np.ones_like(lam), alpha, lam)
        t = np.where(
            (x >= 0.5) & (x <= 2.0),
            1.0,
            np.where(x > 2.0, np.sqrt(2.0 / (alpha + lam)), np.log(4.0 / (alpha + 2.0 * lam))),
        )

        x = -_psi(-np.ones_like(lam), alpha, lam)
        inv_alpha = 1.0 / alpha
        s_small = np.minimum(
            1.0 / lam,
            np.log1p(inv_alpha * (1.0 + np.sqrt(1.0 + 2.0 * alpha))),
        )
        s = np.where(
            (x >= 0.5) & (x <= 2.0),
            1.0,
            np.where(x > 2.0, np.sqrt(4.0 / (alpha * math.cosh(1.0) + lam)), s_small),
        )

    eta = -_psi(t, alpha, lam)
    zeta = -_dpsi(t, alpha, lam)
    theta = -_psi(-s, alpha, lam)
    xi = _dpsi(-s, alpha, lam)

    p = 1.0 / xi
    r = 1.0 / zeta
    td = t - r * eta
    sd = s - p * theta
    q = td + sd
    total = p + q + r

    out = np.empty_like(lam)
    pending = np.arange(lam.size)
    rounds = 0
    while pending.size:
        rounds += 1
        k = pending.size
        u = gen.random(k) * total[pending]
        v = 1.0 - gen.random(k)
        w = gen.random(k)

        qk, rk, pk = q[pending], r[pending], p[pending]
        sdk, tdk = sd[pending], td[pending]
        cand = np.where(
            u < qk,
            -sdk + qk * v,
            np.where(u < qk + rk, tdk - rk * np.log(v), -sdk + pk * np.log(v)),
        )

        with np.errstate(over='ignore', invalid='ignore'):
            hat = np.where(
                cand > tdk,
                np.exp(-eta[pending] - zeta[pending] * (cand - t[pending])),
                np.where(
                    cand < -sdk,
                    np.exp(-theta[pending] + xi[pending] * (cand + s[pending])),
                    1.0,
                ),
            )
            target = np.exp(_psi(cand, alpha[pending], lam[pending]))
        accepted = w * hat <= target
        out[pending[accepted]] = cand[accepted]
        pending = pending[~accepted]

    if rounds > 50:
        logger.debug(f"giG rejection loop needed {rounds} rounds for {lam.size} draws")

    ratio = lam / omega
    return np.exp(out) * (ratio + np.sqrt(1.0 + ratio ** 2))


def draw_gig(rng: RngStream, p: GigParams, size: Size = None) -> ArrayLike:
    """
    Generalized inverse Gaussian variates giG(lambda, rho, chi).

    Valid for every real lambda and for chi down to the smallest values the
    Gibbs conditionals produce; chi = 0 with lambda > 0 reduces to
    Gamma(lambda, rate rho / 2).

    Args:
        rng: Random stream
        p: giG parameters (scalars or arrays, broadcast together)
        size: Output shape (defaults to the broadcast parameter shape)

    Returns:
        Positive variates
    """
    p.validate()
    lam = np.asarray(p.lam, dtype=float)
    rho = np.asarray(p.rho, dtype=float)
    chi = np.asarray(p.chi, dtype=float)
    if size is None:
        size = np.broadcast(lam, rho, chi).shape
    lam = np.broadcast_to(lam, size).ravel()
    rho = np.broadcast_to(rho, size).ravel()
    chi = np.broadcast_to(chi, size).ravel()

    gen = rng.generator
    out = np.empty(lam.size)

    gamma_limit = chi == 0
    if np.any(gamma_limit):
        out[gamma_limit] = gen.gamma(lam[gamma_limit], 2.0 / rho[gamma_limit])

    proper = ~gamma_limit
    if np.any(proper):
        lam_p = lam[proper]
        omega = np.sqrt(rho[proper] * chi[proper])
        draws = _gig_two_parameter(gen, np.abs(lam_p), omega)
        draws = np.where(lam_p < 0, 1.0 / draws, draws)
        out[proper] = draws * np.sqrt(chi[proper] / rho[proper])

    return _scalar_or_array(out.reshape(size))


def gig_log_pdf(y: ArrayLike, p: GigParams) -> ArrayLike:
    """
    Normalized log density of giG(lambda, rho, chi).

    The normalizing constant is (rho/chi)^(lambda/2) / (2 K_lambda(sqrt(rho chi))).

    Args:
        y: Positive evaluation point(s)
        p: giG parameters

    Returns:
        Log density
    """
    p.validate()
    y_arr = np.asarray(y, dtype=float)
    if np.any(~(y_arr > 0)):
        raise DomainError(f"giG density requires y > 0, got {y}")
    lam = np.asarray(p.lam, dtype=float)
    rho = np.asarray(p.rho, dtype=float)
    chi = np.asarray(p.chi, dtype=float)

    kernel = (lam - 1.0) * np.log(y_arr) - 0.5 * rho * y_arr
    gamma_limit = chi == 0
    chi_safe = np.where(gamma_limit, 1.0, chi)
    lam_safe = np.where(gamma_limit & (lam <= 0), 1.0, lam)

    omega = np.sqrt(rho * chi_safe)
    log_norm = 0.5 * lam * np.log(rho / chi_safe) - math.log(2.0) - log_bessel_k(lam, omega)
    gamma_norm = lam * np.log(rho / 2.0) - gammaln(lam_safe)
    result = np.where(gamma_limit, kernel + gamma_norm, kernel - 0.5 * chi_safe / y_arr + log_norm)
    return _scalar_or_array(np.asarray(result))


def gig_mean(p: GigParams) -> ArrayLike:
    """Mean sqrt(chi/rho) K_{lambda+1}(w) / K_lambda(w), w = sqrt(rho chi), for chi > 0."""
    p.validate()
    lam = np.asarray(p.lam, dtype=float)
    rho = np.asarray(p.rho, dtype=float)
    chi = np.asarray(p.chi, dtype=float)
    omega = np.sqrt(rho * chi)
    ratio = log_bessel_k_ratio(lam + 1.0, lam, omega)
    return _scalar_or_array(np.asarray(np.sqrt(chi / rho) * ratio))
