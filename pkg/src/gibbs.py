"""Blocked Gibbs samplers for the normal-means model y_j = theta_j + N(0, 1).

Three priors are supported:

* Dirichlet-Laplace, via the scale mixture
  theta_j ~ N(0, psi_j phi_j^2 tau^2), psi_j ~ Exp(1/2), phi ~ Dir(a), tau ~ Gamma(n a, 1/2),
  optionally with a discrete uniform prior on a.
* Bayesian lasso: theta_j ~ N(0, psi_j), psi_j ~ Exp(lambda2 / 2), lambda2 ~ Gamma(r, delta).
* Horseshoe: theta_j ~ N(0, lam2_j tau2) with half-Cauchy scales written as
  inverse-gamma mixtures (lam2_j | nu_j ~ IG(1/2, 1/nu_j), nu_j ~ IG(1/2, 1), same for tau2 / xi).

One DL sweep is theta | rest, then the block (psi, phi, tau) | theta drawn as
phi | theta, tau | phi, theta, psi | phi, tau, theta, then a | phi, tau.

Every runner works on the coordinates sorted by y and maps the draws back, so
permuting distinct observations permutes the retained draws exactly.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional

import numpy as np
from scipy.special import gammaln

from .config import DEFAULT_GUARDS, GuardSettings
from .distributions import (
    GigParams,
    IgParams,
    RngStream,
    draw_gamma,
    draw_gig,
    draw_inverse_gaussian,
    draw_normal,
)
from .dl_prior import DlPriorSpec
from .errors import DegenerateStateError, ValidationError
from .special_math import log_sum_exp

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny
_HUGE = 1e150
_SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class ChainConfig:
    """Iteration counts, thinning, seed and storage policy for one chain."""

    iterations: int = 10000
    burn_in: int = 5000
    thin: int = 1
    seed: int = 0
    store_latents: bool = False
    stream_id: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValidationError(f"iterations must be positive, got {self.iterations}")
        if not 0 <= self.burn_in < self.iterations:
            raise ValidationError(
                f"burn_in must satisfy 0 <= burn_in < iterations, got {self.burn_in} / {self.iterations}"
            )
        if self.thin < 1:
            raise ValidationError(f"thin must be positive, got {self.thin}")

    @property
    def retained(self) -> int:
        """Number of stored draws."""
        return math.ceil((self.iterations - self.burn_in) / self.thin)

    def is_retained(self, iteration: int) -> bool:
        return iteration >= self.burn_in and (iteration - self.burn_in) % self.thin == 0

    def to_dict(self) -> dict:
        return {
            'iterations': self.iterations,
            'burn_in': self.burn_in,
            'thin': self.thin,
            'seed': self.seed,
            'stream_id': self.stream_id,
            'store_latents': self.store_latents,
        }


@dataclass
class DlState:
    """Full latent state of one DL chain."""

    theta: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    tau: float
    a: float

    def validate(self) -> None:
        if abs(float(np.sum(self.phi)) - 1.0) > _SIMPLEX_TOL or np.any(self.phi < 0):
            raise DegenerateStateError("phi left the simplex")
        if not (np.all(self.psi > 0) and self.tau > 0 and self.a > 0):
            raise DegenerateStateError("psi, tau and a must be strictly positive")

    def reindexed(self, index: np.ndarray) -> 'DlState':
        return replace(self, theta=self.theta[index], psi=self.psi[index], phi=self.phi[index])


@dataclass
class BlState:
    """Bayesian lasso state: local variances psi and the squared global penalty."""

    theta: np.ndarray
    psi: np.ndarray
    lambda2: float

    def reindexed(self, index: np.ndarray) -> 'BlState':
        return replace(self, theta=self.theta[index], psi=self.psi[index])


@dataclass
class HsState:
    """Horseshoe state with the inverse-gamma auxiliaries nu (local) and xi (global)."""

    theta: np.ndarray
    lam2: np.ndarray
    tau2: float
    nu: np.ndarray
    xi: float

    def reindexed(self, index: np.ndarray) -> 'HsState':
        return replace(self, theta=self.theta[index], lam2=self.lam2[index], nu=self.nu[index])


@dataclass(frozen=True)
class BlHyper:
    """Gamma(r, delta) hyperprior on lambda2; fixed_lambda2 pins the penalty instead."""

    r: float = 1.0
    delta: float = 1.0
    fixed_lambda2: Optional[float] = None

    def __post_init__(self):
        if self.r <= 0 or self.delta <= 0:
            raise ValidationError(f"BL hyperparameters must be positive, got r={self.r}, delta={self.delta}")
        if self.fixed_lambda2 is not None and self.fixed_lambda2 <= 0:
            raise ValidationError(f"fixed_lambda2 must be positive, got {self.fixed_lambda2}")


@dataclass
class ChainOutput:
    """Retained draws of one chain, in the caller's coordinate order."""

    method: str
    theta_draws: np.ndarray
    final_state: object
    config: ChainConfig
    a_draws: Optional[np.ndarray] = None
    latent_draws: Dict[str, np.ndarray] = field(default_factory=dict)
    elapsed_seconds: float = 0.0

    @property
    def n(self) -> int:
        return self.theta_draws.shape[1]

    @property
    def draw_count(self) -> int:
        return self.theta_draws.shape[0]

    def a_posterior_mode(self) -> Optional[float]:
        """Most frequent retained a (smallest on ties), or None without a draws."""
        if self.a_draws is None or self.a_draws.size == 0:
            return None
        values, counts = np.unique(self.a_draws, return_counts=True)
        return float(values[int(np.argmax(counts))])


def _validate_y(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValidationError("y must be a non-empty vector")
    if not np.all(np.isfinite(y)):
        raise ValidationError("y must contain only finite values")
    return y


def _shrink_normal(rng: RngStream, prior_var: np.ndarray, y: np.ndarray) -> np.ndarray:
    """theta_j ~ N(s_j y_j, s_j) with s_j = (1 + 1/prior_var_j)^-1."""
    with np.errstate(divide='ignore'):
        shrink = 1.0 / (1.0 + 1.0 / prior_var)
    return shrink * y + np.sqrt(shrink) * draw_normal(rng, 0.0, 1.0, y.size)


# --- Dirichlet-Laplace conditionals -------------------------------------------------


def dl_step_theta(rng: RngStream, state: DlState, y: np.ndarray) -> np.ndarray:
    """theta | psi, phi, tau, y: theta_j ~ N(sigma_j^2 y_j, sigma_j^2), sigma_j^2 = (1 + 1/(psi_j phi_j^2 tau^2))^-1."""
    prior_var = state.psi * state.phi ** 2 * state.tau ** 2
    return _shrink_normal(rng, prior_var, y)


def dl_step_psi(rng: RngStream, state: DlState, guards: GuardSettings = DEFAULT_GUARDS) -> np.ndarray:
    """
    psi | phi, tau, theta: zeta_j ~ iG(phi_j tau / |theta_j|, 1) and psi_j = 1 / zeta_j.

    psi_j then follows giG(1/2, 1, theta_j^2 / (phi_j tau)^2), its exact full conditional.
    """
    abs_theta = np.maximum(np.abs(state.theta), guards.theta_floor)
    scale = np.maximum(state.phi, _TINY) * state.tau
    mu = np.clip(scale / abs_theta, _TINY, _HUGE)
    zeta = draw_inverse_gaussian(rng, IgParams(mu=mu, lam=1.0))
    return 1.0 / np.maximum(np.asarray(zeta, dtype=float), _TINY)


def dl_step_tau(rng: RngStream, state: DlState, guards: GuardSettings = DEFAULT_GUARDS) -> float:
    """tau | phi, theta: tau ~ giG(n a - n, 1, 2 sum_j |theta_j| / phi_j)."""
    n = state.theta.size
    abs_theta = np.maximum(np.abs(state.theta), guards.theta_floor)
    chi = 2.0 * float(np.sum(abs_theta / np.maximum(state.phi, _TINY)))
    chi = min(max(chi, guards.chi_floor), _HUGE)
    return float(draw_gig(rng, GigParams(lam=n * state.a - n, rho=1.0, chi=chi)))


def dl_step_phi(rng: RngStream, state: DlState, guards: GuardSettings = DEFAULT_GUARDS) -> np.ndarray:
    """
    phi | theta jointly, as normalized T_j ~ giG(a - 1, 1, 2 |theta_j|).

    At a = 1/2 the T_j are inverse Gaussian iG(sqrt(chi_j), chi_j) and use that sampler.
    """
    n = state.theta.size
    if n == 1:
        return np.ones(1)
    chi = np.maximum(2.0 * np.maximum(np.abs(state.theta), guards.theta_floor), guards.chi_floor)
    if state.a == 0.5:
        t = draw_inverse_gaussian(rng, IgParams(mu=np.sqrt(chi), lam=chi))
    else:
        t = draw_gig(rng, GigParams(lam=state.a - 1.0, rho=1.0, chi=chi))
    t = np.asarray(t, dtype=float)
    total = float(np.sum(t))
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateStateError("all T_j draws underflowed in the phi update")
    phi = t / total
    return phi / phi.sum()


def dl_a_log_weights(state: DlState, grid) -> np.ndarray:
    """
    Unnormalized log posterior weights of each grid point for a.

    w(a) = sum_j log Gamma(psi'_j; a, 1/2) with psi'_j = phi_j tau.
    """
    grid = np.asarray(grid, dtype=float)
    log_scale = np.log(np.maximum(state.phi, _TINY)) + math.log(state.tau)
    scale_sum = float(np.sum(log_scale))
    linear_sum = float(np.sum(np.exp(log_scale)))
    n = state.phi.size
    return (
        n * (grid * math.log(0.5) - gammaln(grid))
        + (grid - 1.0) * scale_sum
        - 0.5 * linear_sum
    )


def dl_step_a(rng: RngStream, state: DlState, spec: DlPriorSpec) -> float:
    """
    Draw a from its discrete full conditional on the grid.

    Fixed-a specs and single-point grids return without consuming randomness.
    """
    if not spec.is_grid:
        return state.a
    if len(spec.grid) == 1:
        return spec.grid[0]
    log_w = dl_a_log_weights(state, spec.grid)
    probs = np.exp(log_w - log_sum_exp(log_w))
    u = rng.generator.random()
    index = int(np.searchsorted(np.cumsum(probs), u, side='right'))
    return spec.grid[min(index, len(spec.grid) - 1)]


# --- Comparison priors -------------------------------------------------------------------


def bl_sweep(rng: RngStream, state: BlState, y: np.ndarray, hyper: BlHyper, guards: GuardSettings) -> None:
    """One Bayesian lasso sweep, updating state in place."""
    state.theta = _shrink_normal(rng, state.psi, y)
    abs_theta = np.maximum(np.abs(state.theta), guards.theta_floor)
    lam = math.sqrt(state.lambda2)
    zeta = draw_inverse_gaussian(rng, IgParams(mu=np.clip(lam / abs_theta, _TINY, _HUGE), lam=state.lambda2))
    state.psi = 1.0 / np.maximum(np.asarray(zeta, dtype=float), _TINY)
    if hyper.fixed_lambda2 is None:
        state.lambda2 = float(draw_gamma(rng, hyper.r + y.size, hyper.delta + 0.5 * float(np.sum(state.psi))))


def _draw_inverse_gamma(rng: RngStream, shape, scale) -> np.ndarray:
    """IG(shape, scale) as scale / Gamma(shape, 1)."""
    return np.asarray(scale, dtype=float) / np.asarray(draw_gamma(rng, shape, 1.0, np.shape(scale)), dtype=float)


def hs_sweep(rng: RngStream, state: HsState, y: np.ndarray, guards: GuardSettings) -> None:
    """One horseshoe sweep, updating state in place."""
    n = y.size
    state.theta = _shrink_normal(rng, state.lam2 * state.tau2, y)
    theta2 = np.maximum(state.theta ** 2, guards.theta_floor ** 2)
    state.lam2 = _draw_inverse_gamma(rng, 1.0, 1.0 / state.nu + theta2 / (2.0 * state.tau2))
    state.nu = _draw_inverse_gamma(rng, 1.0, 1.0 + 1.0 / state.lam2)
    state.tau2 = float(_draw_inverse_gamma(
        rng, 0.5 * (n + 1), 1.0 / state.xi + 0.5 * float(np.sum(theta2 / state.lam2))
    ))
    state.xi = float(_draw_inverse_gamma(rng, 1.0, 1.0 + 1.0 / state.tau2))


# --- Chain drivers ---------------------------------------------------------------------------


def _run_chain(
    method: str,
    y: np.ndarray,
    cfg: ChainConfig,
    state,
    sweep: Callable[[RngStream, object, np.ndarray], None],
    latents: Callable[[object], Dict[str, object]],
    order: np.ndarray,
    track_a: bool = False,
) -> ChainOutput:
    """Iterate sweeps, retain thinned post-burn-in draws and restore the caller's order."""
    rng = RngStream(cfg.seed, cfg.stream_id)
    ys = y[order]
    inverse = np.empty_like(order)
    inverse[order] = np.arange(order.size)

    m = cfg.retained
    theta_draws = np.empty((m, y.size))
    a_draws = np.empty(m) if track_a else None
    latent_draws: Dict[str, np.ndarray] = {}
    kept = 0
    started = time.perf_counter()

    for iteration in range(cfg.iterations):
        try:
            sweep(rng, state, ys)
        except DegenerateStateError as e:
            raise DegenerateStateError(f"{method} chain degenerated: {e}", iteration=iteration) from e

        if cfg.is_retained(iteration):
            theta_draws[kept] = state.theta
            if track_a:
                a_draws[kept] = state.a
            if cfg.store_latents:
                for name, value in latents(state).items():
                    value = np.asarray(value, dtype=float)
                    if name not in latent_draws:
                        latent_draws[name] = np.empty((m,) + value.shape)
                    latent_draws[name][kept] = value
            kept += 1

        if (iteration + 1) % 1000 == 0:
            logger.debug(f"{method}: iteration {iteration + 1}/{cfg.iterations}")

    elapsed = time.perf_counter() - started
    logger.debug(f"{method}: {cfg.iterations} iterations on n={y.size} in {elapsed:.2f}s")

    latent_draws = {
        name: draws[:, inverse] if draws.ndim == 2 else draws
        for name, draws in latent_draws.items()
    }
    return ChainOutput(
        method=method,
        theta_draws=theta_draws[:, inverse],
        final_state=state.reindexed(inverse),
        config=cfg,
        a_draws=a_draws,
        latent_draws=latent_draws,
        elapsed_seconds=elapsed,
    )


def dl_sweep(rng: RngStream, state: DlState, y: np.ndarray, spec: DlPriorSpec, guards: GuardSettings) -> None:
    """One DL sweep, updating state in place."""
    state.theta = dl_step_theta(rng, state, y)
    state.phi = dl_step_phi(rng, state, guards)
    state.tau = dl_step_tau(rng, state, guards)
    state.psi = dl_step_psi(rng, state, guards)
    state.a = dl_step_a(rng, state, spec)
    state.validate()


def run_dl_chain(
    y,
    spec: DlPriorSpec,
    cfg: ChainConfig,
    guards: GuardSettings = DEFAULT_GUARDS,
) -> ChainOutput:
    """
    Run the DL Gibbs sampler.

    Args:
        y: Observations, one per coordinate
        spec: Prior specification (fixed a or grid)
        cfg: Chain configuration
        guards: Numerical floors for the conditionals

    Returns:
        ChainOutput with theta draws, a draws and (optionally) psi / phi / tau draws
    """
    y = _validate_y(y)
    if spec.n != y.size:
        raise ValidationError(f"prior dimension {spec.n} does not match data length {y.size}")
    order = np.argsort(y, kind='stable')
    n = y.size
    a0 = spec.initial_a
    state = DlState(
        theta=y[order].copy(),
        psi=np.ones(n),
        phi=np.full(n, 1.0 / n),
        tau=2.0 * n * a0,
        a=a0,
    )
    method = 'dl-grid' if spec.is_grid else f'dl:{spec.a:g}'
    return _run_chain(
        method,
        y,
        cfg,
        state,
        lambda rng, s, ys: dl_sweep(rng, s, ys, spec, guards),
        lambda s: {'psi': s.psi, 'phi': s.phi, 'tau': s.tau},
        order,
        track_a=True,
    )


def run_bl_chain(
    y,
    hyper: BlHyper = BlHyper(),
    cfg: ChainConfig = ChainConfig(),
    guards: GuardSettings = DEFAULT_GUARDS,
) -> ChainOutput:
    """Run the Bayesian lasso Gibbs sampler."""
    y = _validate_y(y)
    order = np.argsort(y, kind='stable')
    lambda2 = hyper.fixed_lambda2 if hyper.fixed_lambda2 is not None else 1.0
    state = BlState(theta=y[order].copy(), psi=np.ones(y.size), lambda2=lambda2)
    return _run_chain(
        'bl',
        y,
        cfg,
        state,
        lambda rng, s, ys: bl_sweep(rng, s, ys, hyper, guards),
        lambda s: {'psi': s.psi, 'lambda2': s.lambda2},
        order,
    )


def run_hs_chain(
    y,
    cfg: ChainConfig = ChainConfig(),
    guards: GuardSettings = DEFAULT_GUARDS,
) -> ChainOutput:
    """Run the horseshoe Gibbs sampler."""
    y = _validate_y(y)
    order = np.argsort(y, kind='stable')
    n = y.size
    state = HsState(theta=y[order].copy(), lam2=np.ones(n), tau2=1.0, nu=np.ones(n), xi=1.0)
    return _run_chain(
        'hs',
        y,
        cfg,
        state,
        lambda rng, s, ys: hs_sweep(rng, s, ys, guards),
        lambda s: {'lam2': s.lam2, 'tau2': s.tau2},
        order,
    )
