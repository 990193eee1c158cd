"""Log-scale special functions used by the densities and samplers.

Every density in this package is evaluated on the natural-log scale: with
a ~ 1/n the gamma function and the Bessel function both reach values that
overflow a double long before the densities themselves are extreme.

Bessel K strategy: ``scipy.special.kve`` (AMOS; power series / continued
fraction for small arguments, uniform asymptotic expansion for large ones)
gives K_nu(x) e^x, so log K = log(kve) - x never overflows for large x.
For very small x, where K_nu(x) ~ Gamma(|nu|)/2 (2/x)^|nu| exceeds the double
range, the leading small-argument term is used instead.
"""

import math
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln, kve, logsumexp

from .errors import DomainError

ArrayLike = Union[float, np.ndarray]

# Below this |nu| the order is treated as zero in the small-argument branch.
_NU_ZERO = 1e-10


def log_gamma_fn(a: ArrayLike) -> ArrayLike:
    """
    Natural log of the gamma function for positive arguments.

    Args:
        a: Positive real (scalar or array)

    Returns:
        log Gamma(a)

    Raises:
        DomainError: If any a <= 0
    """
    arr = np.asarray(a, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"log_gamma_fn requires a > 0, got {a}")
    result = gammaln(arr)
    return float(result) if np.ndim(result) == 0 else result


def log_bessel_k(nu: ArrayLike, x: ArrayLike) -> ArrayLike:
    """
    Natural log of the modified Bessel function of the second kind, log K_nu(x).

    Uses K_{-nu} = K_nu, so only |nu| enters the computation.

    Args:
        nu: Real order (scalar or array, broadcast against x)
        x: Positive argument

    Returns:
        log K_nu(x)

    Raises:
        DomainError: If any x <= 0
    """
    nu_arr = np.abs(np.asarray(nu, dtype=float))
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr > 0)):
        raise DomainError(f"log_bessel_k requires x > 0, got {x}")

    nu_b, x_b = np.broadcast_arrays(nu_arr, x_arr)
    with np.errstate(divide="ignore", over="ignore"):
        scaled = kve(nu_b, x_b)
        result = np.log(scaled) - x_b

    overflow = ~np.isfinite(result)
    if np.any(overflow):
        nu_o = nu_b[overflow]
        x_o = x_b[overflow]
        approx = np.empty_like(x_o)
        positive = nu_o > _NU_ZERO
        approx[positive] = (
            gammaln(nu_o[positive])
            - math.log(2.0)
            + nu_o[positive] * (math.log(2.0) - np.log(x_o[positive]))
        )
        # K_0(x) ~ -log(x/2) - euler_gamma
        zero = ~positive
        approx[zero] = np.log(-np.log(x_o[zero] / 2.0) - np.euler_gamma)
        result = np.array(result, dtype=float)
        result[overflow] = approx

    return float(result) if np.ndim(result) == 0 else result


def log_bessel_k_ratio(nu_num: ArrayLike, nu_den: ArrayLike, x: ArrayLike) -> ArrayLike:
    """Return K_{nu_num}(x) / K_{nu_den}(x) computed in log space."""
    return np.exp(log_bessel_k(nu_num, x) - log_bessel_k(nu_den, x))


def log_sum_exp(values: Sequence[float]) -> float:
    """
    Compute log(sum(exp(values))) with the max-shift trick.

    Args:
        values: Non-empty sequence of log-scale values

    Returns:
        The log of the sum of exponentials

    Raises:
        DomainError: If values is empty
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise DomainError("log_sum_exp requires a non-empty list")
    return float(logsumexp(arr))
