"""
Samplers and analytic laws for the five co-located interaction parameters.

Every sampler is an inverse-CDF transform of exactly one uniform per draw,
so the number of draws a caller consumes is known in advance. Samplers
return a Python int/float when ``size`` is None and a numpy array otherwise.
"""

from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np

from spdt.core.errors import DistributionError
from spdt.core.random_source import RandomSource

ArrayLike = Union[float, int, np.ndarray]

SINGULARITY_TOLERANCE = 1e-9


def _uniforms(rng: RandomSource, size: Optional[int]):
    return rng.uniform() if size is None else rng.uniforms(size)


def _check_probability(p: float, name: str) -> None:
    if not 0.0 < p < 1.0:
        raise DistributionError(f"{name} must lie in (0, 1), got {p!r}")


def _check_power_law(alpha: float, xi: float, psi: float) -> None:
    if not alpha > 0:
        raise DistributionError(f"alpha must be > 0, got {alpha!r}")
    if not (0.0 < xi < psi <= 1.0):
        raise DistributionError(f"need 0 < xi < psi <= 1, got xi={xi!r}, psi={psi!r}")


# ----------------------------------------------------------------------
# Geometric on {1, 2, ...}: active/inactive periods and link durations
# ----------------------------------------------------------------------

def sample_geometric(p: float, rng: RandomSource, size: Optional[int] = None):
    _check_probability(p, "p")
    u = _uniforms(rng, size)
    steps = 1 + np.floor(np.log1p(-u) / math.log1p(-p))
    if size is None:
        return int(steps)
    return steps.astype(np.int64)


def geometric_pmf(t: ArrayLike, p: float) -> ArrayLike:
    _check_probability(p, "p")
    t = np.asarray(t, dtype=np.float64)
    return np.where(t >= 1, p * np.power(1.0 - p, t - 1), 0.0)


# ----------------------------------------------------------------------
# Truncated geometric on {0, ..., t_max}: link creation delay
# ----------------------------------------------------------------------

def _truncation_mass(p_c: float, t_max: ArrayLike) -> ArrayLike:
    """Normaliser 1 - (1 - p_c)^(t_max + 1) of the support {0..t_max}."""
    return -np.expm1((np.asarray(t_max, dtype=np.float64) + 1.0) * math.log1p(-p_c))


def sample_truncated_geometric(p_c: float, t_max: ArrayLike, rng: RandomSource, size: Optional[int] = None):
    _check_probability(p_c, "p_c")
    if np.any(np.asarray(t_max) < 0):
        raise DistributionError(f"t_max must be >= 0, got {t_max!r}")
    u = _uniforms(rng, size)
    mass = _truncation_mass(p_c, t_max)
    delay = np.floor(np.log1p(-u * mass) / math.log1p(-p_c))
    delay = np.minimum(np.maximum(delay, 0), t_max)
    if size is None and np.ndim(delay) == 0:
        return int(delay)
    return np.asarray(delay, dtype=np.int64)


def truncated_geometric_pmf(t: ArrayLike, p_c: float, t_max: ArrayLike) -> ArrayLike:
    _check_probability(p_c, "p_c")
    t = np.asarray(t, dtype=np.float64)
    inside = (t >= 0) & (t <= np.asarray(t_max))
    mass = p_c * np.power(1.0 - p_c, t) / _truncation_mass(p_c, t_max)
    return np.where(inside, mass, 0.0)


# ----------------------------------------------------------------------
# Bounded power law on [xi, psi]: public accessibility lambda
# ----------------------------------------------------------------------

def sample_bounded_power_law(alpha: float, xi: float, psi: float, rng: RandomSource, size: Optional[int] = None):
    _check_power_law(alpha, xi, psi)
    return bounded_power_law_quantile(_uniforms(rng, size), alpha, xi, psi)


def bounded_power_law_quantile(u: ArrayLike, alpha: float, xi: float, psi: float) -> ArrayLike:
    low = xi ** -alpha
    high = psi ** -alpha
    x = np.power(low - np.asarray(u) * (low - high), -1.0 / alpha)
    x = np.clip(x, xi, psi)
    return float(x) if np.ndim(x) == 0 else x


def bounded_power_law_cdf(x: ArrayLike, alpha: float, xi: float, psi: float) -> ArrayLike:
    _check_power_law(alpha, xi, psi)
    x = np.clip(np.asarray(x, dtype=np.float64), xi, psi)
    return (xi ** -alpha - np.power(x, -alpha)) / (xi ** -alpha - psi ** -alpha)


def bounded_power_law_pdf(x: ArrayLike, alpha: float, xi: float, psi: float) -> ArrayLike:
    _check_power_law(alpha, xi, psi)
    x = np.asarray(x, dtype=np.float64)
    density = alpha * np.power(x, -(alpha + 1.0)) / (xi ** -alpha - psi ** -alpha)
    return np.where((x >= xi) & (x <= psi), density, 0.0)


def bounded_power_law_mean(alpha: float, xi: float, psi: float) -> float:
    _check_power_law(alpha, xi, psi)
    norm = xi ** -alpha - psi ** -alpha
    if abs(alpha - 1.0) < SINGULARITY_TOLERANCE:
        return alpha * math.log(psi / xi) / norm
    return alpha * (xi ** (1.0 - alpha) - psi ** (1.0 - alpha)) / ((alpha - 1.0) * norm)


# ----------------------------------------------------------------------
# Activation degree: geometric on {1, 2, ...} with ratio lambda
# ----------------------------------------------------------------------

def sample_activation_degree(lam: ArrayLike, rng: RandomSource, size: Optional[int] = None):
    lam_array = np.asarray(lam, dtype=np.float64)
    if np.any(lam_array <= 0.0) or np.any(lam_array >= 1.0):
        raise DistributionError(f"lambda must lie in (0, 1), got {lam!r}")
    u = _uniforms(rng, size)
    degree = 1 + np.floor(np.log1p(-u) / np.log(lam_array))
    if size is None and np.ndim(degree) == 0:
        return int(degree)
    return np.asarray(degree, dtype=np.int64)


def activation_degree_pmf(k: ArrayLike, lam: float) -> ArrayLike:
    if not 0.0 < lam < 1.0:
        raise DistributionError(f"lambda must lie in (0, 1), got {lam!r}")
    k = np.asarray(k, dtype=np.float64)
    return np.where(k >= 1, (1.0 - lam) * np.power(lam, k - 1), 0.0)


def mixture_degree_pmf(d: ArrayLike, alpha: float, xi: float) -> ArrayLike:
    """Activation degree marginal over lambda ~ power law on [xi, 1].

    Pr(d) = a / (xi^-a - 1) * [g(d - a - 1) - g(d - a)] with
    g(x) = (1 - xi^x) / x, whose value at x = 0 is -ln(xi).
    """
    if not alpha > 0 or not 0.0 < xi < 1.0:
        raise DistributionError(f"need alpha > 0 and 0 < xi < 1, got alpha={alpha!r}, xi={xi!r}")
    d_array = np.asarray(d, dtype=np.float64)
    if np.any(d_array < 1):
        raise DistributionError(f"degree must be >= 1, got {d!r}")
    log_xi = math.log(xi)

    def ratio(x: np.ndarray) -> np.ndarray:
        near_zero = np.abs(x) < SINGULARITY_TOLERANCE
        safe = np.where(near_zero, 1.0, x)
        return np.where(near_zero, -log_xi, -np.expm1(safe * log_xi) / safe)

    scale = alpha / (xi ** -alpha - 1.0)
    pmf = scale * (ratio(d_array - alpha - 1.0) - ratio(d_array - alpha))
    return float(pmf) if np.ndim(pmf) == 0 else pmf
