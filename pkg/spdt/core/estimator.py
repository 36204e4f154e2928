"""
Maximum-likelihood fitting of SpdtParams from co-located interaction (CIP) samples.

All estimators work in step units internally: observed seconds are converted
with ceiling division and the fitted per-step values are divided by the step
length on the way out.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy import optimize

from spdt.core.distributions import mixture_degree_pmf
from spdt.core.errors import EstimationError
from spdt.core.graph import TemporalGraph
from spdt.core.params import DEFAULT_STEP_SECONDS, SECONDS_PER_DAY, SpdtParams, validate_params
from spdt.infra.logging import LogManager

logger = logging.getLogger(__name__)

FITTED_PSI = 0.999
FITTED_ETA = 1.0
MIN_POWER_LAW_SAMPLES = 1000
ALPHA_BOUNDS = (0.5, 10.0)
XI_BOUNDS = (0.01, 0.99)
PC_BRACKET = (1e-8, 1.0 - 1e-8)
_BOUNDARY_TOLERANCE = 1e-3


def _as_array(values: Sequence[float]) -> np.ndarray:
    return np.asarray(values, dtype=np.float64).reshape(-1)


@dataclass
class CipSamples:
    """Empirical samples of the co-located interaction parameters (seconds unless noted)."""
    active_durations: np.ndarray = field(default_factory=lambda: np.zeros(0))
    activation_frequencies: np.ndarray = field(default_factory=lambda: np.zeros(0))
    degrees: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    creation_delays: np.ndarray = field(default_factory=lambda: np.zeros(0))
    paired_durations: np.ndarray = field(default_factory=lambda: np.zeros(0))
    link_durations: np.ndarray = field(default_factory=lambda: np.zeros(0))
    waiting_periods: np.ndarray = field(default_factory=lambda: np.zeros(0))
    observation_days: float = 1.0
    delta_sec: float = 0.0

    def __post_init__(self):
        self.active_durations = _as_array(self.active_durations)
        self.activation_frequencies = _as_array(self.activation_frequencies)
        self.degrees = np.asarray(self.degrees, dtype=np.int64).reshape(-1)
        self.creation_delays = _as_array(self.creation_delays)
        self.paired_durations = _as_array(self.paired_durations)
        self.link_durations = _as_array(self.link_durations)
        self.waiting_periods = _as_array(self.waiting_periods)

    def validate(self) -> "CipSamples":
        if np.any(self.active_durations <= 0):
            raise EstimationError("active durations must be positive")
        if np.any(self.activation_frequencies < 0):
            raise EstimationError("activation frequencies must be non-negative")
        if np.any(self.degrees < 1):
            raise EstimationError("activation degrees must be >= 1")
        if len(self.creation_delays) != len(self.paired_durations):
            raise EstimationError("every creation delay needs its paired active duration")
        if np.any(self.creation_delays < 0):
            raise EstimationError("creation delays must be non-negative")
        if np.any(self.creation_delays > self.paired_durations + self.delta_sec):
            raise EstimationError("creation delay exceeds its active duration + delta")
        if np.any(self.link_durations <= 0):
            raise EstimationError("link durations must be positive")
        if self.observation_days <= 0:
            raise EstimationError("observation_days must be positive")
        return self

    def sizes(self) -> dict:
        return {
            "TA": len(self.active_durations),
            "H": len(self.activation_frequencies),
            "D": len(self.degrees),
            "TC": len(self.creation_delays),
            "TD": len(self.link_durations),
            "TW": len(self.waiting_periods),
        }


def seconds_to_ceil_steps(seconds: np.ndarray, step_seconds: int) -> np.ndarray:
    return np.ceil(np.asarray(seconds, dtype=np.float64) / step_seconds)


# ----------------------------------------------------------------------
# Activity: rho and q
# ----------------------------------------------------------------------

def estimate_rho(active_durations: Sequence[float], step_seconds: int = DEFAULT_STEP_SECONDS) -> float:
    """rho = n / sum(t_a) over durations in steps, returned per second."""
    durations = _as_array(active_durations)
    if durations.size == 0:
        raise EstimationError("cannot estimate rho from an empty sample")
    if np.any(durations <= 0):
        raise EstimationError("active durations must be positive")
    steps = seconds_to_ceil_steps(durations, step_seconds)
    rho_step = durations.size / float(steps.sum())
    return rho_step / step_seconds


def estimate_q(
    activation_frequencies: Sequence[float],
    rho_per_sec: float,
    z: float,
    step_seconds: int = DEFAULT_STEP_SECONDS,
    observation_days: float = 1.0,
) -> float:
    """Invert z q rho / (q + rho) = h for q, with h the mean activations per observation.

    ``activation_frequencies`` are per day; ``z`` counts the steps of the
    whole observation (observation_days * steps per day).
    """
    frequencies = _as_array(activation_frequencies)
    if frequencies.size == 0:
        raise EstimationError("cannot estimate q from an empty sample")
    rho_step = rho_per_sec * step_seconds
    h_bar = float(frequencies.mean()) * observation_days
    if h_bar >= z * rho_step:
        raise EstimationError(
            f"mean activations {h_bar:.4g} per observation reach z*rho={z * rho_step:.4g}; "
            "activation rate is inconsistent with rho"
        )
    q_step = rho_step * h_bar / (z * rho_step - h_bar)
    return q_step / step_seconds


# ----------------------------------------------------------------------
# Activation degree: (alpha, xi) of the lambda power law
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    xi: float
    psi: float
    log_likelihood: float
    n_samples: int
    at_boundary: bool


def degree_log_likelihood(degrees: Sequence[int], alpha: float, xi: float) -> float:
    values, counts = np.unique(np.asarray(degrees, dtype=np.int64), return_counts=True)
    return _grouped_log_likelihood(values, counts, alpha, xi)


def _grouped_log_likelihood(values: np.ndarray, counts: np.ndarray, alpha: float, xi: float) -> float:
    pmf = np.asarray(mixture_degree_pmf(values, alpha, xi), dtype=np.float64)
    return float(np.dot(counts, np.log(np.maximum(pmf, 1e-300))))


def _near_bound(value: float, bounds: Tuple[float, float]) -> bool:
    return value - bounds[0] < _BOUNDARY_TOLERANCE or bounds[1] - value < _BOUNDARY_TOLERANCE


def estimate_power_law(degrees: Sequence[int], psi: float = FITTED_PSI, restarts: int = 3) -> PowerLawFit:
    """Maximise the mixture likelihood of activation degrees over (alpha, xi).

    L-BFGS-B from the ``restarts`` best points of a coarse grid. Results on a
    bound are returned with ``at_boundary`` set.
    """
    sample = np.asarray(degrees, dtype=np.int64).reshape(-1)
    if sample.size == 0:
        raise EstimationError("cannot estimate the degree law from an empty sample")
    if np.any(sample < 1):
        raise EstimationError("activation degrees must be >= 1")
    if sample.size < MIN_POWER_LAW_SAMPLES:
        logger.warning(f"Only {sample.size} degree samples; power-law fit may be unreliable")

    values, counts = np.unique(sample, return_counts=True)

    def negative_log_likelihood(theta: np.ndarray) -> float:
        return -_grouped_log_likelihood(values, counts, float(theta[0]), float(theta[1]))

    grid = [
        (alpha, xi)
        for alpha in np.linspace(0.6, 9.5, 12)
        for xi in np.linspace(0.02, 0.98, 12)
    ]
    grid_scores = [negative_log_likelihood(np.array(point)) for point in grid]
    starts = [grid[i] for i in np.argsort(grid_scores)[:restarts]]

    best = None
    last_iterate = None
    for start in starts:
        result = optimize.minimize(
            negative_log_likelihood,
            x0=np.array(start),
            method="L-BFGS-B",
            bounds=[ALPHA_BOUNDS, XI_BOUNDS],
            options={"maxiter": 500},
        )
        last_iterate = tuple(float(v) for v in result.x)
        if not result.success:
            logger.debug(f"Power-law restart from {start} did not converge: {result.message}")
            continue
        if best is None or result.fun < best.fun:
            best = result
    if best is None:
        raise EstimationError("power-law likelihood maximisation did not converge", last_iterate=last_iterate)

    alpha, xi = (float(v) for v in best.x)
    at_boundary = _near_bound(alpha, ALPHA_BOUNDS) or _near_bound(xi, XI_BOUNDS)
    if at_boundary:
        logger.warning(f"Power-law fit hit the search boundary (alpha={alpha:.4g}, xi={xi:.4g})")
    return PowerLawFit(
        alpha=alpha,
        xi=xi,
        psi=psi,
        log_likelihood=-float(best.fun),
        n_samples=int(sample.size),
        at_boundary=at_boundary,
    )


# ----------------------------------------------------------------------
# Link creation delay: p_c
# ----------------------------------------------------------------------

def pc_score(p: float, delays: np.ndarray, windows: np.ndarray) -> float:
    """Derivative of the truncated-geometric log-likelihood in p (step units).

    ``delays`` are t_c and ``windows`` are T = t_a + delta, both in steps.
    """
    log_keep = math.log1p(-p)
    tail = np.exp(windows * log_keep)
    mass = -np.expm1((windows + 1.0) * log_keep)
    per_sample = 1.0 / p - delays / (1.0 - p) - (windows + 1.0) * tail / mass
    return float(per_sample.sum())


def estimate_pc(
    creation_delays: Sequence[float],
    paired_durations: Sequence[float],
    delta_sec: float,
    step_seconds: int = DEFAULT_STEP_SECONDS,
) -> float:
    """Root of the p_c score on (1e-8, 1 - 1e-8), returned per second."""
    delays_sec = _as_array(creation_delays)
    durations_sec = _as_array(paired_durations)
    if delays_sec.size == 0:
        raise EstimationError("cannot estimate p_c from an empty sample")
    if delays_sec.size != durations_sec.size:
        raise EstimationError("every creation delay needs its paired active duration")

    delta_steps = math.floor(delta_sec / step_seconds + 0.5)
    windows = seconds_to_ceil_steps(durations_sec, step_seconds) + delta_steps
    delays = np.minimum(seconds_to_ceil_steps(delays_sec, step_seconds), windows)

    low, high = PC_BRACKET
    score_low = pc_score(low, delays, windows)
    score_high = pc_score(high, delays, windows)
    if score_low > 0 and score_high > 0:
        logger.warning("Creation delays are all at zero; p_c pinned to the upper bracket")
        return high / step_seconds
    if score_low < 0 or score_high > 0:
        raise EstimationError(
            f"p_c score has no sign change on ({low}, {high}): "
            f"score(low)={score_low:.4g}, score(high)={score_high:.4g}"
        )
    p_step = optimize.brentq(pc_score, low, high, args=(delays, windows), xtol=1e-15, maxiter=500)
    return p_step / step_seconds


# ----------------------------------------------------------------------
# Whole parameter set
# ----------------------------------------------------------------------

def fit_all(
    cip: CipSamples,
    step_seconds: int = DEFAULT_STEP_SECONDS,
    eta: float = FITTED_ETA,
    psi: float = FITTED_PSI,
) -> SpdtParams:
    """Run every estimator and assemble a validated SpdtParams (p_b = rho).

    ``eta`` and ``psi`` are not estimated from samples; they are passed through
    to the result.
    """
    cip.validate()
    for name, size in cip.sizes().items():
        if size == 0 and name != "TW":
            raise EstimationError(f"CIP sample {name} is empty")

    rho = estimate_rho(cip.active_durations, step_seconds)
    steps_per_day = SECONDS_PER_DAY / step_seconds
    q = estimate_q(
        cip.activation_frequencies,
        rho,
        z=cip.observation_days * steps_per_day,
        step_seconds=step_seconds,
        observation_days=cip.observation_days,
    )
    power_law = estimate_power_law(cip.degrees, psi=psi)
    p_c = estimate_pc(cip.creation_delays, cip.paired_durations, cip.delta_sec, step_seconds)

    params = validate_params(SpdtParams(
        rho_per_sec=rho,
        q_per_sec=q,
        alpha=power_law.alpha,
        xi=power_law.xi,
        psi=power_law.psi,
        p_c_per_sec=p_c,
        p_b_per_sec=rho,
        delta_sec=cip.delta_sec,
        eta=eta,
        step_seconds=step_seconds,
    ))
    LogManager().emit("estimator", "PARAMS_FITTED", {
        "samples": cip.sizes(),
        "power_law_at_boundary": power_law.at_boundary,
        **params.as_dict(),
    })
    return params


def extract_cip(g: TemporalGraph) -> CipSamples:
    """CIP samples of any temporal graph, synthetic or ingested.

    Activation frequencies count only copies that start after step 0. A copy
    already active at the first step is the censored tail of an earlier
    activation, not an inactive-to-active transition within the window.
    """
    step = g.step_seconds
    observation_days = g.horizon * step / SECONDS_PER_DAY

    activations_per_node = np.bincount(g.copy_host[g.copy_t_s > 0], minlength=g.n_nodes)
    links_per_copy = g.links_per_copy()

    order = np.lexsort((g.copy_t_s, g.copy_host))
    hosts = g.copy_host[order]
    gaps = g.copy_t_s[order][1:].astype(np.int64) - g.copy_t_l[order][:-1]
    waiting = gaps[(hosts[1:] == hosts[:-1]) & (gaps > 0)]

    copy_t_s = g.link_copy_t_s.astype(np.int64)
    return CipSamples(
        active_durations=(g.copy_t_l.astype(np.int64) - g.copy_t_s) * step,
        activation_frequencies=activations_per_node / observation_days,
        degrees=links_per_copy[links_per_copy > 0],
        creation_delays=(g.link_t_s.astype(np.int64) - copy_t_s) * step,
        paired_durations=(g.link_copy_t_l.astype(np.int64) - copy_t_s) * step,
        link_durations=(g.link_t_l.astype(np.int64) - g.link_t_s) * step,
        waiting_periods=waiting * step,
        observation_days=observation_days,
        delta_sec=g.delta_steps * step,
    )
