"""
Model parameters and time discretisation.

All internal time is measured in integer steps; seconds only appear at the
parameter and file boundary. Rates are stored per second and converted to
per-step probabilities by linear scaling (rate x step), clamped just below 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Dict, List

from spdt.core.errors import ParameterValidationError

SECONDS_PER_DAY = 86400
DEFAULT_STEP_SECONDS = 300
PROBABILITY_CEILING = 1.0 - 1e-9


@dataclass(frozen=True, order=True)
class TimeStep:
    """A discrete instant on a graph's time axis."""

    index: int
    step_seconds: int = DEFAULT_STEP_SECONDS

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ParameterValidationError("must be non-negative", "index")
        if self.step_seconds <= 0:
            raise ParameterValidationError("must be positive", "step_seconds")

    @property
    def seconds(self) -> int:
        return self.index * self.step_seconds

    @property
    def day(self) -> int:
        return self.seconds // SECONDS_PER_DAY

    @classmethod
    def at_day(cls, day: int, step_seconds: int = DEFAULT_STEP_SECONDS) -> "TimeStep":
        """First step of ``day``; ``at_day(days).index`` is the horizon of a ``days``-long graph."""
        if step_seconds <= 0:
            raise ParameterValidationError("must be positive", "step_seconds")
        return cls(day * (SECONDS_PER_DAY // step_seconds), step_seconds)


def per_step_probability(rate_per_sec: float, step_seconds: float) -> float:
    """Convert a per-second rate into a per-step probability.

    The conversion is linear so that the fitted 2.83e-4 s^-1 maps onto the
    0.085 per 5-minute step quoted for the same data.
    """
    if step_seconds <= 0:
        raise ParameterValidationError("must be positive", "step_seconds")
    if rate_per_sec <= 0:
        raise ParameterValidationError("must be positive", "rate_per_sec")
    probability = rate_per_sec * step_seconds
    if probability >= 1.0:
        raise ParameterValidationError(
            f"rate {rate_per_sec:g}/s gives per-step probability {probability:g} >= 1",
            "rate_per_sec",
        )
    return min(probability, PROBABILITY_CEILING)


def seconds_to_steps(seconds: float, step_seconds: int) -> int:
    """Round a duration to the nearest whole number of steps (halves round up)."""
    return int(math.floor(seconds / step_seconds + 0.5))


def ceil_steps(seconds: float, step_seconds: int) -> int:
    """Number of steps an observed duration occupies (ceiling division)."""
    return int(math.ceil(seconds / step_seconds))


@dataclass(frozen=True)
class SpdtParams:
    """Full parameter set of the SPDT graph model."""

    rho_per_sec: float
    q_per_sec: float
    alpha: float
    xi: float
    psi: float
    p_c_per_sec: float
    p_b_per_sec: float
    delta_sec: float
    eta: float = 1.0
    step_seconds: int = DEFAULT_STEP_SECONDS

    @classmethod
    def defaults(cls) -> "SpdtParams":
        """Values fitted on one week of city-scale location updates."""
        return cls(
            rho_per_sec=2.83e-4,
            q_per_sec=2.23e-5,
            alpha=2.98,
            xi=0.25,
            psi=0.999,
            p_c_per_sec=9.33e-5,
            p_b_per_sec=2.83e-4,
            delta_sec=10800.0,
            eta=1.0,
            step_seconds=DEFAULT_STEP_SECONDS,
        )

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @property
    def rho(self) -> float:
        return per_step_probability(self.rho_per_sec, self.step_seconds)

    @property
    def q(self) -> float:
        return per_step_probability(self.q_per_sec, self.step_seconds)

    @property
    def p_c(self) -> float:
        return per_step_probability(self.p_c_per_sec, self.step_seconds)

    @property
    def p_b(self) -> float:
        return per_step_probability(self.p_b_per_sec, self.step_seconds)

    @property
    def delta_steps(self) -> int:
        return seconds_to_steps(self.delta_sec, self.step_seconds)

    @property
    def steps_per_day(self) -> int:
        return SECONDS_PER_DAY // self.step_seconds

    @property
    def active_equilibrium(self) -> float:
        """Stationary probability of the active state, q / (q + rho)."""
        return self.q / (self.q + self.rho)

    @property
    def activation_probability(self) -> float:
        """Per-step probability of an inactive-to-active transition."""
        return self.rho * self.q / (self.q + self.rho)

    def with_overrides(self, **overrides: float) -> "SpdtParams":
        return validate_params(replace(self, **overrides))

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in self.field_names()}


def _collect_errors(p: SpdtParams) -> List[ParameterValidationError]:
    errors: List[ParameterValidationError] = []

    if not isinstance(p.step_seconds, int) or isinstance(p.step_seconds, bool) or p.step_seconds <= 0:
        errors.append(ParameterValidationError("must be a positive integer", "step_seconds"))
        return errors

    for name in ("rho_per_sec", "q_per_sec", "p_c_per_sec", "p_b_per_sec"):
        rate = getattr(p, name)
        if not rate > 0:
            errors.append(ParameterValidationError(f"rate must be > 0, got {rate!r}", name))
        elif rate * p.step_seconds >= 1.0:
            errors.append(ParameterValidationError(
                f"per-step probability {rate * p.step_seconds:g} is not below 1", name
            ))

    if not p.alpha > 0:
        errors.append(ParameterValidationError(f"must be > 0, got {p.alpha!r}", "alpha"))
    if not p.xi > 0:
        errors.append(ParameterValidationError(
            f"lambda lower bound must be positive, got {p.xi!r}", "xi"
        ))
    elif not p.xi < p.psi:
        errors.append(ParameterValidationError(f"must be below psi={p.psi!r}", "xi"))
    if not 0 < p.psi <= 1:
        errors.append(ParameterValidationError(f"must lie in (0, 1], got {p.psi!r}", "psi"))
    if not p.delta_sec >= 0:
        errors.append(ParameterValidationError(f"must be >= 0, got {p.delta_sec!r}", "delta_sec"))
    if not p.eta > 0:
        errors.append(ParameterValidationError(f"must be > 0, got {p.eta!r}", "eta"))
    return errors


def validate_params(p: SpdtParams) -> SpdtParams:
    """Return ``p`` unchanged if every invariant holds, else raise for the first bad field."""
    errors = _collect_errors(p)
    if errors:
        raise errors[0]
    return p
