from dataclasses import replace

import pytest

from spdt.core.errors import ParameterValidationError
from spdt.core.params import (
    SpdtParams,
    TimeStep,
    ceil_steps,
    per_step_probability,
    seconds_to_steps,
    validate_params,
)


def test_fitted_defaults_are_valid(params):
    assert validate_params(params) is params
    assert params.p_b_per_sec == params.rho_per_sec
    assert params.delta_steps == 36


def test_per_step_probability_is_linear():
    assert per_step_probability(2.83e-4, 300) == pytest.approx(0.0849)
    assert round(per_step_probability(2.83e-4, 300), 3) == 0.085
    assert per_step_probability(2.23e-5, 300) == pytest.approx(6.69e-3)


def test_per_step_probability_rejects_zero_step():
    with pytest.raises(ParameterValidationError) as exc_info:
        per_step_probability(1e-4, 0)
    assert exc_info.value.field == "step_seconds"


def test_per_step_probability_rejects_probability_of_one():
    with pytest.raises(ParameterValidationError):
        per_step_probability(0.004, 300)


def test_xi_zero_is_rejected(params):
    with pytest.raises(ParameterValidationError) as exc_info:
        validate_params(replace(params, xi=0.0))
    assert exc_info.value.field == "xi"
    assert str(exc_info.value).startswith("xi:")


def test_rate_giving_unit_probability_is_rejected(params):
    with pytest.raises(ParameterValidationError) as exc_info:
        validate_params(replace(params, rho_per_sec=0.01))
    assert exc_info.value.field == "rho_per_sec"


@pytest.mark.parametrize("field,value", [
    ("alpha", 0.0),
    ("psi", 1.5),
    ("xi", 0.999),
    ("delta_sec", -1.0),
    ("eta", 0.0),
    ("q_per_sec", -1e-5),
])
def test_each_invariant_names_its_field(params, field, value):
    with pytest.raises(ParameterValidationError) as exc_info:
        validate_params(replace(params, **{field: value}))
    assert exc_info.value.field == field


def test_with_overrides_validates(params):
    assert params.with_overrides(eta=2.0).eta == 2.0
    with pytest.raises(ParameterValidationError):
        params.with_overrides(alpha=-1.0)


def test_delta_rounds_half_up():
    assert seconds_to_steps(450, 300) == 2
    assert seconds_to_steps(449, 300) == 1
    assert seconds_to_steps(10800, 300) == 36


def test_ceil_steps():
    assert ceil_steps(1, 300) == 1
    assert ceil_steps(300, 300) == 1
    assert ceil_steps(301, 300) == 2


def test_activation_probability_matches_stationary_flow(params):
    # z * p01 activations per day
    per_day = params.steps_per_day * params.activation_probability
    assert per_day == pytest.approx(288 * params.rho * params.q / (params.q + params.rho))
    assert 1.7 < per_day < 1.9


def test_time_step_day():
    assert TimeStep(288).day == 1
    assert TimeStep(287).day == 0
    with pytest.raises(ParameterValidationError):
        TimeStep(-1)


def test_time_step_at_day():
    assert TimeStep.at_day(7).index == 2016
    assert TimeStep.at_day(2, step_seconds=60) == TimeStep(2880, 60)
    assert TimeStep.at_day(3).day == 3
    with pytest.raises(ParameterValidationError):
        TimeStep.at_day(1, step_seconds=0)


def test_field_names_match_parameter_file_keys():
    assert SpdtParams.field_names() == [
        "rho_per_sec", "q_per_sec", "alpha", "xi", "psi",
        "p_c_per_sec", "p_b_per_sec", "delta_sec", "eta", "step_seconds",
    ]
