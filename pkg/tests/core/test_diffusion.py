from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from spdt.core.diffusion_engine import (
    DiseaseParams,
    EpidemicTimeSeries,
    breathing_rate_from_litres_per_minute,
    daily_exposures,
    graph_exposures,
    infection_probability,
    interval_exposure,
    link_exposure,
    removal_rate_from_per_hour,
    run_sir,
    simulate_run,
)
from spdt.core.errors import DiffusionError
from spdt.core.generator import clip_to_spst, generate_badn, synthesize_graph
from spdt.core.graph import ActiveCopy, SpdtLink, TemporalGraph
from spdt.core.random_source import RandomSource

DP = DiseaseParams()


def _ode_exposure(t_s, t_l, a, b, dp):
    """Integrate dC/dt = g/V [host present] - r C and dE/dt = p C [neighbor present]."""
    breakpoints = sorted({t_s, t_l, a, b})
    concentration, exposure = 0.0, 0.0
    for start, stop in zip(breakpoints, breakpoints[1:]):
        if start >= b:
            break
        source = dp.g / dp.volume if stop <= t_l else 0.0
        inhaling = dp.p_pulmonary if start >= a else 0.0

        def rhs(_t, y, source=source, inhaling=inhaling):
            return [source - dp.r * y[0], inhaling * y[0]]

        solution = solve_ivp(rhs, (start, stop), [concentration, exposure],
                             method="DOP853", rtol=1e-11, atol=1e-16)
        concentration, exposure = solution.y[0, -1], solution.y[1, -1]
    return exposure


def _random_configurations(n, seed):
    generator = np.random.default_rng(seed)
    configs = []
    for _ in range(n):
        t_s = float(generator.integers(0, 5000))
        t_l = t_s + float(generator.integers(300, 4 * 3600))
        kind = generator.integers(3)
        if kind == 0:    # direct-only
            a = t_s + generator.uniform(0, t_l - t_s - 1)
            b = a + generator.uniform(1, t_l - a)
        elif kind == 1:  # indirect-only
            a = t_l + generator.uniform(0, 3 * 3600)
            b = a + generator.uniform(60, 2 * 3600)
        else:            # both
            a = t_s + generator.uniform(0, t_l - t_s - 1)
            b = t_l + generator.uniform(60, 2 * 3600)
        r_per_hour = generator.uniform(0.25, 8.0)
        configs.append((t_s, t_l, a, b, r_per_hour))
    return configs


def _check_against_ode(configs):
    for t_s, t_l, a, b, r_per_hour in configs:
        dp = replace(DP, r=removal_rate_from_per_hour(r_per_hour))
        closed = float(interval_exposure(t_s, t_l, a, b, dp))
        assert closed == pytest.approx(_ode_exposure(t_s, t_l, a, b, dp), rel=1e-4, abs=1e-12)


def test_exposure_matches_ode():
    _check_against_ode(_random_configurations(100, seed=4))


@pytest.mark.slow
def test_exposure_matches_ode_full_scale():
    _check_against_ode(_random_configurations(1000, seed=5))


def test_unit_conversions():
    assert breathing_rate_from_litres_per_minute(7.5) == pytest.approx(1.25e-4)
    assert removal_rate_from_per_hour(1.0) == pytest.approx(1 / 3600)


def test_link_exposure_uses_step_seconds():
    copy = ActiveCopy(host=0, copy_id=0, t_s=0, t_l=12, expiry=48)
    link = SpdtLink(copy=copy, neighbor=1, t_s_prime=6, t_l_prime=18)
    in_steps = link_exposure(link, DP, step_seconds=300)
    assert in_steps == pytest.approx(float(interval_exposure(0, 3600, 1800, 5400, DP)))
    assert in_steps > 0


def test_zero_length_interval_has_no_exposure():
    assert float(interval_exposure(0, 3600, 1800, 1800, DP)) == 0.0


def test_exposure_rejects_non_positive_removal_rate():
    with pytest.raises(DiffusionError):
        interval_exposure(0, 10, 0, 5, replace(DP, r=0.0))


@settings(max_examples=200)
@given(
    duration=st.floats(min_value=60, max_value=6 * 3600),
    offset=st.floats(min_value=0, max_value=1.0),
    stay=st.floats(min_value=1, max_value=4 * 3600),
    r_low=st.floats(min_value=0.25, max_value=4.0),
    factor=st.floats(min_value=1.01, max_value=2.0),
)
def test_exposure_properties(duration, offset, stay, r_low, factor):
    t_s, t_l = 0.0, duration
    a = offset * duration
    b = a + stay
    low = replace(DP, r=removal_rate_from_per_hour(r_low))
    high = replace(DP, r=removal_rate_from_per_hour(r_low * factor))
    spdt = float(interval_exposure(t_s, t_l, a, b, low))
    spst = float(interval_exposure(t_s, t_l, a, min(b, t_l), low))
    assert spdt >= 0
    # the indirect tail only adds dose
    assert spdt >= spst - 1e-12
    # faster removal never increases dose
    assert float(interval_exposure(t_s, t_l, a, b, high)) <= spdt + 1e-12


def test_dose_response_anchor():
    assert infection_probability(2.1, 0.33) == pytest.approx(0.5, abs=0.005)
    assert infection_probability(0.0, 0.33) == 0.0
    assert infection_probability(1e9, 0.33) < 1.0


def test_infection_probability_rejects_negative_dose():
    with pytest.raises(DiffusionError):
        infection_probability(-1.0, 0.33)


def test_disease_params_validation():
    with pytest.raises(DiffusionError):
        replace(DP, sigma=0.0).validate()
    with pytest.raises(DiffusionError):
        replace(DP, infectious_days_min=6).validate()
    with pytest.raises(DiffusionError):
        replace(DP, horizon_days=0).validate()
    assert DP.validate() is DP


def _day_graph(links, n_nodes=4, days=3):
    """Links as (host, t_s, t_l, neighbor, t_s', t_l') in 300 s steps; one copy per link."""
    return TemporalGraph(
        n_nodes=n_nodes, horizon=days * 288, step_seconds=300, delta_steps=36,
        copy_host=[link[0] for link in links],
        copy_id=list(range(len(links))),
        copy_t_s=[link[1] for link in links],
        copy_t_l=[link[2] for link in links],
        link_copy=list(range(len(links))),
        link_neighbor=[link[3] for link in links],
        link_t_s=[link[4] for link in links],
        link_t_l=[link[5] for link in links],
    )


def test_daily_exposures_by_arrival_day():
    graph = _day_graph([(0, 10, 20, 1, 12, 30), (1, 300, 310, 2, 300, 305), (2, 900, 910, 3, 905, 910)], days=4)
    dp = replace(DP, horizon_days=3)
    exposures = daily_exposures(graph, dp)
    assert exposures.days == 3
    assert exposures.day(0)[1].tolist() == [1]
    assert exposures.day(1)[1].tolist() == [2]
    # the third link arrives on day 3, past the horizon
    assert exposures.day(2)[1].tolist() == []
    assert np.allclose(exposures.dose, graph_exposures(graph, dp)[:2])


def test_split_midnight_conserves_dose():
    graph = _day_graph([(0, 280, 287, 1, 280, 300), (1, 10, 20, 2, 15, 600)])
    plain = daily_exposures(graph, replace(DP, horizon_days=3))
    split = daily_exposures(graph, replace(DP, horizon_days=3, split_midnight=True))
    assert split.dose.sum() == pytest.approx(plain.dose.sum(), rel=1e-9)
    assert len(split.dose) == 5
    assert split.day(1)[1].tolist() == [1, 2]
    assert split.day(2)[1].tolist() == [2]


def test_epidemic_series_summary():
    series = EpidemicTimeSeries(
        run=0, seed=1,
        susceptible=np.array([8, 6, 5]),
        infected=np.array([2, 3, 1]),
        recovered=np.array([0, 1, 4]),
        new_infections=np.array([0, 2, 1]),
    )
    assert series.days == 3
    assert series.peak_prevalence == 3
    assert series.peak_day == 1
    assert series.total_infected == 3
    assert list(series.rows())[1] == (0, 1, 6, 3, 1, 2)


def test_seeds_recover_without_contacts():
    graph = _day_graph([], n_nodes=50)
    dp = replace(DP, n_seeds=10, horizon_days=8)
    (series,) = run_sir(graph, dp, RandomSource(1), runs=1)
    assert series.days == 9
    assert series.infected[0] == 10
    assert series.infected[:3].tolist() == [10, 10, 10]
    assert series.infected[5:].tolist() == [0, 0, 0, 0]
    assert series.recovered[-1] == 10
    assert series.total_infected == 0
    assert np.all(series.susceptible + series.infected + series.recovered == 50)


def test_certain_exposure_infects_next_day():
    graph = _day_graph([(0, 10, 20, 1, 10, 20), (1, 10, 20, 0, 10, 20)], n_nodes=2, days=4)
    dp = replace(DP, g=1e6, n_seeds=1, horizon_days=4)
    (series,) = run_sir(graph, dp, RandomSource(2), runs=1)
    assert series.new_infections.tolist() == [0, 1, 0, 0, 0]
    assert series.infected[:2].tolist() == [1, 2]


def test_simulate_run_consumes_fixed_draws():
    graph = _day_graph([], n_nodes=20)
    dp = replace(DP, n_seeds=3, horizon_days=5)
    rng = RandomSource(3)
    simulate_run(daily_exposures(graph, dp), 20, dp, rng)
    # durations + seeds + one uniform per node per day
    assert rng.draws == 20 + 3 + 20 * 5


@pytest.fixture(scope="module")
def small_graph():
    from spdt.core.params import SpdtParams
    return synthesize_graph(SpdtParams.defaults(), 2000, 288 * 10, RandomSource(21))


def test_conservation_and_determinism(small_graph, events):
    dp = replace(DP, n_seeds=50, horizon_days=10)
    first = run_sir(small_graph, dp, RandomSource(9), runs=3)
    again = run_sir(small_graph, dp, RandomSource(9), runs=3, workers=2)
    for a, b in zip(first, again):
        assert np.array_equal(a.infected, b.infected)
        assert np.array_equal(a.new_infections, b.new_infections)
    for series in first:
        totals = series.susceptible + series.infected + series.recovered
        assert np.all(totals == small_graph.n_nodes)
        assert series.new_infections[0] == 0
        assert series.total_infected <= small_graph.n_nodes - dp.n_seeds
    assert [s.run for s in first] == [0, 1, 2]
    assert events("diffusion")[-1].event_type == "SIR_RUN_COMPLETE"


def test_runs_use_distinct_streams(small_graph):
    dp = replace(DP, n_seeds=50, horizon_days=10)
    a, b = run_sir(small_graph, dp, RandomSource(9), runs=2)
    assert not np.array_equal(a.infected, b.infected)


def test_clipping_reduces_exposure(small_graph):
    spdt_total = graph_exposures(small_graph, DP).sum()
    spst_total = graph_exposures(clip_to_spst(small_graph), DP).sum()
    assert spst_total < spdt_total


def test_run_sir_argument_errors(small_graph):
    with pytest.raises(DiffusionError):
        run_sir(small_graph, replace(DP, n_seeds=5000), RandomSource(1), runs=1)
    with pytest.raises(DiffusionError):
        run_sir(small_graph, DP, RandomSource(1), runs=-1)
    assert run_sir(small_graph, DP, RandomSource(1), runs=0) == []


@pytest.mark.slow
def test_diffusion_orderings_full_scale():
    from spdt.core.generator import badn_activation_potential
    from spdt.core.params import SpdtParams

    graph = synthesize_graph(SpdtParams.defaults(), 50_000, 288 * 32, RandomSource(1), workers=4)

    def mean_total(g, r_per_hour):
        dp = replace(DP, r=removal_rate_from_per_hour(r_per_hour))
        return np.mean([s.total_infected for s in run_sir(g, dp, RandomSource(7), runs=200, workers=4)])

    by_r = [mean_total(graph, r) for r in (0.5, 1.0, 1.5)]
    assert by_r[0] > by_r[1] > by_r[2]
    assert mean_total(clip_to_spst(graph), 1.0) <= 0.8 * by_r[1]
    badn = generate_badn(50_000, badn_activation_potential(3, 50), 2, 288 * 32, RandomSource(1))
    assert mean_total(badn, 1.0) < by_r[1]
