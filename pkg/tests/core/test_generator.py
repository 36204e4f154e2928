import numpy as np
import pytest

from spdt.core.errors import DistributionError, NeighborSelectionError
from spdt.core.estimator import extract_cip
from spdt.core.generator import (
    ActivityTimeline,
    ContactHistory,
    assign_lambdas,
    badn_activation_potential,
    clip_to_spst,
    generate_badn,
    generate_links,
    generate_timeline,
    select_neighbors,
    synthesize_graph,
)
from spdt.core.graph import ActiveCopy, LinkComponent
from spdt.core.random_source import RandomSource


def test_timeline_covers_horizon_and_alternates(params, rng):
    timeline = generate_timeline(params, 2016, rng)
    assert timeline.total_steps == 2016
    assert all(length >= 1 for length in timeline.periods)
    intervals = timeline.active_intervals()
    for (s0, l0), (s1, _) in zip(intervals, intervals[1:]):
        assert s1 > l0
    assert all(0 <= t_s < t_l <= 2016 for t_s, t_l in intervals)


def test_timeline_active_intervals_respect_initial_state():
    timeline = ActivityTimeline(node=0, periods=(3, 5, 2), initially_active=False)
    assert timeline.active_intervals() == [(3, 8)]
    assert timeline.active_steps == 5
    active_first = ActivityTimeline(node=0, periods=(3, 5, 2), initially_active=True)
    assert active_first.active_intervals() == [(0, 3), (8, 10)]


def test_timeline_active_durations_follow_rho(params):
    durations = []
    for node in range(300):
        timeline = generate_timeline(params, 20_000, RandomSource(9, node), node=node)
        # drop the possibly truncated last interval
        durations.extend(t_l - t_s for t_s, t_l in timeline.active_intervals()[:-1])
    assert np.mean(durations) == pytest.approx(1 / params.rho, rel=0.05)


def test_timeline_rejects_empty_horizon(params, rng):
    with pytest.raises(DistributionError):
        generate_timeline(params, 0, rng)


def test_lambdas_within_bounds_and_deterministic(params):
    first = assign_lambdas(5000, params, RandomSource(1))
    again = assign_lambdas(5000, params, RandomSource(1))
    assert np.array_equal(first, again)
    assert first.min() >= params.xi and first.max() <= params.psi


def test_select_neighbors_distinct_and_excludes_host(rng):
    lambdas = np.full(50, 0.5)
    history = ContactHistory(host=3)
    for _ in range(100):
        picked = select_neighbors(3, 5, history, lambdas, eta=1.0, rng=rng)
        assert len(picked) == 5
        assert len(set(picked)) == 5
        assert 3 not in picked
        assert all(node in history for node in picked)


def test_select_neighbors_large_eta_always_explores(rng):
    lambdas = np.full(200, 0.5)
    history = ContactHistory(host=0)
    for _ in range(10):
        select_neighbors(0, 3, history, lambdas, eta=1e12, rng=rng)
    assert history.n_t == 30


def test_select_neighbors_small_eta_repeats(rng):
    lambdas = np.full(200, 0.5)
    history = ContactHistory(host=0)
    history.add(5)
    history.add(9)
    for _ in range(20):
        picked = select_neighbors(0, 2, history, lambdas, eta=1e-12, rng=rng)
        assert sorted(picked) == [5, 9]
    assert history.n_t == 2


def test_select_neighbors_prefers_accessible_nodes(rng):
    lambdas = np.full(100, 0.01)
    lambdas[7] = 10.0
    hits = 0
    for _ in range(200):
        if select_neighbors(0, 1, ContactHistory(host=0), lambdas, eta=1.0, rng=rng) == [7]:
            hits += 1
    assert hits > 150


@pytest.mark.parametrize("d", [0, 10, 11])
def test_select_neighbors_rejects_impossible_degree(d, rng):
    with pytest.raises(NeighborSelectionError):
        select_neighbors(0, d, ContactHistory(host=0), np.full(10, 0.5), eta=1.0, rng=rng)


def test_generate_links_timing(params, rng):
    copy = ActiveCopy(host=0, copy_id=0, t_s=100, t_l=112, expiry=112 + params.delta_steps)
    links = generate_links(copy, list(range(1, 400)), params, rng)
    for link in links:
        assert copy.t_s <= link.t_s_prime <= copy.expiry
        assert link.t_l_prime > link.t_s_prime
    components = {link.component for link in links}
    assert LinkComponent.INDIRECT_ONLY in components
    assert LinkComponent.DIRECT_ONLY in components or LinkComponent.BOTH in components


def test_synthesized_graph_is_valid(params):
    graph = synthesize_graph(params, 400, 2016, RandomSource(11))
    graph.validate()
    assert graph.n_copies > 0
    assert graph.n_links >= graph.n_copies
    assert graph.lambdas is not None and len(graph.lambdas) == 400
    # every copy links at least one neighbor
    assert np.all(graph.links_per_copy() >= 1)


def test_synthesis_is_independent_of_worker_count(params):
    serial = synthesize_graph(params, 600, 576, RandomSource(5), workers=1)
    parallel = synthesize_graph(params, 600, 576, RandomSource(5), workers=2)
    assert serial.same_as(parallel)
    assert not serial.same_as(synthesize_graph(params, 600, 576, RandomSource(6)))


def test_synthesis_emits_event(params, events):
    synthesize_graph(params, 50, 288, RandomSource(2))
    recorded = events("generator")
    assert [e.event_type for e in recorded] == ["GRAPH_SYNTHESIZED"]
    assert recorded[0].payload["nodes"] == 50


def test_two_node_graph_caps_degree(params):
    graph = synthesize_graph(params, 2, 2016, RandomSource(3)).validate()
    assert np.all(graph.links_per_copy() == 1)


def test_synthesis_rejects_single_node(params):
    with pytest.raises(NeighborSelectionError):
        synthesize_graph(params, 1, 288, RandomSource(3))


def test_activation_frequency_matches_stationary_rate(params):
    graph = synthesize_graph(params, 1000, 2016, RandomSource(17))
    cip = extract_cip(graph)
    expected = params.steps_per_day * params.activation_probability
    assert cip.activation_frequencies.mean() == pytest.approx(expected, rel=0.1)


def test_clip_to_spst_keeps_only_copresence(params):
    graph = synthesize_graph(params, 300, 1440, RandomSource(4))
    clipped = clip_to_spst(graph).validate()
    components = clipped.link_components()
    assert not np.any(components == LinkComponent.INDIRECT_ONLY.code)
    assert np.all(clipped.link_t_l <= clipped.link_copy_t_l)
    assert clipped.n_links == int(np.sum(graph.link_t_s < graph.link_copy_t_l))
    assert clipped.n_copies == graph.n_copies
    # direct-only links pass through untouched
    direct = graph.link_components() == LinkComponent.DIRECT_ONLY.code
    assert np.sum(direct) <= clipped.n_links


def test_badn_activation_potential():
    assert badn_activation_potential(3, 50) == pytest.approx(150 / 1440)


def test_badn_structure():
    # back-to-back activations share a boundary step, so copy order is not strict
    graph = generate_badn(500, 0.05, 2, 288, RandomSource(8)).validate(strict_order=False)
    assert graph.delta_steps == 0
    assert np.all(graph.copy_t_l - graph.copy_t_s == 1)
    assert np.all(graph.links_per_copy() == 2)
    assert np.all(graph.link_components() == LinkComponent.DIRECT_ONLY.code)
    pairs = graph.link_neighbor.reshape(-1, 2)
    assert np.all(pairs[:, 0] != pairs[:, 1])
    assert graph.n_copies / (500 * 288) == pytest.approx(0.05, rel=0.05)


def test_badn_is_deterministic():
    a = generate_badn(100, 0.1, 3, 50, RandomSource(1))
    b = generate_badn(100, 0.1, 3, 50, RandomSource(1))
    assert a.same_as(b)


@pytest.mark.parametrize("p,m,n", [(0.0, 2, 10), (1.0, 2, 10), (0.1, 0, 10), (0.1, 10, 10)])
def test_badn_rejects_bad_arguments(p, m, n):
    with pytest.raises((DistributionError, NeighborSelectionError)):
        generate_badn(n, p, m, 10, RandomSource(1))


def _occupancy(params, steps, seed):
    timeline = generate_timeline(params, steps, RandomSource(seed))
    return timeline.active_steps / timeline.total_steps


def test_occupancy_matches_equilibrium(params):
    equilibrium = params.q / (params.q + params.rho)
    assert equilibrium == pytest.approx(0.0730, abs=5e-4)
    assert _occupancy(params, 200_000, seed=17) == pytest.approx(equilibrium, abs=0.012)


@pytest.mark.slow
def test_occupancy_matches_equilibrium_full_scale(params):
    equilibrium = params.q / (params.q + params.rho)
    assert _occupancy(params, 1_000_000, seed=17) == pytest.approx(equilibrium, abs=0.005)
