import itertools
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdt.core.analysis import (
    ape_mape,
    cip_rse_report,
    clustering_coefficients,
    daily_link_density,
    degree_stats,
    histogram_dump,
    mean_new_infections,
    mean_prevalence,
    project_static,
    proportion_histogram,
    reference_on_bins,
    rse,
    summarize_runs,
)
from spdt.core.diffusion_engine import EpidemicTimeSeries
from spdt.core.distributions import geometric_pmf
from spdt.core.errors import MetricError
from spdt.core.estimator import extract_cip
from spdt.core.generator import synthesize_graph
from spdt.core.graph import TemporalGraph
from spdt.core.random_source import RandomSource


def _edge_graph(edges, n_nodes):
    """One copy and one link per (host, neighbor) pair."""
    k = len(edges)
    return TemporalGraph(
        n_nodes=n_nodes, horizon=288, step_seconds=300, delta_steps=36,
        copy_host=[h for h, _ in edges], copy_id=list(range(k)),
        copy_t_s=[2 * i for i in range(k)], copy_t_l=[2 * i + 1 for i in range(k)],
        link_copy=list(range(k)), link_neighbor=[n for _, n in edges],
        link_t_s=[2 * i for i in range(k)], link_t_l=[2 * i + 1 for i in range(k)],
    )


def test_projection_deduplicates_pairs():
    static = project_static(_edge_graph([(0, 1), (0, 1), (1, 0), (2, 1)], n_nodes=4))
    assert static.n_nodes == 4
    assert static.n_edges == 3
    assert static.undirected().number_of_edges() == 2
    assert sorted(static.reversed().directed.edges) == [(0, 1), (1, 0), (1, 2)]


def test_degree_stats():
    static = project_static(_edge_graph([(0, 1), (0, 2), (0, 3), (1, 2)], n_nodes=4))
    stats = degree_stats(static)
    assert stats.out_degree.tolist() == [3, 1, 0, 0]
    assert stats.in_degree.tolist() == [0, 1, 2, 1]
    assert stats.out_histogram.tolist() == [2, 1, 0, 1]
    assert stats.in_histogram.tolist() == [1, 2, 1]
    assert stats.pearson == pytest.approx(np.corrcoef([0, 1, 2, 1], [3, 1, 0, 0])[0, 1])
    assert stats.mean_degree == 1.0


def test_constant_degrees_have_undefined_correlation(caplog):
    static = project_static(_edge_graph([(0, 1), (1, 2), (2, 0)], n_nodes=3))
    with caplog.at_level(logging.WARNING):
        stats = degree_stats(static)
    assert math.isnan(stats.pearson)
    assert "undefined" in caplog.text


def test_degree_stats_needs_two_nodes():
    with pytest.raises(MetricError):
        degree_stats(project_static(_edge_graph([], n_nodes=1)))


def _brute_force_clustering(edges, n_nodes):
    adjacency = {v: set() for v in range(n_nodes)}
    for h, n in edges:
        adjacency[h].add(n)
        adjacency[n].add(h)
    result = {}
    for v, neighbors in adjacency.items():
        k = len(neighbors)
        if k < 2:
            result[v] = 0.0
            continue
        triangles = sum(1 for a, b in itertools.combinations(neighbors, 2) if b in adjacency[a])
        result[v] = 2.0 * triangles / (k * (k - 1))
    return result


def test_clustering_matches_triangle_count():
    generator = np.random.default_rng(3)
    n_nodes = 40
    edges = []
    while len(edges) < 150:
        h, n = generator.integers(0, n_nodes, size=2).tolist()
        if h != n:
            edges.append((h, n))
    summary = clustering_coefficients(project_static(_edge_graph(edges, n_nodes)))
    expected = _brute_force_clustering(edges, n_nodes)
    assert summary.coefficients == pytest.approx(expected)
    assert summary.mean == pytest.approx(np.mean(list(expected.values())))


def test_clustering_of_a_triangle_with_a_tail():
    static = project_static(_edge_graph([(0, 1), (1, 2), (2, 0), (2, 3)], n_nodes=4))
    summary = clustering_coefficients(static)
    assert summary.coefficients == pytest.approx({0: 1.0, 1: 1.0, 2: 1 / 3, 3: 0.0})
    assert clustering_coefficients(static, nodes=[2, 3]).coefficients == pytest.approx({2: 1 / 3, 3: 0.0})


def test_rse_examples():
    assert rse([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert rse([1.0, 0.0], [0.0, 1.0]) == pytest.approx(math.sqrt(2))
    with pytest.raises(MetricError, match="bin counts"):
        rse([1.0], [0.5, 0.5])
    with pytest.raises(MetricError, match="sums to"):
        rse([0.5, 0.6], [0.5, 0.5])


_proportions = st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=4, max_size=4).map(
    lambda xs: [x / sum(xs) for x in xs]
)


@settings(max_examples=100)
@given(x=_proportions, y=_proportions, z=_proportions)
def test_rse_is_a_metric(x, y, z):
    assert rse(x, x) == pytest.approx(0.0, abs=1e-12)
    assert rse(x, y) == pytest.approx(rse(y, x))
    assert rse(x, z) <= rse(x, y) + rse(y, z) + 1e-12
    assert rse(x, y) <= math.sqrt(2) + 1e-12


def test_proportion_histogram_pools_the_tail():
    hist = proportion_histogram([1, 1, 2, 3, 10], tail_quantile=0.5)
    assert hist.start == 1
    assert hist.bins.tolist() == [1, 2]
    assert hist.proportions.tolist() == pytest.approx([0.4, 0.6])
    assert hist.tail_bin == 2
    assert histogram_dump(hist) == ["1,0.4", "2,0.6"]


def test_proportion_histogram_explicit_start():
    hist = proportion_histogram([2, 3, 3], tail_quantile=1.0, start=0)
    assert hist.bins.tolist() == [0, 1, 2, 3]
    assert hist.proportions.tolist() == pytest.approx([0, 0, 1 / 3, 2 / 3])
    assert hist.proportions.sum() == pytest.approx(1.0)


def test_proportion_histogram_rejects_empty_sample():
    with pytest.raises(MetricError):
        proportion_histogram([])


def test_reference_pools_tail_mass():
    hist = proportion_histogram([1, 2, 3], tail_quantile=1.0, start=1)
    reference = reference_on_bins(hist, lambda k: geometric_pmf(k, 0.5))
    assert reference.tolist() == pytest.approx([0.5, 0.25, 0.25])


def test_daily_link_density():
    graph = TemporalGraph(
        n_nodes=3, horizon=576, step_seconds=300, delta_steps=36,
        copy_host=[0, 0, 1], copy_id=[0, 1, 0],
        copy_t_s=[10, 100, 300], copy_t_l=[20, 120, 320],
        link_copy=[0, 2, 2], link_neighbor=[1, 0, 2],
        link_t_s=[12, 300, 310], link_t_l=[15, 305, 330],
    )
    density = daily_link_density(graph)
    assert density.active_hosts.tolist() == [1, 1]
    assert density.links.tolist() == [1, 2]
    assert density.links_per_active_host.tolist() == [1.0, 2.0]


def test_density_of_an_empty_day_is_zero():
    graph = TemporalGraph(
        n_nodes=2, horizon=576, step_seconds=300, delta_steps=36,
        copy_host=[0], copy_id=[0], copy_t_s=[10], copy_t_l=[20],
        link_copy=[0], link_neighbor=[1], link_t_s=[12], link_t_l=[15],
    )
    assert daily_link_density(graph).links_per_active_host.tolist() == [1.0, 0.0]


def test_ape_mape():
    report = ape_mape([0, 10, 20], [0, 5, 25])
    assert report.ape.tolist() == pytest.approx([50.0, -25.0])
    assert report.mape == pytest.approx(37.5)
    assert report.std == pytest.approx(12.5)
    assert report.cumulative_ape == pytest.approx(0.0)
    assert report.skipped_days == 1


def test_ape_mape_errors():
    with pytest.raises(MetricError, match="zero on every day"):
        ape_mape([0, 0], [1, 2])
    with pytest.raises(MetricError, match="lengths differ"):
        ape_mape([1, 2], [1])


def _series(run, infected, new):
    infected = np.array(infected)
    return EpidemicTimeSeries(
        run=run, seed=0,
        susceptible=10 - infected, infected=infected,
        recovered=np.zeros_like(infected), new_infections=np.array(new),
    )


def test_run_summaries():
    runs = [_series(0, [2, 4, 2], [0, 2, 0]), _series(1, [2, 2, 6], [0, 0, 4])]
    assert mean_prevalence(runs).tolist() == [2.0, 3.0, 4.0]
    assert mean_new_infections(runs).tolist() == [0.0, 1.0, 2.0]
    summary = summarize_runs(runs)
    assert summary.runs == 2
    assert summary.peak_prevalence == 4.0
    assert summary.peak_day == 2
    assert summary.mean_total_infected == 3.0
    assert summary.std_total_infected == 1.0


def test_summaries_of_no_runs():
    assert mean_prevalence([]).size == 0
    assert mean_new_infections([]).size == 0
    assert summarize_runs([]).runs == 0


def test_cip_rse_of_a_synthesized_graph(params):
    graph = synthesize_graph(params, 2000, 288 * 7, RandomSource(5))
    cip = extract_cip(graph)
    report = cip_rse_report(cip, params)
    assert set(report) == {"t_a", "t_w", "t_d", "d", "t_c"}
    assert all(0.0 <= value < 0.15 for value in report.values())

    mismatched = params.with_overrides(rho_per_sec=params.rho_per_sec * 4)
    assert cip_rse_report(cip, mismatched)["t_a"] > report["t_a"]


@pytest.mark.slow
def test_static_structure_full_scale(params):
    graph = synthesize_graph(params, 50_000, 2016, RandomSource(1), workers=4)
    static = project_static(graph)
    assert degree_stats(static).pearson >= 0.7

    undirected = static.undirected()
    sampled = np.random.default_rng(0).choice(graph.n_nodes, size=500, replace=False).tolist()
    summary = clustering_coefficients(static, nodes=sampled)
    for node in sampled:
        neighbors = set(undirected[node]) - {node}
        k = len(neighbors)
        triangles = sum(1 for a, b in itertools.combinations(neighbors, 2) if undirected.has_edge(a, b))
        expected = 2.0 * triangles / (k * (k - 1)) if k >= 2 else 0.0
        assert summary.coefficients[node] == pytest.approx(expected)
    assert 0.03 <= clustering_coefficients(static).mean <= 0.15
