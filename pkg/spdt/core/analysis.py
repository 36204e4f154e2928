"""
Static projections, network statistics, histogram comparisons and
epidemic error metrics.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import networkx as nx
import numpy as np

from spdt.core.diffusion_engine import EpidemicTimeSeries
from spdt.core.distributions import geometric_pmf, mixture_degree_pmf, truncated_geometric_pmf
from spdt.core.errors import MetricError
from spdt.core.estimator import CipSamples, seconds_to_ceil_steps
from spdt.core.graph import TemporalGraph
from spdt.core.params import SpdtParams, seconds_to_steps

logger = logging.getLogger(__name__)

DEFAULT_TAIL_QUANTILE = 0.999


class StaticGraph:
    """Deduplicated host -> neighbor edges over the whole horizon."""

    def __init__(self, directed: nx.DiGraph):
        self.directed = directed

    @property
    def n_nodes(self) -> int:
        return self.directed.number_of_nodes()

    @property
    def n_edges(self) -> int:
        return self.directed.number_of_edges()

    def undirected(self) -> nx.Graph:
        return self.directed.to_undirected(as_view=False)

    def reversed(self) -> "StaticGraph":
        return StaticGraph(self.directed.reverse(copy=True))


def project_static(g: TemporalGraph) -> StaticGraph:
    directed = nx.DiGraph()
    directed.add_nodes_from(range(g.n_nodes))
    if g.n_links:
        pairs = np.unique(np.stack([g.link_host, g.link_neighbor], axis=1), axis=0)
        directed.add_edges_from(map(tuple, pairs.tolist()))
    return StaticGraph(directed)


# ----------------------------------------------------------------------
# Degrees and clustering
# ----------------------------------------------------------------------

@dataclass
class DegreeStats:
    in_degree: np.ndarray
    out_degree: np.ndarray
    in_histogram: np.ndarray
    out_histogram: np.ndarray
    pearson: float

    @property
    def mean_degree(self) -> float:
        return float(self.out_degree.mean()) if len(self.out_degree) else 0.0


def degree_stats(sg: StaticGraph) -> DegreeStats:
    """In/out degree histograms and their Pearson correlation over all nodes."""
    if sg.n_nodes < 2:
        raise MetricError(f"degree statistics need at least 2 nodes, got {sg.n_nodes}")
    nodes = sorted(sg.directed.nodes)
    in_degree = np.array([sg.directed.in_degree(n) for n in nodes], dtype=np.int64)
    out_degree = np.array([sg.directed.out_degree(n) for n in nodes], dtype=np.int64)
    if in_degree.std() == 0 or out_degree.std() == 0:
        pearson = float("nan")
        logger.warning("Constant degree sequence; Pearson correlation undefined")
    else:
        pearson = float(np.corrcoef(in_degree, out_degree)[0, 1])
    return DegreeStats(
        in_degree=in_degree,
        out_degree=out_degree,
        in_histogram=np.bincount(in_degree),
        out_histogram=np.bincount(out_degree),
        pearson=pearson,
    )


@dataclass
class ClusteringSummary:
    coefficients: Dict[int, float]
    mean: float


def clustering_coefficients(sg: StaticGraph, nodes: Optional[Sequence[int]] = None) -> ClusteringSummary:
    """Local clustering on the undirected projection; nodes of degree < 2 score 0."""
    undirected = sg.undirected()
    coefficients = nx.clustering(undirected, nodes=nodes)
    if not isinstance(coefficients, dict):
        coefficients = {nodes: coefficients}
    values = list(coefficients.values())
    mean = float(np.mean(values)) if values else 0.0
    return ClusteringSummary(coefficients=dict(coefficients), mean=mean)


# ----------------------------------------------------------------------
# Histograms
# ----------------------------------------------------------------------

def rse(observed: Sequence[float], reference: Sequence[float]) -> float:
    """Euclidean distance between two proportion histograms."""
    x = np.asarray(observed, dtype=np.float64)
    y = np.asarray(reference, dtype=np.float64)
    if x.shape != y.shape:
        raise MetricError(f"histogram bin counts differ: {x.shape} vs {y.shape}")
    for name, hist in (("observed", x), ("reference", y)):
        if hist.size and abs(hist.sum() - 1.0) > 1e-6:
            raise MetricError(f"{name} histogram sums to {hist.sum():.6g}, expected 1")
    return float(np.sqrt(np.sum((x - y) ** 2)))


@dataclass
class ProportionHistogram:
    """Unit-width integer bins starting at ``start``; the last bin pools the tail."""
    start: int
    proportions: np.ndarray

    @property
    def bins(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self.proportions))

    @property
    def tail_bin(self) -> int:
        return int(self.start + len(self.proportions) - 1)


def proportion_histogram(
    values: Sequence[float],
    tail_quantile: float = DEFAULT_TAIL_QUANTILE,
    start: Optional[int] = None,
) -> ProportionHistogram:
    data = np.asarray(values, dtype=np.int64)
    if data.size == 0:
        raise MetricError("cannot build a histogram from an empty sample")
    low = int(data.min()) if start is None else int(start)
    cut = max(low, int(np.ceil(np.quantile(data, tail_quantile))))
    counts = np.bincount(np.clip(data, low, cut) - low, minlength=cut - low + 1)
    return ProportionHistogram(start=low, proportions=counts / data.size)


def histogram_dump(hist: ProportionHistogram) -> List[str]:
    return [f"{b},{p:.10g}" for b, p in zip(hist.bins.tolist(), hist.proportions.tolist())]


def reference_on_bins(hist: ProportionHistogram, pmf) -> np.ndarray:
    """Analytic mass on the histogram's bins, tail mass pooled into the last bin."""
    bins = hist.bins
    mass = np.asarray(pmf(bins[:-1]), dtype=np.float64) if len(bins) > 1 else np.zeros(0)
    return np.append(mass, max(0.0, 1.0 - mass.sum()))


def cip_rse_report(cip: CipSamples, params: SpdtParams) -> Dict[str, float]:
    """RSE of every CIP histogram (step units) against its analytic law under ``params``."""
    step = params.step_seconds
    report: Dict[str, float] = {}

    geometric_laws = (
        ("t_a", cip.active_durations, params.rho),
        ("t_w", cip.waiting_periods, params.q),
        ("t_d", cip.link_durations, params.p_b),
    )
    for name, samples, p in geometric_laws:
        if len(samples) == 0:
            continue
        hist = proportion_histogram(seconds_to_ceil_steps(samples, step), start=1)
        report[name] = rse(hist.proportions, reference_on_bins(hist, lambda k, p=p: geometric_pmf(k, p)))

    if len(cip.degrees):
        hist = proportion_histogram(cip.degrees, start=1)
        report["d"] = rse(
            hist.proportions,
            reference_on_bins(hist, lambda k: mixture_degree_pmf(k, params.alpha, params.xi)),
        )

    if len(cip.creation_delays):
        delta_steps = seconds_to_steps(cip.delta_sec, step)
        windows = seconds_to_ceil_steps(cip.paired_durations, step) + delta_steps
        delays = np.minimum(seconds_to_ceil_steps(cip.creation_delays, step), windows)
        hist = proportion_histogram(delays, start=0)
        window_values, window_counts = np.unique(windows, return_counts=True)
        weights = window_counts / window_counts.sum()

        def delay_pmf(k: np.ndarray) -> np.ndarray:
            return sum(
                w * truncated_geometric_pmf(k, params.p_c, t_max)
                for w, t_max in zip(weights, window_values)
            )

        report["t_c"] = rse(hist.proportions, reference_on_bins(hist, delay_pmf))
    return report


# ----------------------------------------------------------------------
# Temporal density and epidemic metrics
# ----------------------------------------------------------------------

@dataclass
class DailyDensity:
    active_hosts: np.ndarray
    links: np.ndarray

    @property
    def links_per_active_host(self) -> np.ndarray:
        return np.divide(
            self.links, self.active_hosts,
            out=np.zeros(len(self.links), dtype=np.float64),
            where=self.active_hosts > 0,
        )


def daily_link_density(g: TemporalGraph) -> DailyDensity:
    """Per day: distinct hosts with a copy starting that day and links arriving that day."""
    days = max(1, g.horizon_days)
    spd = g.steps_per_day
    copy_day = np.minimum(g.copy_t_s.astype(np.int64) // spd, days - 1)
    link_day = np.minimum(g.link_t_s.astype(np.int64) // spd, days - 1)
    active = np.zeros(days, dtype=np.int64)
    if g.n_copies:
        host_days = np.unique(np.stack([g.copy_host.astype(np.int64), copy_day], axis=1), axis=0)
        active = np.bincount(host_days[:, 1], minlength=days)
    return DailyDensity(active_hosts=active, links=np.bincount(link_day, minlength=days))


@dataclass
class ApeReport:
    ape: np.ndarray
    mape: float
    std: float
    cumulative_ape: float
    skipped_days: int


def ape_mape(real: Sequence[float], observed: Sequence[float]) -> ApeReport:
    """Signed per-day APE = 100 (I_r - I_o) / I_r; days with I_r = 0 are skipped.

    MAPE and its std use |APE|. The cumulative APE compares the totals.
    """
    r = np.asarray(real, dtype=np.float64)
    o = np.asarray(observed, dtype=np.float64)
    if r.shape != o.shape:
        raise MetricError(f"series lengths differ: {len(r)} vs {len(o)}")
    compared = r > 0
    if not np.any(compared):
        raise MetricError("real series is zero on every day")
    ape = 100.0 * (r[compared] - o[compared]) / r[compared]
    magnitudes = np.abs(ape)
    return ApeReport(
        ape=ape,
        mape=float(magnitudes.mean()),
        std=float(magnitudes.std()),
        cumulative_ape=float(100.0 * (r.sum() - o.sum()) / r.sum()),
        skipped_days=int((~compared).sum()),
    )


@dataclass
class RunSummary:
    runs: int
    peak_prevalence: float
    peak_day: int
    mean_total_infected: float
    std_total_infected: float


def mean_prevalence(series: Sequence[EpidemicTimeSeries]) -> np.ndarray:
    if not series:
        return np.zeros(0)
    return np.mean([s.infected for s in series], axis=0)


def mean_new_infections(series: Sequence[EpidemicTimeSeries]) -> np.ndarray:
    if not series:
        return np.zeros(0)
    return np.mean([s.new_infections for s in series], axis=0)


def summarize_runs(series: Sequence[EpidemicTimeSeries]) -> RunSummary:
    """Peak of the run-mean prevalence curve, its day, and total-infection mean/std."""
    if not series:
        return RunSummary(0, 0.0, 0, 0.0, 0.0)
    prevalence = mean_prevalence(series)
    totals = np.array([s.total_infected for s in series], dtype=np.float64)
    return RunSummary(
        runs=len(series),
        peak_prevalence=float(prevalence.max()),
        peak_day=int(prevalence.argmax()),
        mean_total_infected=float(totals.mean()),
        std_total_infected=float(totals.std()),
    )
