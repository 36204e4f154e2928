"""
SPDT graph synthesis and the two baseline graphs.

Each node owns an independent random stream (StreamDomain.NODE, node id) and
its own ContactHistory, so hosts can be generated in any order or in
parallel; results are merged in node-id order.

Per host the draw order is fixed: timeline, then for every active copy the
activation degree, the neighbor slots, and (t_c, t_d) per neighbor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from spdt.core.distributions import (
    sample_activation_degree,
    sample_bounded_power_law,
    sample_geometric,
    sample_truncated_geometric,
)
from spdt.core.errors import DistributionError, NeighborSelectionError
from spdt.core.graph import ActiveCopy, SpdtLink, TemporalGraph
from spdt.core.params import DEFAULT_STEP_SECONDS, SpdtParams, validate_params
from spdt.core.random_source import RandomSource, StreamDomain
from spdt.infra.logging import LogManager
from spdt.infra.parallel import chunk_ranges, map_ordered

logger = logging.getLogger(__name__)

MAX_ATTEMPTS_PER_SLOT = 100_000


@dataclass(frozen=True)
class ActivityTimeline:
    """Alternating active/inactive periods of one node, in steps."""

    node: int
    periods: Tuple[int, ...]
    initially_active: bool

    def active_intervals(self) -> List[Tuple[int, int]]:
        """(t_s, t_l) of every active period."""
        intervals = []
        clock = 0
        active = self.initially_active
        for length in self.periods:
            if active:
                intervals.append((clock, clock + length))
            clock += length
            active = not active
        return intervals

    @property
    def total_steps(self) -> int:
        return sum(self.periods)

    @property
    def active_steps(self) -> int:
        return sum(t_l - t_s for t_s, t_l in self.active_intervals())


@dataclass
class ContactHistory:
    """Contacts a host has already made; grows for the whole horizon."""

    host: int
    contacts: List[int] = field(default_factory=list)
    _members: Set[int] = field(default_factory=set, repr=False)

    @property
    def n_t(self) -> int:
        return len(self.contacts)

    def __contains__(self, node: int) -> bool:
        return node in self._members

    def add(self, node: int) -> None:
        if node not in self._members:
            self._members.add(node)
            self.contacts.append(node)


# ----------------------------------------------------------------------
# Node activation
# ----------------------------------------------------------------------

def generate_timeline(params: SpdtParams, horizon: int, rng: RandomSource, node: int = 0) -> ActivityTimeline:
    """Alternate geometric active (rho) and inactive (q) periods until ``horizon``.

    The initial state is active with the equilibrium probability
    q / (q + rho). The last period is cut at the horizon.
    """
    if horizon < 1:
        raise DistributionError(f"horizon must be >= 1, got {horizon}")
    rho, q = params.rho, params.q
    initially_active = rng.uniform() < params.active_equilibrium

    periods: List[int] = []
    clock = 0
    active = initially_active
    while clock < horizon:
        length = sample_geometric(rho if active else q, rng)
        length = min(length, horizon - clock)
        periods.append(length)
        clock += length
        active = not active
    return ActivityTimeline(node=node, periods=tuple(periods), initially_active=initially_active)


def assign_lambdas(n_nodes: int, params: SpdtParams, rng: RandomSource) -> np.ndarray:
    """One bounded power-law draw of public accessibility per node."""
    return np.asarray(
        sample_bounded_power_law(params.alpha, params.xi, params.psi, rng, size=n_nodes),
        dtype=np.float64,
    )


# ----------------------------------------------------------------------
# Neighbor selection and link timing
# ----------------------------------------------------------------------

def select_neighbors(
    host: int,
    d: int,
    history: ContactHistory,
    lambdas: np.ndarray,
    eta: float,
    rng: RandomSource,
    cumulative: Optional[np.ndarray] = None,
) -> List[int]:
    """Pick ``d`` distinct neighbors by the reinforcement rule.

    Each slot repeats a known contact with probability n_t / (n_t + eta),
    otherwise takes a new node with probability proportional to lambda.
    A slot whose pick is the host, a duplicate within this copy or (for a
    new pick) an existing contact is redrawn from scratch.
    """
    n_nodes = len(lambdas)
    if d < 1:
        raise NeighborSelectionError(f"activation degree must be >= 1, got {d}")
    if d >= n_nodes:
        raise NeighborSelectionError(
            f"host {host} needs {d} neighbors but only {n_nodes - 1} other nodes exist"
        )
    if cumulative is None:
        cumulative = np.cumsum(lambdas)
    total_weight = float(cumulative[-1])

    chosen: List[int] = []
    chosen_set: Set[int] = set()
    attempts = 0
    while len(chosen) < d:
        attempts += 1
        if attempts > MAX_ATTEMPTS_PER_SLOT * d:
            raise NeighborSelectionError(f"host {host} could not find {d} distinct neighbors")

        n_t = history.n_t
        repeat = rng.uniform() < n_t / (n_t + eta)
        if repeat:
            candidate = history.contacts[min(int(rng.uniform() * n_t), n_t - 1)]
            if candidate in chosen_set:
                continue
        else:
            index = int(np.searchsorted(cumulative, rng.uniform() * total_weight, side="right"))
            candidate = min(index, n_nodes - 1)
            if candidate == host or candidate in history or candidate in chosen_set:
                continue
            history.add(candidate)
        chosen.append(candidate)
        chosen_set.add(candidate)
    return chosen


def generate_links(copy: ActiveCopy, neighbors: Sequence[int], params: SpdtParams, rng: RandomSource) -> List[SpdtLink]:
    """Draw creation delay (truncated over t_a + delta) and duration for each neighbor."""
    window = copy.duration + params.delta_steps
    p_c, p_b = params.p_c, params.p_b
    links = []
    for neighbor in neighbors:
        t_c = sample_truncated_geometric(p_c, window, rng)
        t_d = sample_geometric(p_b, rng)
        t_s_prime = copy.t_s + t_c
        links.append(SpdtLink(copy=copy, neighbor=int(neighbor), t_s_prime=t_s_prime, t_l_prime=t_s_prime + t_d))
    return links


# ----------------------------------------------------------------------
# Full synthesis
# ----------------------------------------------------------------------

# Read-only state shared by host workers (set once per process).
_worker_state: Dict[str, object] = {}


def _init_worker(params: SpdtParams, horizon: int, seed: int, lambdas: np.ndarray) -> None:
    _worker_state["params"] = params
    _worker_state["horizon"] = horizon
    _worker_state["seed"] = seed
    _worker_state["lambdas"] = lambdas
    _worker_state["cumulative"] = np.cumsum(lambdas)


def _synthesize_hosts(host_range: Tuple[int, int]) -> Dict[str, np.ndarray]:
    params: SpdtParams = _worker_state["params"]
    horizon: int = _worker_state["horizon"]
    seed: int = _worker_state["seed"]
    lambdas: np.ndarray = _worker_state["lambdas"]
    cumulative: np.ndarray = _worker_state["cumulative"]
    n_nodes = len(lambdas)
    delta = params.delta_steps

    copy_host: List[int] = []
    copy_id: List[int] = []
    copy_t_s: List[int] = []
    copy_t_l: List[int] = []
    link_copy: List[int] = []
    link_neighbor: List[int] = []
    link_t_s: List[int] = []
    link_t_l: List[int] = []

    for host in range(*host_range):
        rng = RandomSource(seed, host, StreamDomain.NODE)
        timeline = generate_timeline(params, horizon, rng, node=host)
        history = ContactHistory(host)
        lam = float(lambdas[host])
        for ordinal, (t_s, t_l) in enumerate(timeline.active_intervals()):
            copy = ActiveCopy(host=host, copy_id=ordinal, t_s=t_s, t_l=t_l, expiry=t_l + delta)
            d = min(sample_activation_degree(lam, rng), n_nodes - 1)
            neighbors = select_neighbors(host, d, history, lambdas, params.eta, rng, cumulative)
            local_index = len(copy_host)
            copy_host.append(host)
            copy_id.append(ordinal)
            copy_t_s.append(t_s)
            copy_t_l.append(t_l)
            for link in generate_links(copy, neighbors, params, rng):
                link_copy.append(local_index)
                link_neighbor.append(link.neighbor)
                link_t_s.append(link.t_s_prime)
                link_t_l.append(link.t_l_prime)

    return {
        "copy_host": np.asarray(copy_host, dtype=np.int64),
        "copy_id": np.asarray(copy_id, dtype=np.int64),
        "copy_t_s": np.asarray(copy_t_s, dtype=np.int64),
        "copy_t_l": np.asarray(copy_t_l, dtype=np.int64),
        "link_copy": np.asarray(link_copy, dtype=np.int64),
        "link_neighbor": np.asarray(link_neighbor, dtype=np.int64),
        "link_t_s": np.asarray(link_t_s, dtype=np.int64),
        "link_t_l": np.asarray(link_t_l, dtype=np.int64),
    }


def synthesize_graph(
    params: SpdtParams,
    n_nodes: int,
    horizon: int,
    rng: RandomSource,
    workers: int = 1,
) -> TemporalGraph:
    """Generate an SPDT temporal graph of ``n_nodes`` over ``horizon`` steps.

    Only ``rng.seed`` is used: lambdas come from the LAMBDA stream and each
    host from its own NODE stream, so any worker count gives the same graph.
    """
    validate_params(params)
    if n_nodes < 2:
        raise NeighborSelectionError(f"an SPDT graph needs at least 2 nodes, got {n_nodes}")
    if horizon < 1:
        raise DistributionError(f"horizon must be >= 1, got {horizon}")

    lambdas = assign_lambdas(n_nodes, params, rng.stream(StreamDomain.LAMBDA, 0))
    chunks = chunk_ranges(n_nodes, workers, min_chunk=256)
    parts = map_ordered(
        _synthesize_hosts,
        chunks,
        workers=workers,
        initializer=_init_worker,
        initargs=(params, horizon, rng.seed, lambdas),
    )

    copy_offsets = np.cumsum([0] + [len(part["copy_host"]) for part in parts[:-1]])
    columns = {name: np.concatenate([part[name] for part in parts]) for name in parts[0]}
    columns["link_copy"] = np.concatenate(
        [part["link_copy"] + offset for part, offset in zip(parts, copy_offsets)]
    )

    graph = TemporalGraph(
        n_nodes=n_nodes,
        horizon=horizon,
        step_seconds=params.step_seconds,
        delta_steps=params.delta_steps,
        lambdas=lambdas,
        **columns,
    )
    logger.info(f"Synthesized {graph}")
    LogManager().emit("generator", "GRAPH_SYNTHESIZED", {
        "nodes": n_nodes,
        "horizon": horizon,
        "copies": graph.n_copies,
        "links": graph.n_links,
        "seed": rng.seed,
    })
    return graph


# ----------------------------------------------------------------------
# Baselines
# ----------------------------------------------------------------------

def clip_to_spst(g: TemporalGraph) -> TemporalGraph:
    """Same-place-same-time projection: keep only co-presence.

    Indirect-only links are dropped and links outlasting the host are cut at
    the host's departure. Copies are kept, including those left without links.
    """
    host_departure = g.link_copy_t_l
    keep = g.link_t_s < host_departure
    return g.with_links(
        link_copy=g.link_copy[keep],
        link_neighbor=g.link_neighbor[keep],
        link_t_s=g.link_t_s[keep],
        link_t_l=np.minimum(g.link_t_l[keep], host_departure[keep]),
    )


def badn_activation_potential(f_per_day: float, stay_minutes: float, period_minutes: float = 1440.0) -> float:
    """Per-step activation probability p = f * dt / T."""
    return f_per_day * stay_minutes / period_minutes


def generate_badn(
    n_nodes: int,
    p: float,
    m: int,
    horizon: int,
    rng: RandomSource,
    step_seconds: int = DEFAULT_STEP_SECONDS,
) -> TemporalGraph:
    """Basic activity-driven network.

    Every step each node activates with probability ``p`` and links to ``m``
    distinct uniformly chosen other nodes. Each activation is a one-step
    active copy and its links last exactly that step (direct-only, delta 0).
    """
    if not 0.0 < p < 1.0:
        raise DistributionError(f"activation potential must lie in (0, 1), got {p!r}")
    if m < 1:
        raise DistributionError(f"m must be >= 1, got {m}")
    if m >= n_nodes:
        raise NeighborSelectionError(f"m={m} links need more than {n_nodes} nodes")

    activations_so_far = np.zeros(n_nodes, dtype=np.int64)
    copy_host, copy_id, copy_t_s = [], [], []
    link_neighbor_blocks = []
    for t in range(horizon):
        active = np.flatnonzero(rng.uniforms(n_nodes) < p)
        if active.size == 0:
            continue
        targets = _draw_distinct_targets(active, m, n_nodes, rng)
        copy_host.append(active)
        copy_id.append(activations_so_far[active])
        activations_so_far[active] += 1
        copy_t_s.append(np.full(active.size, t, dtype=np.int64))
        link_neighbor_blocks.append(targets.reshape(-1))

    if copy_host:
        hosts = np.concatenate(copy_host)
        starts = np.concatenate(copy_t_s)
        ids = np.concatenate(copy_id)
        neighbors = np.concatenate(link_neighbor_blocks)
    else:
        hosts = starts = ids = neighbors = np.zeros(0, dtype=np.int64)

    link_copy = np.repeat(np.arange(hosts.size, dtype=np.int64), m)
    link_t_s = np.repeat(starts, m)
    graph = TemporalGraph(
        n_nodes=n_nodes,
        horizon=horizon,
        step_seconds=step_seconds,
        delta_steps=0,
        copy_host=hosts,
        copy_id=ids,
        copy_t_s=starts,
        copy_t_l=starts + 1,
        link_copy=link_copy,
        link_neighbor=neighbors,
        link_t_s=link_t_s,
        link_t_l=link_t_s + 1,
    )
    logger.info(f"Generated BADN baseline {graph}")
    return graph


def _draw_distinct_targets(hosts: np.ndarray, m: int, n_nodes: int, rng: RandomSource) -> np.ndarray:
    """m distinct non-host targets per row; rows with a repeat are redrawn whole."""
    targets = _uniform_others(hosts, m, n_nodes, rng)
    if m == 1:
        return targets
    while True:
        ordered = np.sort(targets, axis=1)
        repeated = np.flatnonzero(np.any(ordered[:, 1:] == ordered[:, :-1], axis=1))
        if repeated.size == 0:
            return targets
        targets[repeated] = _uniform_others(hosts[repeated], m, n_nodes, rng)


def _uniform_others(hosts: np.ndarray, m: int, n_nodes: int, rng: RandomSource) -> np.ndarray:
    u = rng.uniforms(hosts.size * m).reshape(hosts.size, m)
    picks = np.minimum((u * (n_nodes - 1)).astype(np.int64), n_nodes - 2)
    return picks + (picks >= hosts[:, None])
