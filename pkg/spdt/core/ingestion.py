"""
From raw location updates to proximity visits, SPDT links and CIP samples,
plus day-copy densification of sparse graphs.
"""

from __future__ import annotations

import bisect
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from spdt.core.errors import IngestionError
from spdt.core.estimator import CipSamples
from spdt.core.graph import TemporalGraph
from spdt.core.params import DEFAULT_STEP_SECONDS, SECONDS_PER_DAY, TimeStep, seconds_to_steps
from spdt.core.random_source import RandomSource, StreamDomain
from spdt.infra.logging import LogManager

logger = logging.getLogger(__name__)

DEFAULT_RADIUS_M = 20.0
DEFAULT_MAX_GAP_S = 1800.0
DEFAULT_DELTA_S = 10800.0
EARTH_RADIUS_M = 6_371_008.8


class CoordinateSystem(Enum):
    METERS = "meters"
    DEGREES = "degrees"


@dataclass(frozen=True)
class LocationUpdate:
    """One reported position. In degrees mode x is longitude and y latitude."""
    user: int
    x: float
    y: float
    t: float


@dataclass(frozen=True)
class ProximityVisit:
    user: int
    anchor_x: float
    anchor_y: float
    t_first: float
    t_last: float
    n_updates: int

    @property
    def span(self) -> float:
        return self.t_last - self.t_first


@dataclass(frozen=True)
class TrajectoryRowError:
    row_number: int
    messages: Sequence[str]


@dataclass
class TrajectoryBatch:
    coordinates: CoordinateSystem
    updates: List[LocationUpdate]
    errors: List[TrajectoryRowError] = field(default_factory=list)

    @property
    def skipped(self) -> int:
        return len(self.errors)

    @property
    def users(self) -> int:
        return len({update.user for update in self.updates})


@dataclass
class IngestionResult:
    graph: TemporalGraph
    cip: CipSamples
    user_ids: np.ndarray
    origin: float

    @property
    def counts(self) -> Dict[str, int]:
        return {
            "users": int(len(self.user_ids)),
            "copies": self.graph.n_copies,
            "links": self.graph.n_links,
        }


# ----------------------------------------------------------------------
# Distances
# ----------------------------------------------------------------------

def planar_distance(x1: float, y1: float, x2: float, y2: float) -> float:
    return math.hypot(x2 - x1, y2 - y1)


def haversine_distance(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    d_phi = phi2 - phi1
    d_lambda = math.radians(lon2 - lon1)
    h = math.sin(d_phi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(d_lambda / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def _distance_function(coordinates: CoordinateSystem):
    return haversine_distance if coordinates is CoordinateSystem.DEGREES else planar_distance


# ----------------------------------------------------------------------
# Visits
# ----------------------------------------------------------------------

def extract_visits(
    updates: Iterable[LocationUpdate],
    radius_m: float = DEFAULT_RADIUS_M,
    max_gap_s: float = DEFAULT_MAX_GAP_S,
    coordinates: CoordinateSystem = CoordinateSystem.METERS,
) -> List[ProximityVisit]:
    """Greedy stay detection per user.

    A visit opens at an update and absorbs the following updates while they
    stay within ``radius_m`` of that first update and follow the previous one
    by at most ``max_gap_s``. The breaking update opens the next visit.
    Updates with non-finite fields are skipped.
    """
    distance = _distance_function(coordinates)
    by_user: Dict[int, List[LocationUpdate]] = defaultdict(list)
    skipped = 0
    for update in updates:
        if not all(math.isfinite(v) for v in (update.x, update.y, update.t)):
            skipped += 1
            continue
        by_user[update.user].append(update)
    if skipped:
        logger.warning(f"Skipped {skipped} location updates with non-finite fields")

    visits: List[ProximityVisit] = []
    for user in sorted(by_user):
        trail = sorted(by_user[user], key=lambda u: u.t)
        anchor = trail[0]
        last = anchor
        count = 1
        for update in trail[1:]:
            within = distance(anchor.x, anchor.y, update.x, update.y) <= radius_m
            if within and update.t - last.t <= max_gap_s:
                last = update
                count += 1
                continue
            visits.append(ProximityVisit(user, anchor.x, anchor.y, anchor.t, last.t, count))
            anchor = last = update
            count = 1
        visits.append(ProximityVisit(user, anchor.x, anchor.y, anchor.t, last.t, count))
    return visits


# ----------------------------------------------------------------------
# Real graph
# ----------------------------------------------------------------------

class _VisitGrid:
    """Neighbor-eligible visits bucketed by spatial cell, each bucket sorted by arrival."""

    def __init__(self, visits: Sequence[ProximityVisit], cell_m: float, coordinates: CoordinateSystem):
        self.cell_m = cell_m
        self.coordinates = coordinates
        self._lat_scale = 1.0
        if coordinates is CoordinateSystem.DEGREES and visits:
            mean_lat = sum(v.anchor_y for v in visits) / len(visits)
            self._lat_scale = math.cos(math.radians(mean_lat))
        buckets: Dict[Tuple[int, int], List[Tuple[float, int]]] = defaultdict(list)
        for index, visit in enumerate(visits):
            buckets[self.cell_of(visit)].append((visit.t_first, index))
        self._arrivals: Dict[Tuple[int, int], List[float]] = {}
        self._members: Dict[Tuple[int, int], List[int]] = {}
        for cell, entries in buckets.items():
            entries.sort()
            self._arrivals[cell] = [t for t, _ in entries]
            self._members[cell] = [i for _, i in entries]

    def _project(self, x: float, y: float) -> Tuple[float, float]:
        if self.coordinates is CoordinateSystem.DEGREES:
            return (
                math.radians(x) * EARTH_RADIUS_M * self._lat_scale,
                math.radians(y) * EARTH_RADIUS_M,
            )
        return x, y

    def cell_of(self, visit: ProximityVisit) -> Tuple[int, int]:
        px, py = self._project(visit.anchor_x, visit.anchor_y)
        return math.floor(px / self.cell_m), math.floor(py / self.cell_m)

    def arrivals_between(self, visit: ProximityVisit, t_low: float, t_high: float) -> List[int]:
        cx, cy = self.cell_of(visit)
        found: List[int] = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cell = (cx + dx, cy + dy)
                arrivals = self._arrivals.get(cell)
                if arrivals is None:
                    continue
                lo = bisect.bisect_left(arrivals, t_low)
                hi = bisect.bisect_right(arrivals, t_high)
                found.extend(self._members[cell][lo:hi])
        return found


def build_real_graph(
    visits: Sequence[ProximityVisit],
    delta_sec: float = DEFAULT_DELTA_S,
    radius_m: float = DEFAULT_RADIUS_M,
    step_seconds: int = DEFAULT_STEP_SECONDS,
    coordinates: CoordinateSystem = CoordinateSystem.METERS,
) -> IngestionResult:
    """Turn visits into active copies and SPDT links.

    Host visit [t1, tk] links to another user's visit [t1', tj'] when the
    anchors are within ``radius_m`` and t1 <= t1' <= tk + delta. Neighbor
    visits need at least two updates. Copies are emitted for host visits
    with at least one link. Step 0 is midnight (UTC) of the earliest visit.
    """
    if step_seconds <= 0:
        raise IngestionError("step_seconds must be positive")
    users = sorted({v.user for v in visits})
    user_index = {user: node for node, user in enumerate(users)}
    if not visits:
        empty = TemporalGraph(n_nodes=0, horizon=0, step_seconds=step_seconds,
                              delta_steps=seconds_to_steps(delta_sec, step_seconds))
        return IngestionResult(empty, CipSamples(delta_sec=delta_sec), np.zeros(0, dtype=np.int64), 0.0)

    distance = _distance_function(coordinates)
    delta_steps = seconds_to_steps(delta_sec, step_seconds)
    origin = math.floor(min(v.t_first for v in visits) / SECONDS_PER_DAY) * SECONDS_PER_DAY

    hosts = sorted(visits, key=lambda v: (user_index[v.user], v.t_first, v.t_last))
    eligible = [v for v in visits if v.n_updates >= 2 and v.span > 0]
    grid = _VisitGrid(eligible, cell_m=2.0 * radius_m, coordinates=coordinates)

    copy_rows: List[Tuple[int, int, int]] = []
    link_rows: List[Tuple[int, int, int, int]] = []
    cip_active: List[float] = []
    cip_degrees: List[int] = []
    cip_delays: List[float] = []
    cip_paired: List[float] = []
    cip_link_durations: List[float] = []
    emitted: List[ProximityVisit] = []

    for host in hosts:
        candidates = grid.arrivals_between(host, host.t_first, host.t_last + delta_sec)
        neighbors = [
            eligible[i] for i in candidates
            if eligible[i].user != host.user
            and distance(host.anchor_x, host.anchor_y, eligible[i].anchor_x, eligible[i].anchor_y) <= radius_m
        ]
        if not neighbors:
            continue
        neighbors.sort(key=lambda u: (u.t_first, user_index[u.user], u.t_last))

        active_sec = host.span if host.span > 0 else float(step_seconds)
        t_s = int((host.t_first - origin) // step_seconds)
        t_l = t_s + max(1, math.ceil(active_sec / step_seconds))
        copy_index = len(copy_rows)
        copy_rows.append((user_index[host.user], t_s, t_l))
        emitted.append(host)
        cip_active.append(active_sec)
        cip_degrees.append(len(neighbors))

        for neighbor in neighbors:
            delay = neighbor.t_first - host.t_first
            duration = neighbor.span
            t_s_prime = int((neighbor.t_first - origin) // step_seconds)
            t_s_prime = min(max(t_s_prime, t_s), t_l + delta_steps)
            t_l_prime = t_s_prime + max(1, math.ceil(duration / step_seconds))
            link_rows.append((copy_index, user_index[neighbor.user], t_s_prime, t_l_prime))
            cip_delays.append(delay)
            cip_paired.append(active_sec)
            cip_link_durations.append(duration)

    last_time = max(v.t_last for v in visits)
    horizon_days = max(1, math.ceil((last_time - origin + 1) / SECONDS_PER_DAY))
    horizon = TimeStep.at_day(horizon_days, step_seconds).index
    copy_array = np.asarray(copy_rows, dtype=np.int64).reshape(-1, 3)
    if copy_array.size:
        horizon = max(horizon, int(copy_array[:, 2].max()) - delta_steps)

    copy_ids = _ordinals(copy_array[:, 0])
    link_array = np.asarray(link_rows, dtype=np.int64).reshape(-1, 4)
    graph = TemporalGraph(
        n_nodes=len(users),
        horizon=horizon,
        step_seconds=step_seconds,
        delta_steps=delta_steps,
        copy_host=copy_array[:, 0],
        copy_id=copy_ids,
        copy_t_s=copy_array[:, 1],
        copy_t_l=copy_array[:, 2],
        link_copy=link_array[:, 0],
        link_neighbor=link_array[:, 1],
        link_t_s=link_array[:, 2],
        link_t_l=link_array[:, 3],
    ).validate(strict_order=False)

    observation_days = horizon * step_seconds / SECONDS_PER_DAY
    copies_per_user = np.bincount(copy_array[:, 0], minlength=len(users))
    cip = CipSamples(
        active_durations=cip_active,
        activation_frequencies=copies_per_user / observation_days,
        degrees=cip_degrees,
        creation_delays=cip_delays,
        paired_durations=cip_paired,
        link_durations=cip_link_durations,
        waiting_periods=_waiting_periods(emitted),
        observation_days=observation_days,
        delta_sec=delta_sec,
    )
    logger.info(f"Built real graph from {len(visits)} visits of {len(users)} users: {graph}")
    return IngestionResult(graph=graph, cip=cip, user_ids=np.asarray(users, dtype=np.int64), origin=float(origin))


def _ordinals(hosts: np.ndarray) -> np.ndarray:
    """Per-host running index of copies already sorted by host."""
    ordinals = np.zeros(len(hosts), dtype=np.int64)
    for i in range(1, len(hosts)):
        if hosts[i] == hosts[i - 1]:
            ordinals[i] = ordinals[i - 1] + 1
    return ordinals


def _waiting_periods(emitted: Sequence[ProximityVisit]) -> List[float]:
    """Gaps in seconds between consecutive emitted host visits of one user."""
    waiting: List[float] = []
    for before, after in zip(emitted, emitted[1:]):
        if before.user == after.user and after.t_first > before.t_last:
            waiting.append(after.t_first - before.t_last)
    return waiting


# ----------------------------------------------------------------------
# Densification
# ----------------------------------------------------------------------

def densify(g: TemporalGraph, horizon_days: int, rng: RandomSource) -> TemporalGraph:
    """Fill every empty day of each host with a copy of one of its active days.

    For each host and each day in [0, horizon_days) without copies, a day with
    copies is picked uniformly (one draw from the host's DENSIFY stream) and
    its copies and links are replicated, shifted by whole days. Hosts with no
    active day stay empty.
    """
    if horizon_days < 1:
        raise IngestionError(f"horizon_days must be >= 1, got {horizon_days}")
    steps_per_day = g.steps_per_day
    copy_day = g.copy_t_s.astype(np.int64) // steps_per_day

    link_order = np.argsort(g.link_copy, kind="stable")
    link_offsets = np.concatenate(([0], np.cumsum(g.links_per_copy())))

    copies_by_host_day: Dict[int, Dict[int, List[int]]] = defaultdict(lambda: defaultdict(list))
    for index in np.lexsort((g.copy_t_s, g.copy_host)):
        day = int(copy_day[index])
        if day < horizon_days:
            copies_by_host_day[int(g.copy_host[index])][day].append(int(index))

    truncated = int(np.count_nonzero(copy_day >= horizon_days))
    if truncated:
        logger.warning(f"Densify drops {truncated} copies that start on or after day {horizon_days}")
        LogManager().emit("ingestion", "DENSIFY_TRUNCATED", {
            "horizon_days": horizon_days,
            "dropped_copies": truncated,
            "dropped_links": int(g.links_per_copy()[copy_day >= horizon_days].sum()),
        })

    copy_host, copy_t_s, copy_t_l = [], [], []
    link_copy, link_neighbor, link_t_s, link_t_l = [], [], [], []

    def emit(source: int, shift: int) -> None:
        new_index = len(copy_host)
        copy_host.append(int(g.copy_host[source]))
        copy_t_s.append(int(g.copy_t_s[source]) + shift)
        copy_t_l.append(int(g.copy_t_l[source]) + shift)
        for position in range(link_offsets[source], link_offsets[source + 1]):
            link = link_order[position]
            link_copy.append(new_index)
            link_neighbor.append(int(g.link_neighbor[link]))
            link_t_s.append(int(g.link_t_s[link]) + shift)
            link_t_l.append(int(g.link_t_l[link]) + shift)

    filled_days = 0
    for host in sorted(copies_by_host_day):
        by_day = copies_by_host_day[host]
        active_days = sorted(by_day)
        host_rng = rng.stream(StreamDomain.DENSIFY, host)
        for day in range(horizon_days):
            if day in by_day:
                source_day, shift = day, 0
            else:
                pick = min(int(host_rng.uniform() * len(active_days)), len(active_days) - 1)
                source_day = active_days[pick]
                shift = (day - source_day) * steps_per_day
                filled_days += 1
            for source in by_day[source_day]:
                emit(source, shift)

    horizon = max(g.horizon, TimeStep.at_day(horizon_days, g.step_seconds).index)
    if copy_t_l:
        horizon = max(horizon, max(copy_t_l) - g.delta_steps)
    copy_host_array = np.asarray(copy_host, dtype=np.int64)
    order = np.lexsort((np.asarray(copy_t_s, dtype=np.int64), copy_host_array))
    remap = np.empty(len(order), dtype=np.int64)
    remap[order] = np.arange(len(order))

    dense = TemporalGraph(
        n_nodes=g.n_nodes,
        horizon=horizon,
        step_seconds=g.step_seconds,
        delta_steps=g.delta_steps,
        copy_host=copy_host_array[order],
        copy_id=_ordinals(copy_host_array[order]),
        copy_t_s=np.asarray(copy_t_s, dtype=np.int64)[order],
        copy_t_l=np.asarray(copy_t_l, dtype=np.int64)[order],
        link_copy=remap[np.asarray(link_copy, dtype=np.int64)] if link_copy else np.zeros(0, dtype=np.int64),
        link_neighbor=link_neighbor,
        link_t_s=link_t_s,
        link_t_l=link_t_l,
        lambdas=g.lambdas,
    ).validate(strict_order=False)
    logger.info(f"Densified over {horizon_days} days, filled {filled_days} host-days: {dense}")
    return dense
