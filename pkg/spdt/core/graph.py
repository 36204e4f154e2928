"""
Temporal SPDT graph: nodes, active copies and links over a discrete horizon.

Copies and links are stored column-wise in read-only numpy arrays so that
graphs with millions of links stay compact and can be shared read-only by
parallel workers. ``ActiveCopy`` and ``SpdtLink`` objects are materialised
on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Sequence

import numpy as np

from spdt.core.errors import GraphValidationError
from spdt.core.params import SECONDS_PER_DAY


class LinkComponent(Enum):
    """Which transmission components an SPDT link carries."""
    DIRECT_ONLY = "direct-only"
    INDIRECT_ONLY = "indirect-only"
    BOTH = "both"

    @property
    def code(self) -> int:
        return _COMPONENT_CODES[self]


_COMPONENT_CODES = {
    LinkComponent.DIRECT_ONLY: 0,
    LinkComponent.INDIRECT_ONLY: 1,
    LinkComponent.BOTH: 2,
}
_COMPONENTS_BY_CODE = {code: component for component, code in _COMPONENT_CODES.items()}


def classify_component(t_l: int, t_s_prime: int, t_l_prime: int) -> LinkComponent:
    if t_s_prime >= t_l:
        return LinkComponent.INDIRECT_ONLY
    if t_l_prime <= t_l:
        return LinkComponent.DIRECT_ONLY
    return LinkComponent.BOTH


def classify_components(t_l: np.ndarray, t_s_prime: np.ndarray, t_l_prime: np.ndarray) -> np.ndarray:
    """Vectorised ``classify_component`` returning component codes (int8)."""
    codes = np.full(len(t_s_prime), LinkComponent.BOTH.code, dtype=np.int8)
    codes[t_l_prime <= t_l] = LinkComponent.DIRECT_ONLY.code
    codes[t_s_prime >= t_l] = LinkComponent.INDIRECT_ONLY.code
    return codes


@dataclass(frozen=True)
class ActiveCopy:
    """One active period of a host node, with its indirect window."""
    host: int
    copy_id: int
    t_s: int
    t_l: int
    expiry: int

    @property
    def duration(self) -> int:
        return self.t_l - self.t_s


@dataclass(frozen=True)
class SpdtLink:
    """Directed transmission opportunity from an active copy to a neighbor."""
    copy: ActiveCopy
    neighbor: int
    t_s_prime: int
    t_l_prime: int

    @property
    def component(self) -> LinkComponent:
        return classify_component(self.copy.t_l, self.t_s_prime, self.t_l_prime)

    @property
    def creation_delay(self) -> int:
        return self.t_s_prime - self.copy.t_s

    @property
    def duration(self) -> int:
        return self.t_l_prime - self.t_s_prime


# Steps, node ids and copy indices all fit in 32 bits; large BADN graphs
# carry tens of millions of links.
INDEX_DTYPE = np.int32


def _frozen(values: Sequence[int] | np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(values, dtype=INDEX_DTYPE)
    array.setflags(write=False)
    return array


class TemporalGraph:
    """Node set, active copies and links over ``horizon`` steps."""

    def __init__(
        self,
        n_nodes: int,
        horizon: int,
        step_seconds: int,
        delta_steps: int,
        copy_host: Sequence[int] | np.ndarray = (),
        copy_id: Sequence[int] | np.ndarray = (),
        copy_t_s: Sequence[int] | np.ndarray = (),
        copy_t_l: Sequence[int] | np.ndarray = (),
        link_copy: Sequence[int] | np.ndarray = (),
        link_neighbor: Sequence[int] | np.ndarray = (),
        link_t_s: Sequence[int] | np.ndarray = (),
        link_t_l: Sequence[int] | np.ndarray = (),
        lambdas: Optional[np.ndarray] = None,
    ):
        self.n_nodes = int(n_nodes)
        self.horizon = int(horizon)
        self.step_seconds = int(step_seconds)
        self.delta_steps = int(delta_steps)
        self.copy_host = _frozen(copy_host)
        self.copy_id = _frozen(copy_id)
        self.copy_t_s = _frozen(copy_t_s)
        self.copy_t_l = _frozen(copy_t_l)
        self.link_copy = _frozen(link_copy)
        self.link_neighbor = _frozen(link_neighbor)
        self.link_t_s = _frozen(link_t_s)
        self.link_t_l = _frozen(link_t_l)
        if lambdas is not None:
            lambdas = np.array(lambdas, dtype=np.float64)
            lambdas.setflags(write=False)
        self.lambdas = lambdas

    # ------------------------------------------------------------------
    # Sizes and derived columns
    # ------------------------------------------------------------------

    @property
    def n_copies(self) -> int:
        return len(self.copy_host)

    @property
    def n_links(self) -> int:
        return len(self.link_copy)

    @property
    def steps_per_day(self) -> int:
        return SECONDS_PER_DAY // self.step_seconds

    @property
    def horizon_days(self) -> int:
        return -(-self.horizon * self.step_seconds // SECONDS_PER_DAY)

    @property
    def copy_expiry(self) -> np.ndarray:
        return self.copy_t_l + self.delta_steps

    @property
    def link_host(self) -> np.ndarray:
        return self.copy_host[self.link_copy]

    @property
    def link_copy_t_s(self) -> np.ndarray:
        return self.copy_t_s[self.link_copy]

    @property
    def link_copy_t_l(self) -> np.ndarray:
        return self.copy_t_l[self.link_copy]

    def link_components(self) -> np.ndarray:
        return classify_components(self.link_copy_t_l, self.link_t_s, self.link_t_l)

    def links_per_copy(self) -> np.ndarray:
        return np.bincount(self.link_copy, minlength=self.n_copies)

    # ------------------------------------------------------------------
    # Object views
    # ------------------------------------------------------------------

    def copy(self, index: int) -> ActiveCopy:
        t_l = int(self.copy_t_l[index])
        return ActiveCopy(
            host=int(self.copy_host[index]),
            copy_id=int(self.copy_id[index]),
            t_s=int(self.copy_t_s[index]),
            t_l=t_l,
            expiry=t_l + self.delta_steps,
        )

    def link(self, index: int) -> SpdtLink:
        return SpdtLink(
            copy=self.copy(int(self.link_copy[index])),
            neighbor=int(self.link_neighbor[index]),
            t_s_prime=int(self.link_t_s[index]),
            t_l_prime=int(self.link_t_l[index]),
        )

    def copies(self) -> Iterator[ActiveCopy]:
        for index in range(self.n_copies):
            yield self.copy(index)

    def links(self) -> Iterator[SpdtLink]:
        for index in range(self.n_links):
            yield self.link(index)

    def component_of(self, index: int) -> LinkComponent:
        return _COMPONENTS_BY_CODE[int(self.link_components()[index])]

    # ------------------------------------------------------------------
    # Derivation
    # ------------------------------------------------------------------

    def with_links(
        self,
        link_copy: np.ndarray,
        link_neighbor: np.ndarray,
        link_t_s: np.ndarray,
        link_t_l: np.ndarray,
        delta_steps: Optional[int] = None,
    ) -> "TemporalGraph":
        """Same nodes and copies, different link set."""
        return TemporalGraph(
            n_nodes=self.n_nodes,
            horizon=self.horizon,
            step_seconds=self.step_seconds,
            delta_steps=self.delta_steps if delta_steps is None else delta_steps,
            copy_host=self.copy_host,
            copy_id=self.copy_id,
            copy_t_s=self.copy_t_s,
            copy_t_l=self.copy_t_l,
            link_copy=link_copy,
            link_neighbor=link_neighbor,
            link_t_s=link_t_s,
            link_t_l=link_t_l,
            lambdas=self.lambdas,
        )

    def same_as(self, other: "TemporalGraph") -> bool:
        scalars = (self.n_nodes, self.horizon, self.step_seconds, self.delta_steps)
        if scalars != (other.n_nodes, other.horizon, other.step_seconds, other.delta_steps):
            return False
        columns = (
            "copy_host", "copy_id", "copy_t_s", "copy_t_l",
            "link_copy", "link_neighbor", "link_t_s", "link_t_l",
        )
        return all(np.array_equal(getattr(self, c), getattr(other, c)) for c in columns)

    # ------------------------------------------------------------------
    # Invariants
    # ------------------------------------------------------------------

    def validate(self, strict_order: bool = True) -> "TemporalGraph":
        """Check the graph invariants, raising GraphValidationError on the first failure.

        ``strict_order`` also checks that consecutive copies of one host do not
        overlap in their [t_s, t_l] cores; densified graphs are checked
        without it.
        """
        n_copies = self.n_copies
        copy_columns = (self.copy_id, self.copy_t_s, self.copy_t_l)
        if any(len(column) != n_copies for column in copy_columns):
            raise GraphValidationError("copy columns have different lengths")
        link_columns = (self.link_neighbor, self.link_t_s, self.link_t_l)
        if any(len(column) != self.n_links for column in link_columns):
            raise GraphValidationError("link columns have different lengths")

        if n_copies:
            if self.copy_host.min() < 0 or self.copy_host.max() >= self.n_nodes:
                raise GraphValidationError("copy host id outside [0, n_nodes)")
            if np.any(self.copy_t_s < 0) or np.any(self.copy_t_s >= self.copy_t_l):
                raise GraphValidationError("every copy needs 0 <= t_s < t_l")
            if np.any(self.copy_t_l > self.horizon + self.delta_steps):
                raise GraphValidationError("copy departs after horizon + delta")
            if strict_order:
                order = np.lexsort((self.copy_t_s, self.copy_host))  # host-major
                hosts = self.copy_host[order]
                same_host = hosts[1:] == hosts[:-1]
                overlap = self.copy_t_s[order][1:] <= self.copy_t_l[order][:-1]
                if np.any(same_host & overlap):
                    raise GraphValidationError("consecutive copies of a host overlap")

        if self.n_links:
            if self.link_copy.min() < 0 or self.link_copy.max() >= n_copies:
                raise GraphValidationError("link references a missing active copy")
            if self.link_neighbor.min() < 0 or self.link_neighbor.max() >= self.n_nodes:
                raise GraphValidationError("link neighbor id outside [0, n_nodes)")
            if np.any(self.link_neighbor == self.link_host):
                raise GraphValidationError("self-link")
            copy_t_s = self.link_copy_t_s
            copy_t_l = self.link_copy_t_l
            if np.any(self.link_t_s < copy_t_s) or np.any(self.link_t_s > copy_t_l + self.delta_steps):
                raise GraphValidationError("link arrival outside [t_s, t_l + delta]")
            if np.any(self.link_t_s >= self.link_t_l):
                raise GraphValidationError("link needs t_s' < t_l'")
        return self

    def __repr__(self) -> str:
        return (
            f"TemporalGraph(n_nodes={self.n_nodes}, horizon={self.horizon}, "
            f"copies={self.n_copies}, links={self.n_links})"
        )
